use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cv::{cross_validate_profiles, VocabMode};
use super::folds::stratified_kfold;
use crate::classifier::SvmParams;
use crate::error::{Error, Result};
use crate::features::{profile, GriffProfile, Representation};
use crate::griff::{extract_griffs, GriffOptions, GriffSequence};
use crate::ingest::Dataset;

/// `length` consecutive score notes starting at ordinal `start`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub score: String,
    pub start: usize,
    pub length: usize,
}

impl SegmentSpec {
    pub fn new(score: impl Into<String>, start: usize, length: usize, score_len: usize) -> Result<Self> {
        if length == 0 || start + length > score_len {
            return Err(Error::arg(format!(
                "segment [{start}, {}) does not fit a score of {score_len} notes",
                start + length
            )));
        }
        Ok(Self {
            score: score.into(),
            start,
            length,
        })
    }

    pub fn contains(&self, ordinal: usize) -> bool {
        (self.start..self.start + self.length).contains(&ordinal)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentResult {
    pub segment: SegmentSpec,
    pub accuracy: f64,
}

/// Fixed-width bins over `[0, 1]`; the last bin is closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub n: usize,
    pub mean: f64,
    /// Sample skewness `g1`; zero when the values have no spread.
    pub skewness: f64,
}

pub fn histogram(values: &[f64], bins: usize) -> Histogram {
    let bins = bins.max(1);
    let mut counts = vec![0; bins];
    for &v in values {
        let b = ((v.clamp(0.0, 1.0) * bins as f64).floor() as usize).min(bins - 1);
        counts[b] += 1;
    }
    let n = values.len();
    let mean = if n == 0 { 0.0 } else { values.iter().sum::<f64>() / n as f64 };
    let moment = |p: i32| values.iter().map(|v| (v - mean).powi(p)).sum::<f64>() / n as f64;
    let m2 = if n == 0 { 0.0 } else { moment(2) };
    let skewness = if m2 > 0.0 { moment(3) / m2.powf(1.5) } else { 0.0 };
    Histogram {
        edges: (0..=bins).map(|i| i as f64 / bins as f64).collect(),
        counts,
        n,
        mean,
        skewness,
    }
}

pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentScan {
    pub score: String,
    pub k: usize,
    pub seed: u64,
    /// Per length, every stride-1 segment in start order.
    pub segments: BTreeMap<usize, Vec<SegmentResult>>,
    /// Per length, mean accuracy over the segments containing each ordinal.
    pub note_means: BTreeMap<usize, Vec<f64>>,
    pub histograms: BTreeMap<usize, Histogram>,
}

/// Griff-based classification restricted to sliding windows of score notes.
///
/// Every segment of every length reuses one fold plan over the score's
/// performances, so a segment spanning the whole score reproduces the
/// full-score cross-validation exactly.
#[allow(clippy::too_many_arguments)]
pub fn segment_scan(
    dataset: &Dataset,
    score: &str,
    lengths: &[usize],
    params: &SvmParams,
    k: usize,
    seed: u64,
    options: GriffOptions,
    vocab_mode: VocabMode,
) -> Result<SegmentScan> {
    let sc = dataset.score(score)?;
    let n_notes = sc.len();
    for &l in lengths {
        if l == 0 || l > n_notes {
            return Err(Error::arg(format!("segment length {l} is invalid for score {score} of {n_notes} notes")));
        }
    }

    let sequences: Vec<GriffSequence> = dataset
        .performances_of(score)
        .map(|(key, perf)| extract_griffs(key, perf, sc, options))
        .collect::<Result<_>>()?;
    let labels: Vec<&str> = sequences.iter().map(|s| s.source.player.as_str()).collect();
    let plan = stratified_kfold(&labels, k, seed)?;

    let mut specs = Vec::new();
    let mut lens: Vec<usize> = lengths.to_vec();
    lens.sort_unstable();
    lens.dedup();
    for &l in &lens {
        for start in 0..=n_notes - l {
            specs.push(SegmentSpec::new(score, start, l, n_notes)?);
        }
    }

    let results = specs
        .into_par_iter()
        .map(|spec| {
            let range = spec.start..spec.start + spec.length;
            let profiles: Vec<GriffProfile> = sequences
                .iter()
                .map(|s| profile(s.tokens_in(range.clone()).iter().map(|t| t.as_str()), Representation::Griffs, s.source.clone()))
                .collect();
            let report = cross_validate_profiles(&profiles, &plan, params, vocab_mode)?;
            Ok(SegmentResult {
                segment: spec,
                accuracy: report.accuracy,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut segments: BTreeMap<usize, Vec<SegmentResult>> = BTreeMap::new();
    for r in results {
        segments.entry(r.segment.length).or_default().push(r);
    }
    let mut note_means = BTreeMap::new();
    let mut histograms = BTreeMap::new();
    for (&l, rs) in &mut segments {
        rs.sort_by_key(|r| r.segment.start);
        let means = (0..n_notes)
            .map(|o| {
                let covering: Vec<f64> = rs.iter().filter(|r| r.segment.contains(o)).map(|r| r.accuracy).collect();
                covering.iter().sum::<f64>() / covering.len() as f64
            })
            .collect();
        note_means.insert(l, means);
        let accs: Vec<f64> = rs.iter().map(|r| r.accuracy).collect();
        histograms.insert(l, histogram(&accs, HISTOGRAM_BINS));
    }
    Ok(SegmentScan {
        score: score.to_string(),
        k,
        seed,
        segments,
        note_means,
        histograms,
    })
}
