//! Griff profiles, vocabularies and bag-of-words matrices.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::griff::{extract_griffs, intervals_repr, GriffOptions, GriffToken, BASS_ONLY};
use crate::ingest::{Dataset, Performance, PerformanceKey, Score};
use crate::sparse::SparseVector;

/// Which token stream a performance is turned into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Representation {
    /// One bass-relative interval per aligned note.
    Intervals,
    Griffs,
    /// Griff n-grams, `n >= 2`.
    NGrams(usize),
}

impl Representation {
    /// The four columns of the classification tables.
    pub const STANDARD: [Representation; 4] = [
        Representation::Intervals,
        Representation::Griffs,
        Representation::NGrams(2),
        Representation::NGrams(3),
    ];

    /// Whether `token` is left out of profiles and vocabularies. Empty griffs
    /// are always dropped; bass-only griffs are dropped for griff
    /// representations only.
    pub fn excludes(self, token: &str) -> bool {
        token.is_empty() || (self != Representation::Intervals && token == BASS_ONLY)
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Representation::Intervals => f.write_str("intervals"),
            Representation::Griffs => f.write_str("griff"),
            Representation::NGrams(n) => write!(f, "{n}gram"),
        }
    }
}

impl FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intervals" => Ok(Representation::Intervals),
            "griff" | "griffs" | "1gram" => Ok(Representation::Griffs),
            _ => s
                .strip_suffix("gram")
                .and_then(|n| n.parse::<usize>().ok())
                .filter(|&n| n >= 2)
                .map(Representation::NGrams)
                .ok_or_else(|| Error::arg(format!("unknown representation {s:?}"))),
        }
    }
}

impl From<Representation> for String {
    fn from(r: Representation) -> Self {
        r.to_string()
    }
}

impl TryFrom<String> for Representation {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Raw token stream of one performance, before exclusion.
pub fn performance_tokens(
    key: &PerformanceKey,
    performance: &Performance,
    score: &Score,
    representation: Representation,
    options: GriffOptions,
) -> Result<Vec<String>> {
    Ok(match representation {
        Representation::Intervals => intervals_repr(performance, score),
        Representation::Griffs => extract_griffs(key, performance, score, options)?
            .tokens()
            .into_iter()
            .map(GriffToken::into_string)
            .collect(),
        Representation::NGrams(n) => extract_griffs(key, performance, score, options)?
            .ngrams(n)?
            .into_iter()
            .map(GriffToken::into_string)
            .collect(),
    })
}

/// Per-performance token counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GriffProfile {
    pub source: PerformanceKey,
    pub representation: Representation,
    counts: BTreeMap<String, u32>,
}

impl GriffProfile {
    pub fn counts(&self) -> &BTreeMap<String, u32> {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.values().map(|&c| u64::from(c)).sum()
    }

    pub fn label(&self) -> &str {
        &self.source.player
    }
}

/// Counts tokens, dropping those the representation excludes.
pub fn profile<I, T>(tokens: I, representation: Representation, source: PerformanceKey) -> GriffProfile
where
    I: IntoIterator<Item = T>,
    T: AsRef<str>,
{
    let mut counts = BTreeMap::new();
    for t in tokens {
        let t = t.as_ref();
        if !representation.excludes(t) {
            *counts.entry(t.to_string()).or_insert(0) += 1;
        }
    }
    GriffProfile {
        source,
        representation,
        counts,
    }
}

/// Profiles of every performance of `score` (or of the whole dataset when
/// `score` is `None`), in key order.
pub fn dataset_profiles(
    dataset: &Dataset,
    score: Option<&str>,
    representation: Representation,
    options: GriffOptions,
) -> Result<Vec<GriffProfile>> {
    if let Some(name) = score {
        dataset.score(name)?;
    }
    let entries: Vec<_> = dataset
        .performances()
        .filter(|(k, _)| score.is_none_or(|s| k.score == s))
        .collect();
    entries
        .par_iter()
        .map(|(key, perf)| {
            let sc = dataset.score(&key.score)?;
            let tokens = performance_tokens(key, perf, sc, representation, options)?;
            Ok(profile(tokens, representation, (*key).clone()))
        })
        .collect()
}

/// Lexicographically ordered token set with column lookup.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn from_tokens<I, T>(tokens: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        let set: BTreeSet<String> = tokens.into_iter().map(Into::into).collect();
        let tokens: Vec<String> = set.into_iter().collect();
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self { tokens, index }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn column(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// One token per line.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for t in &self.tokens {
            out.push_str(t);
            out.push('\n');
        }
        out
    }
}

/// Union of the profiles' tokens. All profiles must share a representation.
pub fn build_vocabulary<'a, I>(profiles: I) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a GriffProfile>,
{
    let mut representation = None;
    let mut tokens = BTreeSet::new();
    for p in profiles {
        match representation {
            None => representation = Some(p.representation),
            Some(r) if r != p.representation => {
                return Err(Error::arg(format!(
                    "cannot mix representations {r} and {} in one vocabulary",
                    p.representation
                )))
            }
            _ => {}
        }
        tokens.extend(
            p.counts
                .keys()
                .filter(|t| !p.representation.excludes(t))
                .map(String::as_str),
        );
    }
    Ok(Vocabulary::from_tokens(tokens))
}

/// Bag-of-words counts, one row per performance, labelled by player.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub vocabulary: Vocabulary,
    pub rows: Vec<SparseVector>,
    pub labels: Vec<String>,
    pub sources: Vec<PerformanceKey>,
}

/// Projects profiles onto `vocabulary`. Tokens outside it are dropped.
pub fn bow_matrix(profiles: &[GriffProfile], vocabulary: &Vocabulary) -> FeatureMatrix {
    let rows = profiles
        .iter()
        .map(|p| {
            let entries = p
                .counts
                .iter()
                .filter_map(|(t, &c)| vocabulary.column(t).map(|j| (j, f64::from(c))))
                .collect();
            SparseVector::from_entries(vocabulary.len(), entries).expect("columns come from the vocabulary")
        })
        .collect();
    FeatureMatrix {
        vocabulary: vocabulary.clone(),
        rows,
        labels: profiles.iter().map(|p| p.label().to_string()).collect(),
        sources: profiles.iter().map(|p| p.source.clone()).collect(),
    }
}

#[derive(Serialize)]
struct Triplets<'a> {
    rows: usize,
    cols: usize,
    tokens: &'a [String],
    labels: &'a [String],
    sources: &'a [PerformanceKey],
    /// `(row, column, count)`
    entries: Vec<(usize, usize, f64)>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.rows[row].get(col)
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            vocabulary: self.vocabulary.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i].clone()).collect(),
            sources: indices.iter().map(|&i| self.sources[i].clone()).collect(),
        }
    }

    /// Dense CSV: `score,player,take` followed by one column per token.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["score".to_string(), "player".into(), "take".into()];
        header.extend(self.vocabulary.tokens().iter().cloned());
        w.write_record(&header)?;
        for (row, src) in self.rows.iter().zip(&self.sources) {
            let mut record = vec![src.score.clone(), src.player.clone(), src.take.clone()];
            record.extend(row.to_dense().iter().map(|v| format!("{v}")));
            w.write_record(&record)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::arg(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Sparse `(row, column, count)` triplets with tokens and labels.
    pub fn to_triplet_json(&self) -> Result<String> {
        let entries = self
            .rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |(j, v)| (i, j, v)))
            .collect();
        let t = Triplets {
            rows: self.n_rows(),
            cols: self.n_cols(),
            tokens: self.vocabulary.tokens(),
            labels: &self.labels,
            sources: &self.sources,
            entries,
        };
        Ok(serde_json::to_string_pretty(&t)?)
    }
}
