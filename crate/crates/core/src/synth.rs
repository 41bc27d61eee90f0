//! Deterministic synthetic corpora with known per-player griff palettes.
//!
//! Every performance note is aligned to the score note it realizes, and the
//! griff each player intended at each note is kept as ground truth. Vectors
//! of one griff sit three windows apart and onsets are jittered by at most a
//! quarter window, so extraction recovers the intended shapes exactly when
//! nothing is deleted.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::griff::{Griff, DEFAULT_WINDOW_MS};
use crate::ingest::{
    write_alignment, write_midi, Alignment, Dataset, Manifest, ManifestNote, ManifestPerformance, ManifestScore,
    PerformanceKey, PerformanceNote, Score, ScoreNote,
};

const NOTE_DURATION_MS: f64 = 80.0;
const VELOCITY: u8 = 64;
const MAX_VECTORS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub scores: usize,
    pub players: usize,
    pub takes: usize,
    pub score_length: usize,
    /// Griff shapes per player.
    pub palette_size: usize,
    /// Fraction of each palette shared by all players; 0 gives disjoint
    /// palettes, 1 identical ones.
    pub overlap: f64,
    /// Standard deviation of onset noise, clamped to a quarter window.
    pub jitter_ms: f64,
    /// Independent drop probability of each performance note.
    pub deletion_prob: f64,
    pub window_ms: f64,
    /// Ordinals at which every performance plays one common shape.
    pub common_ordinals: Vec<usize>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            scores: 5,
            players: 7,
            takes: 5,
            score_length: 105,
            palette_size: 12,
            overlap: 0.0,
            jitter_ms: 0.0,
            deletion_prob: 0.0,
            window_ms: DEFAULT_WINDOW_MS,
            common_ordinals: Vec::new(),
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::arg(format!("synth config: {m}")));
        if self.scores == 0 || self.players == 0 || self.takes == 0 {
            return err("scores, players and takes must be positive".into());
        }
        if self.score_length == 0 {
            return err("score length must be at least 1".into());
        }
        if self.palette_size == 0 {
            return err("palette size must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.overlap) {
            return err(format!("overlap {} outside [0, 1]", self.overlap));
        }
        if !(0.0..=1.0).contains(&self.deletion_prob) {
            return err(format!("deletion probability {} outside [0, 1]", self.deletion_prob));
        }
        if !(self.jitter_ms >= 0.0 && self.jitter_ms.is_finite()) {
            return err(format!("jitter {} must be finite and non-negative", self.jitter_ms));
        }
        if !(self.window_ms > 0.0 && self.window_ms.is_finite()) {
            return err(format!("window {} must be positive", self.window_ms));
        }
        if let Some(&o) = self.common_ordinals.iter().find(|&&o| o >= self.score_length) {
            return err(format!("common ordinal {o} beyond score length {}", self.score_length));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn score_name(i: usize) -> String {
        format!("{:03}", i + 1)
    }

    pub fn player_name(i: usize) -> String {
        format!("P{}", i + 1)
    }

    /// Number of palette entries every player shares.
    pub fn shared_count(&self) -> usize {
        (self.overlap * self.palette_size as f64).round() as usize
    }
}

/// A generated corpus with the intended griff token of every score note.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub config: SynthConfig,
    pub dataset: Dataset,
    /// Per player, the sorted palette tokens.
    pub palettes: BTreeMap<String, Vec<String>>,
    /// Token shared at the common ordinals, if any.
    pub common_token: Option<String>,
    pub ground_truth: BTreeMap<PerformanceKey, Vec<String>>,
}

impl SynthCorpus {
    /// Distinct tokens across all palettes.
    pub fn palette_union(&self) -> BTreeSet<&str> {
        self.palettes.values().flatten().map(String::as_str).collect()
    }
}

fn random_shape(rng: &mut ChaCha8Rng) -> Griff {
    let n_vectors = rng.random_range(1..=MAX_VECTORS);
    let vectors = (0..n_vectors)
        .map(|_| {
            let size = rng.random_range(1..=3);
            let mut v: Vec<i32> = (0..size).map(|_| rng.random_range(-12..=24)).collect();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();
    Griff::new(vectors).expect("non-empty sorted vectors")
}

/// `count` distinct shapes, none of them bass-only.
fn shape_universe(rng: &mut ChaCha8Rng, count: usize) -> Vec<Griff> {
    let mut seen = BTreeSet::new();
    let mut shapes = Vec::with_capacity(count);
    while shapes.len() < count {
        let g = random_shape(rng);
        let token = g.encode();
        if !token.is_bass_only() && seen.insert(token) {
            shapes.push(g);
        }
    }
    shapes
}

struct Realized {
    notes: Vec<PerformanceNote>,
    alignment: Alignment,
    truth: Vec<String>,
}

fn realize(
    cfg: &SynthConfig,
    score: &Score,
    palette: &[Griff],
    common: Option<&Griff>,
    rng: &mut ChaCha8Rng,
) -> Realized {
    let w = cfg.window_ms;
    let vector_gap = 3.0 * w;
    let note_span = vector_gap * MAX_VECTORS as f64 + 4.0 * w;
    let bound = w / 4.0;
    let noise = Normal::new(0.0, cfg.jitter_ms).expect("validated jitter");

    let mut raw: Vec<(f64, u8, usize)> = Vec::new();
    let mut truth = Vec::with_capacity(score.len());
    for note in score.notes() {
        let shape = match common {
            Some(c) if cfg.common_ordinals.contains(&note.ordinal) => c,
            _ => palette.choose(rng).expect("non-empty palette"),
        };
        truth.push(shape.encode().into_string());
        let base = note_span * (note.ordinal as f64 + 1.0);
        for (j, vector) in shape.vectors().iter().enumerate() {
            for &interval in vector {
                let jitter = if cfg.jitter_ms > 0.0 {
                    noise.sample(rng).clamp(-bound, bound)
                } else {
                    0.0
                };
                let deleted = cfg.deletion_prob > 0.0 && rng.random_bool(cfg.deletion_prob);
                if !deleted {
                    let pitch = (i32::from(note.pitch) + interval) as u8;
                    raw.push(((base + j as f64 * vector_gap + jitter).round(), pitch, note.ordinal));
                }
            }
        }
    }

    // Same order a MIDI reader assigns ids in, so exported alignments stay valid.
    raw.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut notes = Vec::with_capacity(raw.len());
    let mut pairs = Vec::with_capacity(raw.len());
    for (i, (onset, pitch, ordinal)) in raw.into_iter().enumerate() {
        let id = format!("p{i}");
        pairs.push((id.clone(), score.notes()[ordinal].id.clone()));
        notes.push(PerformanceNote::new(id, onset, onset + NOTE_DURATION_MS, pitch, VELOCITY));
    }
    Realized {
        notes,
        alignment: Alignment {
            pairs,
            insertions: Vec::new(),
        },
        truth,
    }
}

pub fn generate(config: &SynthConfig) -> Result<SynthCorpus> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let shared = config.shared_count();
    let unique = config.palette_size - shared;
    let has_common = !config.common_ordinals.is_empty();
    let mut universe = shape_universe(&mut rng, shared + unique * config.players + usize::from(has_common));
    let common = has_common.then(|| universe.pop().expect("reserved shape"));
    let (shared_shapes, unique_shapes) = universe.split_at(shared);
    let palettes: Vec<Vec<Griff>> = (0..config.players)
        .map(|p| {
            let mut pal: Vec<Griff> = shared_shapes.to_vec();
            pal.extend_from_slice(&unique_shapes[p * unique..(p + 1) * unique]);
            pal
        })
        .collect();

    let scores: Vec<Score> = (0..config.scores)
        .map(|s| {
            let notes = (0..config.score_length)
                .map(|o| ScoreNote::new(format!("n{}", o + 1), o, rng.random_range(36..=52)))
                .collect();
            Score::new(SynthConfig::score_name(s), notes)
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize, usize)> = (0..config.scores)
        .flat_map(|s| (0..config.players).flat_map(move |p| (0..config.takes).map(move |t| (s, p, t))))
        .collect();
    let realized: Vec<(PerformanceKey, Realized)> = jobs
        .par_iter()
        .enumerate()
        .map(|(stream, &(s, p, t))| {
            let mut sub = ChaCha8Rng::seed_from_u64(config.seed);
            sub.set_stream(stream as u64 + 1);
            let key = PerformanceKey::new(SynthConfig::score_name(s), SynthConfig::player_name(p), (t + 1).to_string());
            (key, realize(config, &scores[s], &palettes[p], common.as_ref(), &mut sub))
        })
        .collect();

    let mut ground_truth = BTreeMap::new();
    let mut performances = Vec::with_capacity(realized.len());
    for (key, r) in realized {
        ground_truth.insert(key.clone(), r.truth);
        performances.push((key, r.notes, r.alignment));
    }
    let dataset = Dataset::new(scores, performances)?;

    let palettes = palettes
        .iter()
        .enumerate()
        .map(|(p, pal)| {
            let mut tokens: Vec<String> = pal.iter().map(|g| g.encode().into_string()).collect();
            tokens.sort_unstable();
            (SynthConfig::player_name(p), tokens)
        })
        .collect();
    Ok(SynthCorpus {
        config: config.clone(),
        dataset,
        palettes,
        common_token: common.map(|g| g.encode().into_string()),
        ground_truth,
    })
}

/// Writes the corpus as SMF files, alignment CSVs and `manifest.json` under
/// `dir`, returning the manifest path.
pub fn export(corpus: &SynthCorpus, dir: &Path) -> Result<PathBuf> {
    let io = |path: &Path, e| Error::io(path, e);
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut manifest = Manifest {
        scores: corpus
            .dataset
            .scores()
            .map(|s| ManifestScore {
                name: s.name().to_string(),
                notes: s
                    .notes()
                    .iter()
                    .map(|n| ManifestNote {
                        id: n.id.clone(),
                        ordinal: n.ordinal,
                        midi_pitch: n.pitch,
                        spelling: n.spelling.clone(),
                    })
                    .collect(),
            })
            .collect(),
        performances: Vec::new(),
    };
    for (key, perf) in corpus.dataset.performances() {
        let stem = format!("{}_{}_{}", key.score, key.player, key.take);
        let midi = PathBuf::from(format!("{stem}.mid"));
        let align = PathBuf::from(format!("{stem}.csv"));
        fs::write(dir.join(&midi), write_midi(perf.notes())).map_err(|e| io(&dir.join(&midi), e))?;
        fs::write(dir.join(&align), write_alignment(perf.alignment())).map_err(|e| io(&dir.join(&align), e))?;
        manifest.performances.push(ManifestPerformance {
            score: key.score.clone(),
            player: key.player.clone(),
            take: key.take.clone(),
            midi_path: midi,
            alignment_path: align,
        });
    }
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| io(&path, e))?;
    Ok(path)
}
