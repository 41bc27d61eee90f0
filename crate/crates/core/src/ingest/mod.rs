//! Performances, scores and alignments, and loading them from disk.

mod alignment;
mod manifest;
pub mod midi;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use alignment::{parse_alignment, write_alignment, AlignmentConverter, CanonicalCsv};
pub use manifest::{load_dataset, load_dataset_from_path, Manifest, ManifestNote, ManifestPerformance, ManifestScore};
pub use midi::{parse_midi, write_midi, MidiWarning, ParsedMidi};

/// One played note.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceNote {
    pub note_id: String,
    pub onset_ms: f64,
    pub offset_ms: f64,
    pub pitch: u8,
    pub velocity: u8,
}

impl PerformanceNote {
    pub fn new(note_id: impl Into<String>, onset_ms: f64, offset_ms: f64, pitch: u8, velocity: u8) -> Self {
        Self {
            note_id: note_id.into(),
            onset_ms,
            offset_ms,
            pitch,
            velocity,
        }
    }
}

/// A note of the continuo line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreNote {
    pub id: String,
    pub ordinal: usize,
    pub pitch: u8,
    /// Optional written spelling such as `F##3`; MIDI pitch alone cannot
    /// recover enharmonic spelling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spelling: Option<String>,
}

impl ScoreNote {
    pub fn new(id: impl Into<String>, ordinal: usize, pitch: u8) -> Self {
        Self {
            id: id.into(),
            ordinal,
            pitch,
            spelling: None,
        }
    }

    /// Written spelling if known, otherwise a sharp-based name with C4 = 60.
    pub fn spelling(&self) -> String {
        self.spelling.clone().unwrap_or_else(|| pitch_name(self.pitch))
    }
}

pub fn pitch_name(pitch: u8) -> String {
    const NAMES: [&str; 12] = ["C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"];
    let octave = i32::from(pitch) / 12 - 1;
    format!("{}{}", NAMES[usize::from(pitch % 12)], octave)
}

/// A continuo line: score notes ordered by ordinal `0..len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Score {
    name: String,
    notes: Vec<ScoreNote>,
    by_id: HashMap<String, usize>,
}

impl Score {
    /// Validates ids (unique), ordinals (exactly `0..len`) and pitches.
    pub fn new(name: impl Into<String>, mut notes: Vec<ScoreNote>) -> Result<Self> {
        let name = name.into();
        let bad = |message: String| Error::Dataset {
            entry: format!("score {name}"),
            message,
        };
        notes.sort_by_key(|n| n.ordinal);
        let mut by_id = HashMap::with_capacity(notes.len());
        for (i, note) in notes.iter().enumerate() {
            if note.ordinal != i {
                return Err(bad(format!(
                    "ordinals must be consecutive from 0; expected {i}, found {} ({})",
                    note.ordinal, note.id
                )));
            }
            if note.pitch > 127 {
                return Err(bad(format!("note {} has pitch {} > 127", note.id, note.pitch)));
            }
            if by_id.insert(note.id.clone(), i).is_some() {
                return Err(bad(format!("duplicate score note id {}", note.id)));
            }
        }
        Ok(Self { name, notes, by_id })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn notes(&self) -> &[ScoreNote] {
        &self.notes
    }

    pub fn len(&self) -> usize {
        self.notes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.notes.is_empty()
    }

    pub fn ordinal_of(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn note(&self, id: &str) -> Option<&ScoreNote> {
        self.ordinal_of(id).map(|i| &self.notes[i])
    }
}

/// Mapping of performance notes onto score notes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alignment {
    /// `(performance note id, score note id)` in file order.
    pub pairs: Vec<(String, String)>,
    /// Performance notes aligned to no score note.
    pub insertions: Vec<String>,
}

impl Alignment {
    /// Looks up the score note aligned with each performance note id.
    pub fn score_note_of(&self) -> HashMap<&str, &str> {
        self.pairs.iter().map(|(p, s)| (p.as_str(), s.as_str())).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PerformanceKey {
    pub score: String,
    pub player: String,
    pub take: String,
}

impl PerformanceKey {
    pub fn new(score: impl Into<String>, player: impl Into<String>, take: impl Into<String>) -> Self {
        Self {
            score: score.into(),
            player: player.into(),
            take: take.into(),
        }
    }
}

impl fmt::Display for PerformanceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.score, self.player, self.take)
    }
}

/// Notes of one performance with their alignment. Notes are sorted by onset
/// then pitch.
#[derive(Debug, Clone, PartialEq)]
pub struct Performance {
    notes: Vec<PerformanceNote>,
    alignment: Alignment,
}

impl Performance {
    pub fn notes(&self) -> &[PerformanceNote] {
        &self.notes
    }

    pub fn alignment(&self) -> &Alignment {
        &self.alignment
    }

    /// Each note paired with the ordinal of its aligned score note, or `None`
    /// for insertions.
    pub fn aligned_ordinals<'a>(&'a self, score: &'a Score) -> impl Iterator<Item = (&'a PerformanceNote, Option<usize>)> + 'a {
        let map = self.alignment.score_note_of();
        self.notes.iter().map(move |n| {
            let ord = map.get(n.note_id.as_str()).and_then(|s| score.ordinal_of(s));
            (n, ord)
        })
    }
}

/// Immutable collection of scores and aligned performances.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    scores: BTreeMap<String, Score>,
    performances: BTreeMap<PerformanceKey, Performance>,
}

impl Dataset {
    /// Validates and assembles a dataset.
    ///
    /// Performance notes are re-sorted by onset then pitch. Alignment pairs
    /// must reference existing notes on both sides, each performance note at
    /// most once; performance notes the alignment does not mention are
    /// recorded as insertions.
    pub fn new(
        scores: Vec<Score>,
        performances: Vec<(PerformanceKey, Vec<PerformanceNote>, Alignment)>,
    ) -> Result<Self> {
        let mut score_map = BTreeMap::new();
        for score in scores {
            let name = score.name.clone();
            if score_map.insert(name.clone(), score).is_some() {
                return Err(Error::Dataset {
                    entry: format!("score {name}"),
                    message: "duplicate score name".into(),
                });
            }
        }

        let mut perf_map = BTreeMap::new();
        for (key, notes, alignment) in performances {
            let bad = |message: String| Error::Dataset {
                entry: key.to_string(),
                message,
            };
            if key.player.is_empty() || key.take.is_empty() {
                return Err(bad("player and take must be non-empty".into()));
            }
            let score = score_map
                .get(&key.score)
                .ok_or_else(|| bad(format!("unknown score {}", key.score)))?;
            let perf = validate_performance(score, notes, alignment).map_err(bad)?;
            if perf_map.insert(key.clone(), perf).is_some() {
                return Err(bad("label collision: (score, player, take) listed twice".into()));
            }
        }
        Ok(Self {
            scores: score_map,
            performances: perf_map,
        })
    }

    pub fn scores(&self) -> impl Iterator<Item = &Score> {
        self.scores.values()
    }

    pub fn score(&self, name: &str) -> Result<&Score> {
        self.scores.get(name).ok_or_else(|| Error::Unknown {
            kind: "score",
            id: name.to_string(),
        })
    }

    pub fn performances(&self) -> impl Iterator<Item = (&PerformanceKey, &Performance)> {
        self.performances.iter()
    }

    pub fn performances_of<'a>(&'a self, score: &'a str) -> impl Iterator<Item = (&'a PerformanceKey, &'a Performance)> + 'a {
        self.performances.iter().filter(move |(k, _)| k.score == score)
    }

    pub fn performance(&self, key: &PerformanceKey) -> Option<&Performance> {
        self.performances.get(key)
    }

    pub fn len(&self) -> usize {
        self.performances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.performances.is_empty()
    }

    /// Sorted distinct player ids.
    pub fn players(&self) -> Vec<String> {
        let set: std::collections::BTreeSet<&str> = self.performances.keys().map(|k| k.player.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    /// Number of performances per `(score, player)`.
    pub fn counts_by_score_player(&self) -> BTreeMap<(String, String), usize> {
        let mut counts = BTreeMap::new();
        for key in self.performances.keys() {
            *counts.entry((key.score.clone(), key.player.clone())).or_insert(0) += 1;
        }
        counts
    }
}

fn validate_performance(
    score: &Score,
    mut notes: Vec<PerformanceNote>,
    alignment: Alignment,
) -> std::result::Result<Performance, String> {
    let mut ids = HashSet::with_capacity(notes.len());
    for n in &notes {
        if !(n.onset_ms.is_finite() && n.onset_ms >= 0.0 && n.offset_ms > n.onset_ms) {
            return Err(format!(
                "note {} has invalid times onset {} / offset {}",
                n.note_id, n.onset_ms, n.offset_ms
            ));
        }
        if n.pitch > 127 || n.velocity > 127 {
            return Err(format!("note {} has pitch/velocity out of range", n.note_id));
        }
        if !ids.insert(n.note_id.as_str()) {
            return Err(format!("duplicate performance note id {}", n.note_id));
        }
    }

    let mut seen: HashSet<&str> = HashSet::new();
    for (perf_id, score_id) in &alignment.pairs {
        if score.ordinal_of(score_id).is_none() {
            return Err(format!("unknown score note {score_id}"));
        }
        if !ids.contains(perf_id.as_str()) {
            return Err(format!("alignment references unknown performance note {perf_id}"));
        }
        if !seen.insert(perf_id) {
            return Err(format!("performance note {perf_id} aligned more than once"));
        }
    }
    for perf_id in &alignment.insertions {
        if !ids.contains(perf_id.as_str()) {
            return Err(format!("alignment references unknown performance note {perf_id}"));
        }
        if !seen.insert(perf_id) {
            return Err(format!("performance note {perf_id} is both aligned and inserted"));
        }
    }

    let mut alignment = alignment.clone();
    notes.sort_by(|a, b| a.onset_ms.total_cmp(&b.onset_ms).then(a.pitch.cmp(&b.pitch)));
    for n in &notes {
        if !seen.contains(n.note_id.as_str()) {
            alignment.insertions.push(n.note_id.clone());
        }
    }
    Ok(Performance { notes, alignment })
}
