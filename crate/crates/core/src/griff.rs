//! Griffs: the pitch content played against one score note.
//!
//! Notes aligned with a score note are grouped into onset windows, each
//! window becomes a vector of intervals above the score's bass pitch, and the
//! vectors are encoded as `0_4_7|12`. Consecutive griff encodings joined by
//! `#` form n-grams.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Alignment, Performance, PerformanceKey, PerformanceNote, Score};

pub const DEFAULT_WINDOW_MS: f64 = 35.0;

/// The token of a griff that holds only the bass note.
pub const BASS_ONLY: &str = "0";

pub const INTERVAL_SEP: char = '_';
pub const VECTOR_SEP: char = '|';
pub const NGRAM_SEP: char = '#';

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GriffOptions {
    pub window_ms: f64,
    /// Keep restruck pitches inside one window instead of collapsing them.
    pub keep_duplicates: bool,
}

impl Default for GriffOptions {
    fn default() -> Self {
        Self {
            window_ms: DEFAULT_WINDOW_MS,
            keep_duplicates: false,
        }
    }
}

/// Interval vectors in onset order; the empty griff marks a deletion.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Griff {
    vectors: Vec<Vec<i32>>,
}

impl Griff {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a griff from vectors already in canonical form: every vector
    /// non-empty and sorted ascending.
    pub fn new(vectors: Vec<Vec<i32>>) -> Result<Self> {
        for v in &vectors {
            if v.is_empty() {
                return Err(Error::arg("griff vectors must be non-empty"));
            }
            if v.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::arg("griff vector intervals must be sorted ascending"));
            }
        }
        Ok(Self { vectors })
    }

    pub fn vectors(&self) -> &[Vec<i32>] {
        &self.vectors
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn encode(&self) -> GriffToken {
        encode(self)
    }

    /// Same griff with every interval shifted by `delta`.
    pub fn shifted(&self, delta: i32) -> Self {
        Self {
            vectors: self
                .vectors
                .iter()
                .map(|v| v.iter().map(|i| i + delta).collect())
                .collect(),
        }
    }
}

/// Canonical string encoding of a griff or griff n-gram.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GriffToken(String);

impl GriffToken {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_bass_only(&self) -> bool {
        self.0 == BASS_ONLY
    }

    /// Decodes a single griff token (no `#`).
    pub fn parse(text: &str) -> Result<Griff> {
        if text.is_empty() {
            return Ok(Griff::empty());
        }
        let bad = |message: &str| Error::Token {
            token: text.to_string(),
            message: message.to_string(),
        };
        let mut vectors = Vec::new();
        for vector in text.split(VECTOR_SEP) {
            let mut intervals = Vec::new();
            for interval in vector.split(INTERVAL_SEP) {
                intervals.push(parse_interval(interval).ok_or_else(|| bad("malformed interval"))?);
            }
            vectors.push(intervals);
        }
        Griff::new(vectors).map_err(|_| bad("intervals not sorted ascending"))
    }

    /// Decodes an n-gram token into its griffs.
    pub fn parse_ngram(text: &str) -> Result<Vec<Griff>> {
        text.split(NGRAM_SEP)
            .map(|part| {
                let g = Self::parse(part)?;
                if g.is_empty() {
                    return Err(Error::Token {
                        token: text.to_string(),
                        message: "empty griff inside n-gram".into(),
                    });
                }
                Ok(g)
            })
            .collect()
    }
}

impl fmt::Display for GriffToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for GriffToken {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Only the canonical decimal form: no `+`, no leading zeros, no `-0`.
fn parse_interval(s: &str) -> Option<i32> {
    let digits = s.strip_prefix('-').unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if digits.len() > 1 && digits.starts_with('0') {
        return None;
    }
    if s.starts_with('-') && digits == "0" {
        return None;
    }
    s.parse().ok()
}

pub fn encode(griff: &Griff) -> GriffToken {
    let mut out = String::new();
    for (i, v) in griff.vectors.iter().enumerate() {
        if i > 0 {
            out.push(VECTOR_SEP);
        }
        for (j, interval) in v.iter().enumerate() {
            if j > 0 {
                out.push(INTERVAL_SEP);
            }
            out.push_str(&interval.to_string());
        }
    }
    GriffToken(out)
}

/// Aligned notes per score ordinal. Insertions are skipped; deleted score
/// notes get an empty list. Notes keep their input order.
pub fn group_by_score_note<'a>(
    notes: &'a [PerformanceNote],
    alignment: &Alignment,
    score: &Score,
) -> Vec<Vec<&'a PerformanceNote>> {
    let map = alignment.score_note_of();
    let mut groups = vec![Vec::new(); score.len()];
    for note in notes {
        if let Some(ord) = map.get(note.note_id.as_str()).and_then(|id| score.ordinal_of(id)) {
            groups[ord].push(note);
        }
    }
    groups
}

/// Greedy anchor windowing: the earliest ungrouped note anchors a group, and
/// every note with onset `< anchor + window_ms` joins it.
pub fn segment_windows<'a>(
    notes: &[&'a PerformanceNote],
    window_ms: f64,
) -> Result<Vec<Vec<&'a PerformanceNote>>> {
    if !(window_ms > 0.0 && window_ms.is_finite()) {
        return Err(Error::arg(format!("window_ms must be positive, got {window_ms}")));
    }
    let mut sorted = notes.to_vec();
    sorted.sort_by(|a, b| a.onset_ms.total_cmp(&b.onset_ms).then(a.pitch.cmp(&b.pitch)));

    let mut groups: Vec<Vec<&PerformanceNote>> = Vec::new();
    let mut anchor = f64::NEG_INFINITY;
    for note in sorted {
        match groups.last_mut() {
            Some(group) if note.onset_ms < anchor + window_ms => group.push(note),
            _ => {
                anchor = note.onset_ms;
                groups.push(vec![note]);
            }
        }
    }
    Ok(groups)
}

/// Converts windowed groups to intervals above `bass_pitch`.
pub fn to_griff(groups: &[Vec<&PerformanceNote>], bass_pitch: u8, keep_duplicates: bool) -> Griff {
    let vectors = groups
        .iter()
        .filter(|g| !g.is_empty())
        .map(|g| {
            let mut v: Vec<i32> = g
                .iter()
                .map(|n| i32::from(n.pitch) - i32::from(bass_pitch))
                .collect();
            v.sort_unstable();
            if !keep_duplicates {
                v.dedup();
            }
            v
        })
        .collect();
    Griff { vectors }
}

/// A performance as one griff per score note, in score order.
#[derive(Debug, Clone, PartialEq)]
pub struct GriffSequence {
    pub source: PerformanceKey,
    pub window_ms: f64,
    pub griffs: Vec<Griff>,
}

impl GriffSequence {
    pub fn tokens(&self) -> Vec<GriffToken> {
        self.griffs.iter().map(encode).collect()
    }

    /// Tokens of the score notes in `range` only.
    pub fn tokens_in(&self, range: Range<usize>) -> Vec<GriffToken> {
        self.griffs[range].iter().map(encode).collect()
    }

    pub fn ngrams(&self, n: usize) -> Result<Vec<GriffToken>> {
        make_ngrams(&self.tokens(), n)
    }
}

pub fn extract_griffs(
    key: &PerformanceKey,
    performance: &Performance,
    score: &Score,
    options: GriffOptions,
) -> Result<GriffSequence> {
    let groups = group_by_score_note(performance.notes(), performance.alignment(), score);
    let griffs = groups
        .iter()
        .zip(score.notes())
        .map(|(notes, score_note)| {
            let windows = segment_windows(notes, options.window_ms)?;
            Ok(to_griff(&windows, score_note.pitch, options.keep_duplicates))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GriffSequence {
        source: key.clone(),
        window_ms: options.window_ms,
        griffs,
    })
}

/// Sliding n-grams over consecutive non-empty tokens. An empty token (a
/// deletion) breaks adjacency: no n-gram spans it.
pub fn make_ngrams(tokens: &[GriffToken], n: usize) -> Result<Vec<GriffToken>> {
    if n < 1 {
        return Err(Error::arg("n-gram order must be at least 1"));
    }
    let mut out = Vec::new();
    for run in tokens.split(GriffToken::is_empty) {
        for window in run.windows(n) {
            let joined = window
                .iter()
                .map(GriffToken::as_str)
                .collect::<Vec<_>>()
                .join(&NGRAM_SEP.to_string());
            out.push(GriffToken(joined));
        }
    }
    Ok(out)
}

/// One token per aligned note: its signed semitone distance from the aligned
/// score note, in performance order. Insertions are skipped.
pub fn intervals_repr(performance: &Performance, score: &Score) -> Vec<String> {
    performance
        .aligned_ordinals(score)
        .filter_map(|(note, ord)| {
            ord.map(|o| (i32::from(note.pitch) - i32::from(score.notes()[o].pitch)).to_string())
        })
        .collect()
}
