use std::collections::HashSet;

use super::{Alignment, PerformanceNote};
use crate::error::{Error, Result};

const HEADER: [&str; 2] = ["perf_note_id", "score_note_id"];

/// Adapts some on-disk alignment encoding to an [`Alignment`].
///
/// The canonical CSV is the only built-in encoding; other dataset-native
/// formats plug in here.
pub trait AlignmentConverter {
    fn convert(&self, text: &str, notes: &[PerformanceNote]) -> Result<Alignment>;
}

/// The canonical `perf_note_id,score_note_id` CSV.
#[derive(Debug, Clone, Copy, Default)]
pub struct CanonicalCsv;

impl AlignmentConverter for CanonicalCsv {
    fn convert(&self, text: &str, _notes: &[PerformanceNote]) -> Result<Alignment> {
        parse_alignment(text)
    }
}

/// Parses the canonical alignment CSV.
///
/// Rows with an empty score-note field are insertions. A performance note
/// may appear on at most one row.
pub fn parse_alignment(text: &str) -> Result<Alignment> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());

    let headers = reader.headers()?.clone();
    for (i, column) in headers.iter().enumerate() {
        if HEADER.get(i) != Some(&column) {
            return Err(Error::Alignment {
                line: 1,
                message: format!("unknown column {column:?}; expected header {}", HEADER.join(",")),
            });
        }
    }
    if headers.len() != HEADER.len() {
        return Err(Error::Alignment {
            line: 1,
            message: format!("expected header {}", HEADER.join(",")),
        });
    }

    let mut alignment = Alignment::default();
    let mut seen = HashSet::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 2 {
            return Err(Error::Alignment {
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let perf = record[0].trim();
        let score = record[1].trim();
        if perf.is_empty() {
            return Err(Error::Alignment {
                line,
                message: "empty performance note id".into(),
            });
        }
        if !seen.insert(perf.to_string()) {
            return Err(Error::Alignment {
                line,
                message: format!("performance note {perf} listed more than once"),
            });
        }
        if score.is_empty() {
            alignment.insertions.push(perf.to_string());
        } else {
            alignment.pairs.push((perf.to_string(), score.to_string()));
        }
    }
    Ok(alignment)
}

/// Serializes an alignment as canonical CSV: pairs first, then insertions.
pub fn write_alignment(alignment: &Alignment) -> String {
    let mut out = String::from("perf_note_id,score_note_id\n");
    for (p, s) in &alignment.pairs {
        out.push_str(p);
        out.push(',');
        out.push_str(s);
        out.push('\n');
    }
    for p in &alignment.insertions {
        out.push_str(p);
        out.push_str(",\n");
    }
    out
}
