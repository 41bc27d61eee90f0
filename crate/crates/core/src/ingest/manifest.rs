use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{parse_alignment, parse_midi, Dataset, PerformanceKey, Score, ScoreNote};
use crate::error::{Error, Result};

/// JSON manifest describing a corpus on disk. Paths are relative to the
/// manifest's directory unless absolute.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub scores: Vec<ManifestScore>,
    #[serde(default)]
    pub performances: Vec<ManifestPerformance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestScore {
    pub name: String,
    pub notes: Vec<ManifestNote>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestNote {
    pub id: String,
    pub ordinal: usize,
    pub midi_pitch: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spelling: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestPerformance {
    pub score: String,
    pub player: String,
    pub take: String,
    pub midi_path: PathBuf,
    pub alignment_path: PathBuf,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Manifest(e.to_string()))
    }

    /// Every file the manifest references, resolved against `base_dir`.
    pub fn referenced_files(&self, base_dir: &Path) -> Vec<PathBuf> {
        self.performances
            .iter()
            .flat_map(|p| [base_dir.join(&p.midi_path), base_dir.join(&p.alignment_path)])
            .collect()
    }
}

/// Parses a manifest and loads every score, MIDI file and alignment it lists.
pub fn load_dataset(manifest_text: &str, base_dir: &Path) -> Result<Dataset> {
    let manifest = Manifest::parse(manifest_text)?;

    let scores = manifest
        .scores
        .iter()
        .map(|s| {
            let notes = s
                .notes
                .iter()
                .map(|n| ScoreNote {
                    id: n.id.clone(),
                    ordinal: n.ordinal,
                    pitch: n.midi_pitch,
                    spelling: n.spelling.clone(),
                })
                .collect();
            Score::new(s.name.clone(), notes)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut performances = Vec::with_capacity(manifest.performances.len());
    for p in &manifest.performances {
        let key = PerformanceKey::new(&p.score, &p.player, &p.take);
        let midi_path = base_dir.join(&p.midi_path);
        let bytes = fs::read(&midi_path).map_err(|e| Error::io(&midi_path, e))?;
        let parsed = parse_midi(&bytes).map_err(|e| Error::Dataset {
            entry: format!("{key} ({})", midi_path.display()),
            message: e.to_string(),
        })?;
        for w in &parsed.warnings {
            log::warn!("{}: track {} tick {}: {}", midi_path.display(), w.track, w.tick, w.message);
        }

        let alignment_path = base_dir.join(&p.alignment_path);
        let text = fs::read_to_string(&alignment_path).map_err(|e| Error::io(&alignment_path, e))?;
        let alignment = parse_alignment(&text).map_err(|e| Error::Dataset {
            entry: format!("{key} ({})", alignment_path.display()),
            message: e.to_string(),
        })?;
        performances.push((key, parsed.notes, alignment));
    }

    let dataset = Dataset::new(scores, performances)?;
    for ((score, player), n) in dataset.counts_by_score_player() {
        log::info!("loaded {n} performance(s) of {score} by {player}");
    }
    Ok(dataset)
}

pub fn load_dataset_from_path(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    load_dataset(&text, base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::midi::write_midi;
    use crate::ingest::PerformanceNote;

    fn write_fixture(dir: &Path, alignment: &str) -> String {
        let notes = vec![
            PerformanceNote::new("a", 0.0, 400.0, 48, 64),
            PerformanceNote::new("b", 5.0, 400.0, 64, 64),
        ];
        fs::write(dir.join("take1.mid"), write_midi(&notes)).unwrap();
        fs::write(dir.join("take1.csv"), alignment).unwrap();
        r#"{
          "scores": [{"name": "001", "notes": [
              {"id": "n3", "ordinal": 0, "midi_pitch": 48},
              {"id": "n7", "ordinal": 1, "midi_pitch": 43}]}],
          "performances": [{"score": "001", "player": "P1", "take": "1",
              "midi_path": "take1.mid", "alignment_path": "take1.csv"}]
        }"#
        .to_string()
    }

    #[test]
    fn loads_single_performance() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_fixture(dir.path(), "perf_note_id,score_note_id\np0,n3\np1,n3\n");
        let ds = load_dataset(&manifest, dir.path()).unwrap();
        assert_eq!(ds.len(), 1);
        let key = PerformanceKey::new("001", "P1", "1");
        let perf = ds.performance(&key).unwrap();
        assert_eq!(perf.notes().len(), 2);
        assert_eq!(perf.alignment().pairs.len(), 2);
        assert_eq!(ds.counts_by_score_player()[&("001".into(), "P1".into())], 1);
    }

    #[test]
    fn unknown_score_note_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_fixture(dir.path(), "perf_note_id,score_note_id\np0,n999\n");
        let err = load_dataset(&manifest, dir.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("unknown score note n999"), "{msg}");
        assert!(msg.contains("001/P1/1"), "{msg}");
    }

    #[test]
    fn missing_file_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_fixture(dir.path(), "perf_note_id,score_note_id\n");
        fs::remove_file(dir.path().join("take1.csv")).unwrap();
        let err = load_dataset(&manifest, dir.path()).unwrap_err();
        assert!(err.to_string().contains("take1.csv"));
    }

    #[test]
    fn empty_manifest_is_empty_dataset() {
        let ds = load_dataset("{}", Path::new(".")).unwrap();
        assert!(ds.is_empty());
    }

    #[test]
    fn unknown_manifest_field_rejected() {
        assert!(matches!(
            load_dataset(r#"{"scores": [], "extra": 1}"#, Path::new(".")),
            Err(Error::Manifest(_))
        ));
    }
}
