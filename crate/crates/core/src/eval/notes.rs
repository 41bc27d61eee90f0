use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Representation;
use crate::griff::{extract_griffs, GriffOptions};
use crate::ingest::{Dataset, PerformanceKey, Score};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoteStats {
    pub score: String,
    pub note_id: String,
    pub ordinal: usize,
    pub spelling: String,
    /// Distinct non-excluded griff tokens at the note.
    pub types: usize,
    /// Non-excluded griff tokens at the note, one per performance at most.
    pub occurrences: usize,
    /// `occurrences / types`, zero when there are no types.
    pub mean_usage: f64,
    /// Per segment length, mean accuracy of the segments containing the note.
    pub accuracy: BTreeMap<usize, f64>,
}

fn resolve<'a>(dataset: &'a Dataset, score: &str, note_id: &str) -> Result<(&'a Score, usize)> {
    let sc = dataset.score(score)?;
    let ordinal = sc.ordinal_of(note_id).ok_or_else(|| Error::Unknown {
        kind: "score note",
        id: format!("{score}:{note_id}"),
    })?;
    Ok((sc, ordinal))
}

/// The griff token each performance of `score` realizes at `note_id`, in
/// key order, with excluded tokens dropped.
pub fn note_griffs(
    dataset: &Dataset,
    score: &str,
    note_id: &str,
    options: GriffOptions,
) -> Result<Vec<(PerformanceKey, String)>> {
    let (sc, ordinal) = resolve(dataset, score, note_id)?;
    let mut out = Vec::new();
    for (key, perf) in dataset.performances_of(score) {
        let token = extract_griffs(key, perf, sc, options)?.griffs[ordinal].encode().into_string();
        if !Representation::Griffs.excludes(&token) {
            out.push((key.clone(), token));
        }
    }
    Ok(out)
}

/// Griff type counts at one score note. `accuracies` maps a segment length to
/// the per-ordinal mean accuracies of a segment scan over the same score.
pub fn note_stats(
    dataset: &Dataset,
    score: &str,
    note_id: &str,
    options: GriffOptions,
    accuracies: &BTreeMap<usize, Vec<f64>>,
) -> Result<NoteStats> {
    let (sc, ordinal) = resolve(dataset, score, note_id)?;
    let griffs = note_griffs(dataset, score, note_id, options)?;
    let mut types: Vec<&str> = griffs.iter().map(|(_, t)| t.as_str()).collect();
    types.sort_unstable();
    types.dedup();
    let occurrences = griffs.len();
    let mean_usage = if types.is_empty() { 0.0 } else { occurrences as f64 / types.len() as f64 };
    Ok(NoteStats {
        score: score.to_string(),
        note_id: note_id.to_string(),
        ordinal,
        spelling: sc.notes()[ordinal].spelling(),
        types: types.len(),
        occurrences,
        mean_usage,
        accuracy: accuracies
            .iter()
            .filter_map(|(&l, means)| means.get(ordinal).map(|&a| (l, a)))
            .collect(),
    })
}

/// Token × player count table at one score note.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GriffDistribution {
    pub score: String,
    pub note_id: String,
    /// Players performing the score, sorted.
    pub players: Vec<String>,
    /// Rows by descending total, then token.
    pub rows: Vec<(String, Vec<u32>)>,
}

impl GriffDistribution {
    pub fn total(&self) -> u64 {
        self.rows.iter().flat_map(|(_, c)| c).map(|&c| u64::from(c)).sum()
    }

    pub fn column_sums(&self) -> Vec<u32> {
        let mut sums = vec![0; self.players.len()];
        for (_, counts) in &self.rows {
            for (s, c) in sums.iter_mut().zip(counts) {
                *s += c;
            }
        }
        sums
    }
}

pub fn griff_distribution(
    dataset: &Dataset,
    score: &str,
    note_id: &str,
    options: GriffOptions,
) -> Result<GriffDistribution> {
    let griffs = note_griffs(dataset, score, note_id, options)?;
    let mut players: Vec<String> = dataset.performances_of(score).map(|(k, _)| k.player.clone()).collect();
    players.sort_unstable();
    players.dedup();

    let mut table: BTreeMap<String, Vec<u32>> = BTreeMap::new();
    for (key, token) in griffs {
        let col = players.binary_search(&key.player).expect("player of score");
        table.entry(token).or_insert_with(|| vec![0; players.len()])[col] += 1;
    }
    let mut rows: Vec<(String, Vec<u32>)> = table.into_iter().collect();
    rows.sort_by(|(ta, ca), (tb, cb)| {
        let sum = |c: &[u32]| c.iter().sum::<u32>();
        sum(cb).cmp(&sum(ca)).then_with(|| ta.cmp(tb))
    });
    Ok(GriffDistribution {
        score: score.to_string(),
        note_id: note_id.to_string(),
        players,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthConfig};

    fn cfg() -> SynthConfig {
        SynthConfig {
            scores: 1,
            players: 3,
            takes: 4,
            score_length: 6,
            palette_size: 3,
            common_ordinals: vec![2],
            ..SynthConfig::default()
        }
    }

    #[test]
    fn common_token_has_one_type() {
        let c = generate(&cfg()).unwrap();
        let means = BTreeMap::from([(1, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6])]);
        let s = note_stats(&c.dataset, "001", "n3", GriffOptions::default(), &means).unwrap();
        assert_eq!((s.ordinal, s.types, s.occurrences), (2, 1, 12));
        assert_eq!(s.mean_usage, 12.0);
        assert_eq!(s.accuracy[&1], 0.3);
        let d = griff_distribution(&c.dataset, "001", "n3", GriffOptions::default()).unwrap();
        assert_eq!(d.rows, vec![(c.common_token.clone().unwrap(), vec![4, 4, 4])]);
    }

    #[test]
    fn disjoint_palettes_give_block_diagonal_tables() {
        let c = generate(&cfg()).unwrap();
        for note in ["n1", "n2", "n4", "n5", "n6"] {
            let d = griff_distribution(&c.dataset, "001", note, GriffOptions::default()).unwrap();
            let s = note_stats(&c.dataset, "001", note, GriffOptions::default(), &BTreeMap::new()).unwrap();
            for (token, counts) in &d.rows {
                let owners: Vec<usize> = (0..3).filter(|&p| counts[p] > 0).collect();
                assert_eq!(owners.len(), 1);
                assert!(c.palettes[&d.players[owners[0]]].contains(token));
            }
            assert_eq!(d.total(), s.occurrences as u64);
            assert_eq!(d.column_sums().iter().map(|&x| x as usize).sum::<usize>(), s.occurrences);
            assert_eq!(d.rows.len(), s.types);
            let totals: Vec<u32> = d.rows.iter().map(|(_, c)| c.iter().sum()).collect();
            assert!(totals.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn unknown_note() {
        let c = generate(&cfg()).unwrap();
        assert!(note_stats(&c.dataset, "001", "n99", GriffOptions::default(), &BTreeMap::new()).is_err());
        assert!(griff_distribution(&c.dataset, "002", "n1", GriffOptions::default()).is_err());
    }
}
