use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Scope, VocabMode};
use crate::classifier::{train_multiclass, SvmParams};
use crate::error::{Error, Result};
use crate::features::{bow_matrix, build_vocabulary, dataset_profiles, GriffProfile, Representation};
use crate::griff::GriffOptions;
use crate::ingest::{Dataset, PerformanceKey};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerRun {
    pub test: PerformanceKey,
    pub predicted: String,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerReport {
    pub player: String,
    pub scope: Scope,
    /// One run per performance of the player, in key order.
    pub runs: Vec<PlayerRun>,
    /// Correct runs over all runs.
    pub accuracy: f64,
    /// Accuracy over the runs of each score.
    pub per_score: BTreeMap<String, f64>,
}

/// Leaves out each performance of `player` in turn, trains on every other
/// performance of the same pool and predicts the held-out one.
pub fn player_focused(
    dataset: &Dataset,
    scope: Scope,
    player: &str,
    representation: Representation,
    options: GriffOptions,
    params: &SvmParams,
    vocab_mode: VocabMode,
) -> Result<PlayerReport> {
    if !dataset.players().iter().any(|p| p == player) {
        return Err(Error::Unknown {
            kind: "player",
            id: player.to_string(),
        });
    }

    let pools: Vec<Vec<GriffProfile>> = match scope {
        Scope::PerScore => dataset
            .scores()
            .map(|s| dataset_profiles(dataset, Some(s.name()), representation, options))
            .collect::<Result<_>>()?,
        Scope::WholeDataset => vec![dataset_profiles(dataset, None, representation, options)?],
    };

    let jobs: Vec<(&[GriffProfile], usize)> = pools
        .iter()
        .flat_map(|pool| {
            pool.iter()
                .enumerate()
                .filter(|(_, p)| p.label() == player)
                .map(move |(i, _)| (pool.as_slice(), i))
        })
        .collect();

    let mut runs = jobs
        .par_iter()
        .map(|&(pool, held_out)| {
            let train: Vec<GriffProfile> = pool
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != held_out)
                .map(|(_, p)| p.clone())
                .collect();
            let vocab = match vocab_mode {
                VocabMode::Corpus => build_vocabulary(pool)?,
                VocabMode::PerFold => build_vocabulary(&train)?,
            };
            let train_m = bow_matrix(&train, &vocab);
            let model = train_multiclass(&train_m.rows, &train_m.labels, params)?;
            let test_m = bow_matrix(std::slice::from_ref(&pool[held_out]), &vocab);
            let predicted = model.predict(&test_m.rows[0])?.to_string();
            Ok(PlayerRun {
                test: pool[held_out].source.clone(),
                correct: predicted == player,
                predicted,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    runs.sort_by(|a, b| a.test.cmp(&b.test));

    let rate = |rs: &[&PlayerRun]| rs.iter().filter(|r| r.correct).count() as f64 / rs.len() as f64;
    let mut by_score: BTreeMap<String, Vec<&PlayerRun>> = BTreeMap::new();
    for r in &runs {
        by_score.entry(r.test.score.clone()).or_default().push(r);
    }
    let per_score = by_score.iter().map(|(s, rs)| (s.clone(), rate(rs))).collect();
    let accuracy = rate(&runs.iter().collect::<Vec<_>>());
    Ok(PlayerReport {
        player: player.to_string(),
        scope,
        runs,
        accuracy,
        per_score,
    })
}
