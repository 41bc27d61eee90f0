use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::FoldPlan;
use crate::classifier::{train_multiclass, SvmParams};
use crate::error::{Error, Result};
use crate::features::{bow_matrix, build_vocabulary, FeatureMatrix, GriffProfile};

/// Where the bag-of-words vocabulary comes from during evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VocabMode {
    /// All performances under analysis, before splitting.
    #[default]
    Corpus,
    /// Training performances of each split only; unseen test tokens drop out.
    PerFold,
}

impl fmt::Display for VocabMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VocabMode::Corpus => "corpus",
            VocabMode::PerFold => "per-fold",
        })
    }
}

impl FromStr for VocabMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corpus" => Ok(VocabMode::Corpus),
            "per-fold" => Ok(VocabMode::PerFold),
            _ => Err(Error::arg(format!("unknown vocabulary mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub seed: u64,
    /// Mean of the per-fold accuracies.
    pub accuracy: f64,
    pub fold_accuracies: Vec<f64>,
    pub classes: Vec<String>,
    /// `confusion[true][predicted]`, pooled over folds.
    pub confusion: Vec<Vec<usize>>,
    /// Held-out prediction for every sample.
    pub predictions: Vec<String>,
}

fn assemble(plan: &FoldPlan, labels: &[String], fold_predictions: Vec<Vec<(usize, String)>>) -> CvReport {
    let classes: Vec<String> = labels
        .iter()
        .chain(fold_predictions.iter().flatten().map(|(_, p)| p))
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let pos = |c: &str| classes.binary_search_by(|x| x.as_str().cmp(c)).expect("class present");

    let mut confusion = vec![vec![0; classes.len()]; classes.len()];
    let mut predictions = vec![String::new(); labels.len()];
    let mut fold_accuracies = Vec::with_capacity(plan.k);
    for preds in fold_predictions {
        let correct = preds.iter().filter(|(i, p)| &labels[*i] == p).count();
        fold_accuracies.push(if preds.is_empty() { 0.0 } else { correct as f64 / preds.len() as f64 });
        for (i, p) in preds {
            confusion[pos(&labels[i])][pos(&p)] += 1;
            predictions[i] = p;
        }
    }
    CvReport {
        k: plan.k,
        seed: plan.seed,
        accuracy: fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64,
        fold_accuracies,
        classes,
        confusion,
        predictions,
    }
}

/// k-fold evaluation of a fixed feature matrix.
pub fn cross_validate(matrix: &FeatureMatrix, plan: &FoldPlan, params: &SvmParams) -> Result<CvReport> {
    plan.check_covers(matrix.n_rows())?;
    let per_fold = (0..plan.k)
        .into_par_iter()
        .map(|f| {
            let train = plan.train_indices(f);
            let rows: Vec<_> = train.iter().map(|&i| matrix.rows[i].clone()).collect();
            let labels: Vec<_> = train.iter().map(|&i| matrix.labels[i].clone()).collect();
            let model = train_multiclass(&rows, &labels, params)?;
            plan.test_indices(f)
                .iter()
                .map(|&i| Ok((i, model.predict(&matrix.rows[i])?.to_string())))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(plan, &matrix.labels, per_fold))
}

/// k-fold evaluation straight from profiles, building the vocabulary
/// according to `mode`.
pub fn cross_validate_profiles(
    profiles: &[GriffProfile],
    plan: &FoldPlan,
    params: &SvmParams,
    mode: VocabMode,
) -> Result<CvReport> {
    match mode {
        VocabMode::Corpus => {
            let vocab = build_vocabulary(profiles)?;
            cross_validate(&bow_matrix(profiles, &vocab), plan, params)
        }
        VocabMode::PerFold => {
            plan.check_covers(profiles.len())?;
            let labels: Vec<String> = profiles.iter().map(|p| p.label().to_string()).collect();
            let per_fold = (0..plan.k)
                .into_par_iter()
                .map(|f| {
                    let train: Vec<GriffProfile> = plan.train_indices(f).iter().map(|&i| profiles[i].clone()).collect();
                    let vocab = build_vocabulary(&train)?;
                    let train_m = bow_matrix(&train, &vocab);
                    let model = train_multiclass(&train_m.rows, &train_m.labels, params)?;
                    let test: Vec<GriffProfile> = plan.test_indices(f).iter().map(|&i| profiles[i].clone()).collect();
                    let test_m = bow_matrix(&test, &vocab);
                    plan.test_indices(f)
                        .iter()
                        .zip(&test_m.rows)
                        .map(|(&i, row)| Ok((i, model.predict(row)?.to_string())))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(assemble(plan, &labels, per_fold))
        }
    }
}
