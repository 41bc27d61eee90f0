use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Assignment of sample indices to `k` test folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    /// Test indices of each fold, ascending.
    pub folds: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl FoldPlan {
    pub fn n_samples(&self) -> usize {
        self.folds.iter().map(Vec::len).sum()
    }

    pub fn test_indices(&self, fold: usize) -> &[usize] {
        &self.folds[fold]
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|&(f, _)| f != fold)
            .flat_map(|(_, v)| v.iter().copied())
            .collect();
        idx.sort_unstable();
        idx
    }

    /// Checks that the folds partition `0..n`.
    pub fn check_covers(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for &i in self.folds.iter().flatten() {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::arg(format!("fold plan does not partition {n} samples")));
            }
        }
        if seen.iter().all(|&s| s) {
            Ok(())
        } else {
            Err(Error::arg(format!("fold plan does not cover all {n} samples")))
        }
    }
}

/// Stratified k-fold assignment.
///
/// Each class's samples are shuffled with `seed`, then dealt round-robin
/// over the folds, continuing the fold cursor from one class to the next
/// (classes in sorted order). Per-class counts of any two folds differ by at
/// most one, as do fold sizes. Classes with fewer than `k` samples are still
/// dealt, with a warning.
pub fn stratified_kfold<S: AsRef<str>>(labels: &[S], k: usize, seed: u64) -> Result<FoldPlan> {
    let n = labels.len();
    if k < 2 {
        return Err(Error::arg(format!("need at least 2 folds, got {k}")));
    }
    if k > n {
        return Err(Error::arg(format!("{k} folds requested for only {n} samples")));
    }

    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(l.as_ref()).or_default().push(i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut warnings = Vec::new();
    let mut cursor = 0;
    for (class, mut members) in by_class {
        if members.len() < k {
            let msg = format!("class {class} has {} samples, fewer than {k} folds", members.len());
            log::warn!("{msg}");
            warnings.push(msg);
        }
        members.shuffle(&mut rng);
        for i in members {
            folds[cursor % k].push(i);
            cursor += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(FoldPlan { k, seed, folds, warnings })
}
