//! Kernel SVM classification: binary SMO solver, kernels, and multiclass
//! ensembles.

pub mod kernel;
pub mod smo;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseVector;

pub use kernel::{kernel_eval, Gamma, Kernel, KernelKind, KernelSpec};
pub use smo::{
    fit_binary, solve_dual, train_binary_svm, BinaryModel, DualSolution, FullGram, GramSource, SmoParams,
    StreamingGram,
};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MulticlassStrategy {
    #[default]
    Ovo,
    Ovr,
}

impl fmt::Display for MulticlassStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MulticlassStrategy::Ovo => "ovo",
            MulticlassStrategy::Ovr => "ovr",
        })
    }
}

impl FromStr for MulticlassStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ovo" => Ok(MulticlassStrategy::Ovo),
            "ovr" => Ok(MulticlassStrategy::Ovr),
            _ => Err(Error::arg(format!("unknown multiclass strategy {s:?}"))),
        }
    }
}

/// Everything needed to train a multiclass SVM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub kernel: KernelSpec,
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub multiclass: MulticlassStrategy,
}

impl Default for SvmParams {
    fn default() -> Self {
        let smo = SmoParams::default();
        Self {
            kernel: KernelSpec::default(),
            c: smo.c,
            tol: smo.tol,
            max_iter: smo.max_iter,
            multiclass: MulticlassStrategy::Ovo,
        }
    }
}

impl SvmParams {
    pub fn smo(&self) -> SmoParams {
        SmoParams {
            c: self.c,
            tol: self.tol,
            max_iter: self.max_iter,
            record_objective: false,
        }
    }
}

/// One binary model per unordered class pair; `+1` is the earlier class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvoModel {
    pub classes: Vec<String>,
    /// `(index of first class, index of second class, model)`, `first < second`.
    pub pairs: Vec<(usize, usize, BinaryModel)>,
}

/// One model per class against all others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvrModel {
    pub classes: Vec<String>,
    pub models: Vec<BinaryModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "lowercase")]
pub enum MulticlassModel {
    Ovo(OvoModel),
    Ovr(OvrModel),
}

/// Index of the largest score; ties go to the lowest index.
fn argmax_first<T: PartialOrd + Copy>(scores: &[T]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

impl OvoModel {
    /// Vote counting; a zero decision value votes for the earlier class and
    /// tied vote counts go to the earliest class.
    pub fn predict(&self, x: &SparseVector) -> Result<&str> {
        let mut votes = vec![0usize; self.classes.len()];
        for (a, b, model) in &self.pairs {
            if model.decision(x)? >= 0.0 {
                votes[*a] += 1;
            } else {
                votes[*b] += 1;
            }
        }
        Ok(&self.classes[argmax_first(&votes)])
    }
}

impl OvrModel {
    pub fn predict(&self, x: &SparseVector) -> Result<&str> {
        let scores = self.models.iter().map(|m| m.decision(x)).collect::<Result<Vec<_>>>()?;
        Ok(&self.classes[argmax_first(&scores)])
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    #[serde(flatten)]
    model: MulticlassModel,
}

impl MulticlassModel {
    pub fn classes(&self) -> &[String] {
        match self {
            MulticlassModel::Ovo(m) => &m.classes,
            MulticlassModel::Ovr(m) => &m.classes,
        }
    }

    pub fn binary_models(&self) -> Box<dyn Iterator<Item = &BinaryModel> + '_> {
        match self {
            MulticlassModel::Ovo(m) => Box::new(m.pairs.iter().map(|(_, _, b)| b)),
            MulticlassModel::Ovr(m) => Box::new(m.models.iter()),
        }
    }

    pub fn predict(&self, x: &SparseVector) -> Result<&str> {
        match self {
            MulticlassModel::Ovo(m) => m.predict(x),
            MulticlassModel::Ovr(m) => m.predict(x),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::arg(format!(
                "unsupported model format version {} (expected {MODEL_FORMAT_VERSION})",
                file.format_version
            )));
        }
        Ok(file.model)
    }
}

/// Trains a multiclass SVM on `rows` labelled by `labels`.
///
/// Gamma is resolved once over all rows. Pairwise (or per-class) binary
/// problems share one Gram matrix when it fits in memory and are trained in
/// parallel; results are assembled in class order.
pub fn train_multiclass(rows: &[SparseVector], labels: &[String], params: &SvmParams) -> Result<MulticlassModel> {
    if rows.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.len(),
            actual: labels.len(),
        });
    }
    if let Some(first) = rows.first() {
        for r in rows {
            first.check_dim(r)?;
        }
    }
    let classes: Vec<String> = labels.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    if classes.len() < 2 {
        return Err(Error::arg(format!(
            "need at least 2 classes to train, found {}",
            classes.len()
        )));
    }
    let class_of: Vec<usize> = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label in class list"))
        .collect();

    let kernel = params.kernel.resolve(rows)?;
    let refs: Vec<&SparseVector> = rows.iter().collect();
    let full = (rows.len() <= smo::FULL_GRAM_LIMIT).then(|| FullGram::new(&kernel, &refs));
    let smo_params = params.smo();

    let train = |indices: &[usize], y: &[f64]| -> Result<BinaryModel> {
        let sub_rows: Vec<&SparseVector> = indices.iter().map(|&i| refs[i]).collect();
        let solution = match &full {
            Some(g) => solve_dual(&g.subset(indices), y, &smo_params)?,
            None => solve_dual(&StreamingGram::new(kernel, sub_rows.clone()), y, &smo_params)?,
        };
        Ok(BinaryModel::from_solution(kernel, params.c, &sub_rows, y, &solution))
    };

    match params.multiclass {
        MulticlassStrategy::Ovo => {
            let pairs: Vec<(usize, usize)> = (0..classes.len())
                .flat_map(|a| (a + 1..classes.len()).map(move |b| (a, b)))
                .collect();
            let models = pairs
                .par_iter()
                .map(|&(a, b)| {
                    let indices: Vec<usize> = (0..rows.len()).filter(|&i| class_of[i] == a || class_of[i] == b).collect();
                    let y: Vec<f64> = indices.iter().map(|&i| if class_of[i] == a { 1.0 } else { -1.0 }).collect();
                    train(&indices, &y).map(|m| (a, b, m))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(MulticlassModel::Ovo(OvoModel { classes, pairs: models }))
        }
        MulticlassStrategy::Ovr => {
            let all: Vec<usize> = (0..rows.len()).collect();
            let models = (0..classes.len())
                .into_par_iter()
                .map(|k| {
                    let y: Vec<f64> = class_of.iter().map(|&c| if c == k { 1.0 } else { -1.0 }).collect();
                    train(&all, &y)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(MulticlassModel::Ovr(OvrModel { classes, models }))
        }
    }
}
