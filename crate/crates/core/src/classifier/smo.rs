//! Soft-margin SVM dual solved by sequential minimal optimization.
//!
//! Minimizes `f(a) = 1/2 a'Qa - e'a` with `Q_ij = y_i y_j K(x_i, x_j)`
//! subject to `0 <= a_i <= C` and `y'a = 0`. Each step picks the maximal
//! violating pair and solves the two-variable subproblem in closed form.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use super::kernel::{Kernel, KernelSpec};
use crate::error::{Error, Result};
use crate::sparse::SparseVector;

/// Curvature substituted for non-positive pair curvature.
const TAU: f64 = 1e-12;

/// Problems up to this many rows get a precomputed Gram matrix.
pub const FULL_GRAM_LIMIT: usize = 2000;

pub const DEFAULT_TOL: f64 = 1e-3;

/// Kernel values between training rows.
pub trait GramSource {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn diag(&self, i: usize) -> f64;
    fn row(&self, i: usize) -> Cow<'_, [f64]>;
}

/// Precomputed symmetric Gram matrix, row-major.
#[derive(Debug, Clone)]
pub struct FullGram {
    n: usize,
    values: Vec<f64>,
}

impl FullGram {
    pub fn new(kernel: &Kernel, rows: &[&SparseVector]) -> Self {
        let n = rows.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let k = kernel.eval(rows[i], rows[j]);
                values[i * n + j] = k;
                values[j * n + i] = k;
            }
        }
        Self { n, values }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    /// Gram matrix restricted to `indices`.
    pub fn subset(&self, indices: &[usize]) -> FullGram {
        let n = indices.len();
        let mut values = Vec::with_capacity(n * n);
        for &i in indices {
            values.extend(indices.iter().map(|&j| self.get(i, j)));
        }
        FullGram { n, values }
    }
}

impl GramSource for FullGram {
    fn len(&self) -> usize {
        self.n
    }

    fn diag(&self, i: usize) -> f64 {
        self.get(i, i)
    }

    fn row(&self, i: usize) -> Cow<'_, [f64]> {
        Cow::Borrowed(&self.values[i * self.n..(i + 1) * self.n])
    }
}

/// Evaluates kernel rows on request; for problems too large to cache.
pub struct StreamingGram<'a> {
    kernel: Kernel,
    rows: Vec<&'a SparseVector>,
    diag: Vec<f64>,
}

impl<'a> StreamingGram<'a> {
    pub fn new(kernel: Kernel, rows: Vec<&'a SparseVector>) -> Self {
        let diag = rows.iter().map(|r| kernel.eval(r, r)).collect();
        Self { kernel, rows, diag }
    }
}

impl GramSource for StreamingGram<'_> {
    fn len(&self) -> usize {
        self.rows.len()
    }

    fn diag(&self, i: usize) -> f64 {
        self.diag[i]
    }

    fn row(&self, i: usize) -> Cow<'_, [f64]> {
        Cow::Owned(self.rows.iter().map(|r| self.kernel.eval(self.rows[i], r)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoParams {
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Record the dual objective after every update.
    pub record_objective: bool,
}

impl Default for SmoParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: DEFAULT_TOL,
            max_iter: 10_000_000,
            record_objective: false,
        }
    }
}

impl SmoParams {
    pub fn with_c(c: f64) -> Self {
        Self {
            c,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::arg(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::arg(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Result of a dual solve.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    /// Decision offset: `f(x) = sum_i a_i y_i K(x_i, x) - rho`.
    pub rho: f64,
    pub iterations: usize,
    /// Final `m(a) - M(a)` gap between the most violating pair.
    pub violation: f64,
    /// Dual objective `e'a - 1/2 a'Qa`.
    pub objective: f64,
    /// Dual objective after each accepted update, when recorded.
    pub objective_trace: Vec<f64>,
}

fn dual_objective(alpha: &[f64], grad: &[f64]) -> f64 {
    // f = 1/2 sum a_t (G_t - 1), dual = -f
    -0.5 * alpha.iter().zip(grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>()
}

/// Solves the dual for labels `y` in {-1, +1}.
pub fn solve_dual(gram: &dyn GramSource, y: &[f64], params: &SmoParams) -> Result<DualSolution> {
    params.validate()?;
    let n = gram.len();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: y.len(),
        });
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::arg("binary labels must be +1 or -1"));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::arg("binary SVM needs at least one sample of each class"));
    }

    let c = params.c;
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut trace = Vec::new();
    let mut iterations = 0;

    let violation = loop {
        // maximal violating pair
        let (mut i, mut g_max) = (usize::MAX, f64::NEG_INFINITY);
        let (mut j, mut g_min) = (usize::MAX, f64::INFINITY);
        for t in 0..n {
            let v = -y[t] * grad[t];
            let up = if y[t] > 0.0 { alpha[t] < c } else { alpha[t] > 0.0 };
            let low = if y[t] > 0.0 { alpha[t] > 0.0 } else { alpha[t] < c };
            if up && v > g_max {
                g_max = v;
                i = t;
            }
            if low && v < g_min {
                g_min = v;
                j = t;
            }
        }
        let gap = g_max - g_min;
        if i == usize::MAX || j == usize::MAX || gap < params.tol {
            break gap.max(0.0);
        }
        if iterations >= params.max_iter {
            return Err(Error::NonConvergence {
                iterations,
                violation: gap,
                objective: dual_objective(&alpha, &grad),
            });
        }
        iterations += 1;

        let k_i = gram.row(i);
        let k_j = gram.row(j);
        let q_ij = y[i] * y[j] * k_i[j];
        let (old_i, old_j) = (alpha[i], alpha[j]);

        if y[i] != y[j] {
            let quad = positive(gram.diag(i) + gram.diag(j) + 2.0 * q_ij);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = positive(gram.diag(i) + gram.diag(j) - 2.0 * q_ij);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (d_i, d_j) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k_i[t] * d_i + y[j] * k_j[t] * d_j);
        }
        if params.record_objective {
            trace.push(dual_objective(&alpha, &grad));
        }
    };

    let rho = compute_rho(&alpha, &grad, y, c);
    Ok(DualSolution {
        objective: dual_objective(&alpha, &grad),
        alpha,
        rho,
        iterations,
        violation,
        objective_trace: trace,
    })
}

fn positive(quad: f64) -> f64 {
    if quad > 0.0 {
        quad
    } else {
        TAU
    }
}

/// Mean of `y_i G_i` over free vectors, or the midpoint of the feasible
/// interval when none is free.
fn compute_rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    if free > 0 {
        sum_free / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

/// A trained two-class model. Positive decision values mean the `+1` class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryModel {
    pub kernel: Kernel,
    pub c: f64,
    pub support: Vec<SparseVector>,
    /// `a_i * y_i` for each support vector.
    pub coef: Vec<f64>,
    pub bias: f64,
}

impl BinaryModel {
    pub fn from_solution(kernel: Kernel, c: f64, rows: &[&SparseVector], y: &[f64], solution: &DualSolution) -> Self {
        let (support, coef) = rows
            .iter()
            .zip(y)
            .zip(&solution.alpha)
            .filter(|(_, &a)| a > 0.0)
            .map(|((r, &yi), &a)| ((*r).clone(), a * yi))
            .unzip();
        Self {
            kernel,
            c,
            support,
            coef,
            bias: -solution.rho,
        }
    }

    pub fn dim(&self) -> Option<usize> {
        self.support.first().map(SparseVector::dim)
    }

    pub fn decision(&self, x: &SparseVector) -> Result<f64> {
        if let Some(d) = self.dim() {
            if d != x.dim() {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: x.dim(),
                });
            }
        }
        Ok(self.decision_unchecked(x))
    }

    pub(crate) fn decision_unchecked(&self, x: &SparseVector) -> f64 {
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(sv, &c)| c * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias
    }
}

/// Gram source for `rows`, cached when small enough.
pub fn gram_for<'a>(kernel: Kernel, rows: Vec<&'a SparseVector>) -> Box<dyn GramSource + 'a> {
    if rows.len() <= FULL_GRAM_LIMIT {
        Box::new(FullGram::new(&kernel, &rows))
    } else {
        Box::new(StreamingGram::new(kernel, rows))
    }
}

/// Trains a binary soft-margin SVM and also returns the full dual solution.
pub fn fit_binary(
    rows: &[SparseVector],
    y: &[f64],
    spec: &KernelSpec,
    params: &SmoParams,
) -> Result<(BinaryModel, DualSolution)> {
    if let Some(first) = rows.first() {
        for r in rows {
            first.check_dim(r)?;
        }
    }
    let kernel = spec.resolve(rows)?;
    let refs: Vec<&SparseVector> = rows.iter().collect();
    let solution = solve_dual(gram_for(kernel, refs.clone()).as_ref(), y, params)?;
    let model = BinaryModel::from_solution(kernel, params.c, &refs, y, &solution);
    Ok((model, solution))
}

pub fn train_binary_svm(
    rows: &[SparseVector],
    y: &[f64],
    spec: &KernelSpec,
    c: f64,
    tol: f64,
) -> Result<BinaryModel> {
    let params = SmoParams {
        c,
        tol,
        ..SmoParams::default()
    };
    fit_binary(rows, y, spec, &params).map(|(m, _)| m)
}
