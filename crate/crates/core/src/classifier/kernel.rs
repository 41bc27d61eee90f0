use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Polynomial,
    Rbf,
    Sigmoid,
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelKind::Linear => "linear",
            KernelKind::Polynomial => "poly",
            KernelKind::Rbf => "rbf",
            KernelKind::Sigmoid => "sigmoid",
        })
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(KernelKind::Linear),
            "poly" | "polynomial" => Ok(KernelKind::Polynomial),
            "rbf" => Ok(KernelKind::Rbf),
            "sigmoid" => Ok(KernelKind::Sigmoid),
            _ => Err(Error::arg(format!("unknown kernel {s:?}"))),
        }
    }
}

/// Kernel width: a fixed value, or `1 / (n_features * Var(X))` over the
/// training matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "GammaRepr", try_from = "GammaRepr")]
pub enum Gamma {
    Scale,
    Value(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum GammaRepr {
    Name(String),
    Value(f64),
}

impl From<Gamma> for GammaRepr {
    fn from(g: Gamma) -> Self {
        match g {
            Gamma::Scale => GammaRepr::Name("scale".into()),
            Gamma::Value(v) => GammaRepr::Value(v),
        }
    }
}

impl TryFrom<GammaRepr> for Gamma {
    type Error = Error;

    fn try_from(r: GammaRepr) -> Result<Self> {
        match r {
            GammaRepr::Name(s) => s.parse(),
            GammaRepr::Value(v) => Ok(Gamma::Value(v)),
        }
    }
}

impl FromStr for Gamma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "scale" {
            return Ok(Gamma::Scale);
        }
        s.parse::<f64>()
            .map(Gamma::Value)
            .map_err(|_| Error::arg(format!("gamma must be \"scale\" or a number, got {s:?}")))
    }
}

impl fmt::Display for Gamma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gamma::Scale => f.write_str("scale"),
            Gamma::Value(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub degree: u32,
    pub gamma: Gamma,
    pub coef0: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self {
            kind: KernelKind::Linear,
            degree: 3,
            gamma: Gamma::Scale,
            coef0: 0.0,
        }
    }
}

impl KernelSpec {
    pub fn linear() -> Self {
        Self::default()
    }

    pub fn rbf(gamma: f64) -> Self {
        Self {
            kind: KernelKind::Rbf,
            gamma: Gamma::Value(gamma),
            ..Self::default()
        }
    }

    pub fn polynomial(degree: u32, gamma: f64, coef0: f64) -> Self {
        Self {
            kind: KernelKind::Polynomial,
            degree,
            gamma: Gamma::Value(gamma),
            coef0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree < 1 {
            return Err(Error::arg("polynomial degree must be at least 1"));
        }
        if let Gamma::Value(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::arg(format!("gamma must be positive, got {g}")));
            }
        }
        if !self.coef0.is_finite() {
            return Err(Error::arg("coef0 must be finite"));
        }
        Ok(())
    }

    /// Fixes gamma against the training rows.
    pub fn resolve(&self, training: &[SparseVector]) -> Result<Kernel> {
        self.validate()?;
        let gamma = match self.gamma {
            Gamma::Value(g) => g,
            Gamma::Scale => scale_gamma(training),
        };
        Ok(Kernel {
            kind: self.kind,
            degree: self.degree,
            gamma,
            coef0: self.coef0,
        })
    }
}

/// `1 / (d * Var(X))` with the variance over all `n * d` entries; 1 when the
/// matrix is constant or empty.
pub fn scale_gamma(rows: &[SparseVector]) -> f64 {
    let d = rows.first().map_or(0, SparseVector::dim);
    let count = (rows.len() * d) as f64;
    if count == 0.0 {
        return 1.0;
    }
    let (sum, sq) = rows
        .iter()
        .flat_map(SparseVector::iter)
        .fold((0.0, 0.0), |(s, q), (_, v)| (s + v, q + v * v));
    let mean = sum / count;
    let var = sq / count - mean * mean;
    if var > 0.0 {
        1.0 / (d as f64 * var)
    } else {
        1.0
    }
}

/// A kernel with every parameter fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub kind: KernelKind,
    pub degree: u32,
    pub gamma: f64,
    pub coef0: f64,
}

impl Kernel {
    /// Unchecked evaluation; both vectors must have the same dimension.
    pub fn eval(&self, x: &SparseVector, y: &SparseVector) -> f64 {
        match self.kind {
            KernelKind::Linear => x.dot(y),
            KernelKind::Polynomial => (self.gamma * x.dot(y) + self.coef0).powi(self.degree as i32),
            KernelKind::Rbf => (-self.gamma * x.squared_distance(y)).exp(),
            KernelKind::Sigmoid => (self.gamma * x.dot(y) + self.coef0).tanh(),
        }
    }
}

pub fn kernel_eval(kernel: &Kernel, x: &SparseVector, y: &SparseVector) -> Result<f64> {
    x.check_dim(y)?;
    Ok(kernel.eval(x, y))
}
