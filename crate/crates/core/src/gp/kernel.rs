use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    /// `σ² exp(-Σ ((x_d - x'_d) / ℓ_d)²)`. Note there is no factor ½ in the exponent.
    SquaredExponential,
    /// `σ² (1 + √5 r + 5r²/3) exp(-√5 r)` with `r` the lengthscale-weighted distance.
    Matern52,
    /// `σ² Σ x_d x'_d / ℓ_d²`.
    Linear,
}

/// Covariance function over the joint input `x = (θ, z)`.
///
/// `lengthscales` carries one entry per input dimension, parameter
/// dimensions first and context dimensions after.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub signal_variance: f64,
    pub lengthscales: Vec<f64>,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, signal_variance: f64, lengthscales: Vec<f64>) -> Result<Self> {
        let spec = KernelSpec { kind, signal_variance, lengthscales };
        spec.validate()?;
        Ok(spec)
    }

    pub fn squared_exponential(signal_variance: f64, lengthscales: Vec<f64>) -> Result<Self> {
        Self::new(KernelKind::SquaredExponential, signal_variance, lengthscales)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.signal_variance.is_finite() && self.signal_variance > 0.0) {
            return Err(Error::invalid(format!("signal variance must be positive, got {}", self.signal_variance)));
        }
        if self.lengthscales.is_empty() {
            return Err(Error::invalid("kernel needs at least one lengthscale"));
        }
        if let Some(l) = self.lengthscales.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::invalid(format!("lengthscales must be positive, got {l}")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    /// The same kernel divided by its signal variance, so that `k(x, x) <= 1`
    /// for the stationary kinds.
    pub fn normalized(&self) -> KernelSpec {
        KernelSpec { signal_variance: 1.0, ..self.clone() }
    }

    /// Checked evaluation of `k(x1, x2)`.
    pub fn eval(&self, x1: &[f64], x2: &[f64]) -> Result<f64> {
        for x in [x1, x2] {
            if x.len() != self.dim() {
                return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
            }
        }
        Ok(self.eval_unchecked(x1, x2))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x1: &[f64], x2: &[f64]) -> f64 {
        match self.kind {
            KernelKind::SquaredExponential => self.signal_variance * (-self.scaled_sq_dist(x1, x2)).exp(),
            KernelKind::Matern52 => {
                let r = self.scaled_sq_dist(x1, x2).sqrt();
                let s5r = 5f64.sqrt() * r;
                self.signal_variance * (1.0 + s5r + 5.0 * r * r / 3.0) * (-s5r).exp()
            }
            KernelKind::Linear => {
                let dot: f64 = x1.iter().zip(x2).zip(&self.lengthscales).map(|((a, b), l)| a * b / (l * l)).sum();
                self.signal_variance * dot
            }
        }
    }

    /// Prior variance `k(x, x)`.
    #[inline]
    pub fn prior_variance(&self, x: &[f64]) -> f64 {
        match self.kind {
            KernelKind::SquaredExponential | KernelKind::Matern52 => self.signal_variance,
            KernelKind::Linear => self.eval_unchecked(x, x),
        }
    }

    #[inline]
    fn scaled_sq_dist(&self, x1: &[f64], x2: &[f64]) -> f64 {
        x1.iter()
            .zip(x2)
            .zip(&self.lengthscales)
            .map(|((a, b), l)| {
                let d = (a - b) / l;
                d * d
            })
            .sum()
    }
}

/// Evaluate `k(x1, x2)` for `spec`.
pub fn kernel_eval(spec: &KernelSpec, x1: &[f64], x2: &[f64]) -> Result<f64> {
    spec.eval(x1, x2)
}
