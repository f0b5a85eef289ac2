use serde::{Deserialize, Serialize};

use super::bounds::confidence_bounds;
use super::cholesky::LowerFactor;
use super::kernel::KernelSpec;
use crate::error::{Error, Result};

/// Appended points between full refactorizations of `K + noise·I`.
pub const REFACTOR_EVERY: usize = 50;

/// Negative variances down to this value are treated as roundoff and clamped.
pub const VARIANCE_ROUNDOFF: f64 = -1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
}

impl Prediction {
    pub fn std(&self) -> f64 {
        self.variance.sqrt()
    }

    /// `(lower, upper)` confidence interval, clipped to `[-clip, clip]`.
    pub fn bounds(&self, beta_sqrt: f64, clip: f64) -> (f64, f64) {
        confidence_bounds(self.mean, self.std(), beta_sqrt, clip)
    }

    pub fn lower(&self, beta_sqrt: f64, clip: f64) -> f64 {
        self.bounds(beta_sqrt, clip).0
    }

    pub fn upper(&self, beta_sqrt: f64, clip: f64) -> f64 {
        self.bounds(beta_sqrt, clip).1
    }
}

/// Kernel and noise model of one surrogate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateSpec {
    pub kernel: KernelSpec,
    pub noise_variance: f64,
}

/// Zero-mean GP posterior for one function, conditioned on its observations.
///
/// Keeps the Cholesky factor of `K_t + noise·I` and `α = (K_t + noise·I)⁻¹ y`.
/// New points are appended with a rank-1 extension of the factor; every
/// [`REFACTOR_EVERY`] appends the factor is rebuilt from scratch.
#[derive(Clone, Debug)]
pub struct GpPosterior {
    kernel: KernelSpec,
    noise_variance: f64,
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    chol: LowerFactor,
    alpha: Vec<f64>,
    jitter: f64,
    appended: usize,
}

impl GpPosterior {
    pub fn new(kernel: KernelSpec, noise_variance: f64) -> Result<Self> {
        kernel.validate()?;
        if !(noise_variance.is_finite() && noise_variance >= 0.0) {
            return Err(Error::invalid(format!("noise variance must be >= 0, got {noise_variance}")));
        }
        Ok(GpPosterior {
            kernel,
            noise_variance,
            inputs: Vec::new(),
            targets: Vec::new(),
            chol: LowerFactor::default(),
            alpha: Vec::new(),
            jitter: 0.0,
            appended: 0,
        })
    }

    pub fn from_spec(spec: &SurrogateSpec) -> Result<Self> {
        Self::new(spec.kernel.clone(), spec.noise_variance)
    }

    /// Posterior conditioned on the given data in one batch factorization.
    pub fn fit(kernel: KernelSpec, noise_variance: f64, inputs: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        let mut gp = Self::new(kernel, noise_variance)?;
        if inputs.len() != targets.len() {
            return Err(Error::DimensionMismatch { expected: inputs.len(), got: targets.len() });
        }
        for x in &inputs {
            gp.check_dim(x)?;
        }
        gp.inputs = inputs;
        gp.targets = targets;
        gp.refactor()?;
        Ok(gp)
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Diagonal jitter currently in the factorization.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.kernel.dim() {
            return Err(Error::DimensionMismatch { expected: self.kernel.dim(), got: x.len() });
        }
        Ok(())
    }

    fn cross_covariances(&self, x: &[f64]) -> Vec<f64> {
        self.inputs.iter().map(|xi| self.kernel.eval_unchecked(xi, x)).collect()
    }

    fn refactor(&mut self) -> Result<()> {
        let n = self.inputs.len();
        let mut packed = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                let mut k = self.kernel.eval_unchecked(&self.inputs[i], &self.inputs[j]);
                if i == j {
                    k += self.noise_variance;
                }
                packed.push(k);
            }
        }
        let (chol, jitter) = LowerFactor::factor_with_jitter(&packed, n)?;
        self.chol = chol;
        self.jitter = jitter;
        self.appended = 0;
        self.solve_alpha();
        Ok(())
    }

    fn solve_alpha(&mut self) {
        self.alpha = self.chol.backward_transposed(&self.chol.forward(&self.targets));
    }

    /// Condition on one more observation `(x, y)`.
    pub fn push(&mut self, x: Vec<f64>, y: f64) -> Result<()> {
        self.check_dim(&x)?;
        if !y.is_finite() {
            return Err(Error::invalid(format!("observation must be finite, got {y}")));
        }
        let cross = self.cross_covariances(&x);
        let diag = self.kernel.prior_variance(&x) + self.noise_variance + self.jitter;
        self.inputs.push(x);
        self.targets.push(y);
        self.appended += 1;
        if self.appended >= REFACTOR_EVERY || !self.chol.try_append(&cross, diag) {
            self.refactor()
        } else {
            self.solve_alpha();
            Ok(())
        }
    }

    /// Posterior mean and variance at `x`.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        self.check_dim(x)?;
        let prior = self.kernel.prior_variance(x);
        if self.is_empty() {
            return Ok(Prediction { mean: 0.0, variance: prior });
        }
        let cross = self.cross_covariances(x);
        let mean = cross.iter().zip(&self.alpha).map(|(a, b)| a * b).sum();
        let v = self.chol.forward(&cross);
        let variance = prior - v.iter().map(|a| a * a).sum::<f64>();
        Ok(Prediction { mean, variance: clamp_variance(variance)? })
    }

    /// Posterior mean only; `O(t)` instead of the `O(t²)` variance solve.
    pub fn mean(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.inputs.iter().zip(&self.alpha).map(|(xi, a)| a * self.kernel.eval_unchecked(xi, x)).sum())
    }

    /// RKHS norm of the posterior mean `μ = Σ α_j k(·, x_j)`, i.e. `sqrt(αᵀ K α)`.
    pub fn mean_rkhs_norm(&self) -> f64 {
        // αᵀ K α = yᵀ α - (noise + jitter) ‖α‖²
        let y_alpha: f64 = self.targets.iter().zip(&self.alpha).map(|(a, b)| a * b).sum();
        let alpha_sq: f64 = self.alpha.iter().map(|a| a * a).sum();
        (y_alpha - (self.noise_variance + self.jitter) * alpha_sq).max(0.0).sqrt()
    }

    /// Posterior covariance `k_t(x1, x2)`.
    pub fn covariance(&self, x1: &[f64], x2: &[f64]) -> Result<f64> {
        self.check_dim(x1)?;
        self.check_dim(x2)?;
        let prior = self.kernel.eval_unchecked(x1, x2);
        if self.is_empty() {
            return Ok(prior);
        }
        let v1 = self.chol.forward(&self.cross_covariances(x1));
        let v2 = self.chol.forward(&self.cross_covariances(x2));
        Ok(prior - v1.iter().zip(&v2).map(|(a, b)| a * b).sum::<f64>())
    }
}

fn clamp_variance(v: f64) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else if v >= VARIANCE_ROUNDOFF {
        Ok(0.0)
    } else {
        Err(Error::NegativeVariance(v))
    }
}

/// Posterior mean and standard deviation at `x`.
pub fn posterior_predict(post: &GpPosterior, x: &[f64]) -> Result<(f64, f64)> {
    let p = post.predict(x)?;
    Ok((p.mean, p.std()))
}
