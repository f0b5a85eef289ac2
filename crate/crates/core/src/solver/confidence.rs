use crate::error::{Error, Result};
use crate::gp::{info_gain_greedy_path, BetaSchedule, Prediction, SurrogateSpec};
use crate::grid::halton_points;
use crate::problems::Interval;

/// Size of the low-discrepancy grid used for information-gain estimates.
pub const GAMMA_GRID_SIZE: usize = 256;

/// Confidence widths for every function, with the information-gain
/// estimates the theory schedule needs.
#[derive(Clone, Debug, PartialEq)]
pub struct Confidence {
    pub beta: BetaSchedule,
    /// Greedy `γ_{i,s}` for `s = 0..=horizon`, per function; empty when the
    /// schedule is constant.
    pub gamma_paths: Vec<Vec<f64>>,
}

/// Halton points over `Θ × Z` for information-gain estimates.
pub fn gamma_grid(theta_box: &[Interval], z_box: &[Interval]) -> Result<Vec<Vec<f64>>> {
    let joint: Vec<Interval> = theta_box.iter().chain(z_box).copied().collect();
    halton_points(&joint, GAMMA_GRID_SIZE)
}

impl Confidence {
    pub fn constant(beta_sqrt: f64, n_constraints: usize) -> Result<Self> {
        let beta = BetaSchedule::constant(beta_sqrt, n_constraints);
        beta.validate()?;
        Ok(Confidence { beta, gamma_paths: Vec::new() })
    }

    /// Theory widths; `γ` paths are precomputed once up to `horizon`.
    pub fn theory(beta: BetaSchedule, surrogates: &[SurrogateSpec], grid: &[Vec<f64>], horizon: usize) -> Result<Self> {
        beta.validate()?;
        if surrogates.len() != beta.n_constraints + 1 {
            return Err(Error::DimensionMismatch { expected: beta.n_constraints + 1, got: surrogates.len() });
        }
        let gamma_paths =
            surrogates.iter().map(|s| info_gain_greedy_path(&s.kernel, s.noise_variance, grid, horizon)).collect();
        Ok(Confidence { beta, gamma_paths })
    }

    pub fn n_functions(&self) -> usize {
        self.beta.n_constraints + 1
    }

    /// `γ_{i,t}`, held at its last value past the precomputed horizon.
    pub fn gamma(&self, fn_index: usize, t: usize) -> f64 {
        self.gamma_paths.get(fn_index).and_then(|p| p.get(t.min(p.len().saturating_sub(1)))).copied().unwrap_or(0.0)
    }

    /// `β½_{i,t}`, using `γ_{i,t-1}`.
    pub fn beta_sqrt(&self, fn_index: usize, t: usize) -> Result<f64> {
        self.beta.value(fn_index, t, self.gamma(fn_index, t.saturating_sub(1)))
    }

    pub fn clip(&self, fn_index: usize) -> f64 {
        self.beta.clip(fn_index)
    }

    /// `(l_{i,t}, u_{i,t})` for one prediction.
    pub fn bounds(&self, fn_index: usize, t: usize, p: &Prediction) -> Result<(f64, f64)> {
        Ok(p.bounds(self.beta_sqrt(fn_index, t)?, self.clip(fn_index)))
    }
}
