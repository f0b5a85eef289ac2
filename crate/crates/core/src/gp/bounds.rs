use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `(max(μ - β½σ, -C), min(μ + β½σ, C))`.
///
/// When clipping inverts the interval (`|μ|` far outside `[-C, C]`) the
/// degenerate interval `(-C, C)` is returned and a warning logged.
pub fn confidence_bounds(mean: f64, std: f64, beta_sqrt: f64, clip: f64) -> (f64, f64) {
    let lower = (mean - beta_sqrt * std).max(-clip);
    let upper = (mean + beta_sqrt * std).min(clip);
    if lower > upper {
        log::warn!("confidence bounds crossed after clipping (mean {mean}, clip {clip}); using [-C, C]");
        return (-clip, clip);
    }
    (lower, upper)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaMode {
    Theory,
    Constant,
}

/// Confidence-width schedule `β½_{i,t}` for every function `i ∈ {0} ∪ [N]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaSchedule {
    pub mode: BetaMode,
    pub constant_value: f64,
    /// RKHS norm bound `C_i` per function, objective first.
    pub rkhs_bounds: Vec<f64>,
    /// Sub-Gaussian parameter of the observation noise.
    pub noise_sub_gaussian: f64,
    pub delta: f64,
    pub n_constraints: usize,
}

impl BetaSchedule {
    pub fn constant(value: f64, n_constraints: usize) -> Self {
        BetaSchedule {
            mode: BetaMode::Constant,
            constant_value: value,
            rkhs_bounds: vec![f64::INFINITY; n_constraints + 1],
            noise_sub_gaussian: 0.0,
            delta: 0.05,
            n_constraints,
        }
    }

    pub fn theory(rkhs_bounds: Vec<f64>, noise_sub_gaussian: f64, delta: f64) -> Result<Self> {
        if rkhs_bounds.is_empty() {
            return Err(Error::invalid("theory schedule needs at least the objective bound"));
        }
        let s = BetaSchedule {
            mode: BetaMode::Theory,
            constant_value: 1.0,
            n_constraints: rkhs_bounds.len() - 1,
            rkhs_bounds,
            noise_sub_gaussian,
            delta,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        match self.mode {
            BetaMode::Constant if !(self.constant_value > 0.0) => Err(Error::invalid("constant beta must be positive")),
            BetaMode::Theory if self.rkhs_bounds.len() != self.n_constraints + 1 => {
                Err(Error::DimensionMismatch { expected: self.n_constraints + 1, got: self.rkhs_bounds.len() })
            }
            _ => Ok(()),
        }
    }

    /// `β½_{i,t}`; `gamma_estimate` stands in for `γ_{i,t-1}`.
    pub fn value(&self, fn_index: usize, t: usize, gamma_estimate: f64) -> Result<f64> {
        self.validate()?;
        if t < 1 {
            return Err(Error::invalid("beta is defined for t >= 1"));
        }
        if !(gamma_estimate >= 0.0) {
            return Err(Error::invalid(format!("gamma must be >= 0, got {gamma_estimate}")));
        }
        match self.mode {
            BetaMode::Constant => Ok(self.constant_value),
            BetaMode::Theory => {
                let c = *self
                    .rkhs_bounds
                    .get(fn_index)
                    .ok_or_else(|| Error::invalid(format!("no RKHS bound for function {fn_index}")))?;
                let log_term = ((self.n_constraints as f64 + 1.0) / self.delta).ln();
                Ok(c + self.noise_sub_gaussian * (2.0 * (gamma_estimate + 1.0 + log_term)).sqrt())
            }
        }
    }

    /// Clip level `C_i` for function `i`; infinite when no bound is known.
    pub fn clip(&self, fn_index: usize) -> f64 {
        self.rkhs_bounds.get(fn_index).copied().unwrap_or(f64::INFINITY)
    }
}

pub fn beta_value(s: &BetaSchedule, fn_index: usize, t: usize, gamma_estimate: f64) -> Result<f64> {
    s.value(fn_index, t, gamma_estimate)
}
