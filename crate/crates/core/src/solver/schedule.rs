use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::dual_bound_constant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    /// `η = 1/√T`, `λ₁` and `ε` from the regret/violation analysis.
    Theory,
    /// Fixed `η`, `λ₁ = 0` and a small fixed `ε`.
    Practical,
}

/// Dual-step parameters for one run (or one doubling epoch).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleConfig {
    pub mode: ScheduleMode,
    pub horizon: usize,
    /// RKHS bound `C₀` of the objective (theory mode).
    pub objective_bound: f64,
    /// RKHS bounds `C_i` of the constraints (theory mode).
    pub constraint_bounds: Vec<f64>,
    /// Uniform Slater margin `ξ` (theory mode).
    pub slater_margin: f64,
    /// `η` in practical mode.
    pub eta: f64,
    pub practical_epsilon: f64,
    pub doubling: bool,
    /// First epoch length when doubling.
    pub initial_epoch: usize,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            mode: ScheduleMode::Practical,
            horizon: 300,
            objective_bound: 1.0,
            constraint_bounds: Vec::new(),
            slater_margin: 1.0,
            eta: 1.0,
            practical_epsilon: 0.0,
            doubling: false,
            initial_epoch: 1,
        }
    }
}

/// Slack `ε` with a flag for when it exceeds `ξ/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonValue {
    pub value: f64,
    pub horizon_too_short: bool,
}

impl ScheduleConfig {
    pub fn practical(horizon: usize, eta: f64, epsilon: f64) -> Result<Self> {
        let cfg = ScheduleConfig { horizon, eta, practical_epsilon: epsilon, ..Default::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn theory(
        horizon: usize,
        objective_bound: f64,
        constraint_bounds: Vec<f64>,
        slater_margin: f64,
    ) -> Result<Self> {
        let cfg = ScheduleConfig {
            mode: ScheduleMode::Theory,
            horizon,
            objective_bound,
            constraint_bounds,
            slater_margin,
            ..Default::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::invalid("horizon must be >= 1"));
        }
        if self.doubling && self.initial_epoch == 0 {
            return Err(Error::invalid("initial epoch must be >= 1"));
        }
        match self.mode {
            ScheduleMode::Practical => {
                if !(self.eta > 0.0 && self.eta.is_finite()) {
                    return Err(Error::invalid(format!("eta must be positive, got {}", self.eta)));
                }
                if !(self.practical_epsilon >= 0.0) {
                    return Err(Error::invalid("epsilon must be >= 0"));
                }
            }
            ScheduleMode::Theory => {
                if !(self.objective_bound > 0.0 && self.objective_bound.is_finite()) {
                    return Err(Error::invalid("objective RKHS bound must be positive and finite"));
                }
                if self.constraint_bounds.is_empty()
                    || self.constraint_bounds.iter().any(|c| !(*c > 0.0 && c.is_finite()))
                {
                    return Err(Error::invalid("constraint RKHS bounds must be positive and finite"));
                }
                if !(self.slater_margin > 0.0) {
                    return Err(Error::invalid("Slater margin must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Same schedule for a different horizon (one doubling epoch).
    pub fn with_horizon(&self, horizon: usize) -> Self {
        ScheduleConfig { horizon, ..self.clone() }
    }

    pub fn constraint_norm(&self) -> f64 {
        self.constraint_bounds.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn eta_value(&self) -> f64 {
        match self.mode {
            ScheduleMode::Theory => 1.0 / (self.horizon as f64).sqrt(),
            ScheduleMode::Practical => self.eta,
        }
    }

    /// `4C₀/(ηξ) + 4‖C‖²/ξ`, the per-component level of `λ₁` in theory mode.
    pub fn lambda_level(&self) -> f64 {
        let c = self.constraint_norm();
        4.0 * self.objective_bound / (self.eta_value() * self.slater_margin) + 4.0 * c * c / self.slater_margin
    }

    /// `C_V(η)` in theory mode.
    pub fn dual_bound(&self) -> Option<f64> {
        (self.mode == ScheduleMode::Theory).then(|| {
            dual_bound_constant(
                self.constraint_bounds.len(),
                self.objective_bound,
                self.constraint_norm(),
                self.eta_value(),
                self.slater_margin,
            )
        })
    }

    /// Theory-mode horizon needed for `ε ≤ ξ/2`, holding `β` and `γ` fixed
    /// at the given values; `None` if not reached by `limit`.
    pub fn required_horizon(&self, beta_tg: &[f64], gamma_tg: &[f64], limit: usize) -> Option<usize> {
        let ok =
            |t: usize| theory_epsilon(&self.with_horizon(t), beta_tg, gamma_tg).is_ok_and(|e| !e.horizon_too_short);
        if !ok(limit) {
            return None;
        }
        // ε is decreasing in T, so bisect on the flag.
        let (mut lo, mut hi) = (1usize, limit);
        if ok(lo) {
            return Some(lo);
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `ε = (√(N A² + 4C₀/η + 4‖C‖²) + 8‖β_T^g‖√(T‖γ_T^g‖)) / T` with `η = 1/√T`
/// and `A` the `λ₁` level. Values above `ξ/2` are returned with
/// `horizon_too_short` set.
pub fn theory_epsilon(cfg: &ScheduleConfig, beta_tg: &[f64], gamma_tg: &[f64]) -> Result<EpsilonValue> {
    if cfg.mode != ScheduleMode::Theory {
        return Err(Error::invalid("theory epsilon needs a theory-mode schedule"));
    }
    cfg.validate()?;
    if beta_tg.iter().chain(gamma_tg).any(|v| !(*v >= 0.0)) {
        return Err(Error::invalid("beta and gamma must be nonnegative"));
    }
    let t = cfg.horizon as f64;
    let eta = cfg.eta_value();
    let c = cfg.constraint_norm();
    let a = cfg.lambda_level();
    let n = cfg.constraint_bounds.len() as f64;
    let first = (n * a * a + 4.0 * cfg.objective_bound / eta + 4.0 * c * c).sqrt();
    let second = 8.0 * norm(beta_tg) * (t * norm(gamma_tg)).sqrt();
    let value = (first + second) / t;
    Ok(EpsilonValue { value, horizon_too_short: value > cfg.slater_margin / 2.0 })
}
