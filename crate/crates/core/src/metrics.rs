//! Contextual regret, cumulative violation, lattice oracles and empirical
//! checks of the cumulative-σ and dual-boundedness inequalities.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::Problem;
use crate::trace::ExperimentTrace;

/// Constrained minimizer of the true objective over a candidate lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleSolution {
    pub index: usize,
    pub theta_star: Vec<f64>,
    pub f_star: f64,
}

/// Exhaustive search for `θ*(z)` over `grid`; ties go to the lowest index.
pub fn oracle_optimum(problem: &dyn Problem, z: &[f64], grid: &[Vec<f64>]) -> Result<OracleSolution> {
    let mut best: Option<(usize, f64)> = None;
    for (j, theta) in grid.iter().enumerate() {
        let e = problem.evaluate(theta, z)?;
        if e.constraints.iter().all(|g| *g <= 0.0) && best.is_none_or(|(_, f)| e.objective < f) {
            best = Some((j, e.objective));
        }
    }
    let (index, f_star) = best.ok_or_else(|| Error::InfeasibleContext { context: z.to_vec() })?;
    Ok(OracleSolution { index, theta_star: grid[index].clone(), f_star })
}

/// `‖[v]⁺‖₂`.
pub fn positive_part_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.max(0.0).powi(2)).sum::<f64>().sqrt()
}

/// Running sums behind the cumulative regret `R_T` and violation `V_T`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsAccumulator {
    pub regret_cum: f64,
    pub violation_cum: Vec<f64>,
    pub regret_history: Vec<f64>,
}

impl MetricsAccumulator {
    pub fn new(n_constraints: usize) -> Self {
        MetricsAccumulator { violation_cum: vec![0.0; n_constraints], ..Default::default() }
    }

    pub fn update(&mut self, true_f: f64, f_star: f64, true_g: &[f64]) {
        self.regret_cum += true_f - f_star;
        self.regret_history.push(self.regret_cum);
        for (acc, g) in self.violation_cum.iter_mut().zip(true_g) {
            *acc += g;
        }
    }

    pub fn steps(&self) -> usize {
        self.regret_history.len()
    }

    pub fn regret(&self) -> f64 {
        self.regret_cum
    }

    pub fn violation(&self) -> f64 {
        positive_part_norm(&self.violation_cum)
    }
}

pub fn update_metrics(mut acc: MetricsAccumulator, true_f: f64, f_star: f64, true_g: &[f64]) -> MetricsAccumulator {
    acc.update(true_f, f_star, true_g);
    acc
}

/// Uniform Slater margin over a set of contexts:
/// `min_z max_θ min_i -g_i(θ, z)`, with `θ` allowed to depend on `z`.
pub fn slater_margin(problem: &dyn Problem, grid: &[Vec<f64>], contexts: &[Vec<f64>]) -> Result<f64> {
    let mut margin = f64::INFINITY;
    for z in contexts {
        let mut best = f64::NEG_INFINITY;
        for theta in grid {
            let e = problem.evaluate(theta, z)?;
            let slack = e.constraints.iter().fold(f64::INFINITY, |m, g| m.min(-g));
            best = best.max(slack);
        }
        margin = margin.min(best);
    }
    Ok(margin)
}

/// The lattice point with the largest worst-case slack over `contexts`,
/// with that slack. Negative slack means no context-independent feasible
/// point exists on the lattice.
pub fn uniform_safe_point(problem: &dyn Problem, grid: &[Vec<f64>], contexts: &[Vec<f64>]) -> Result<(usize, f64)> {
    let mut best = (0, f64::NEG_INFINITY);
    for (j, theta) in grid.iter().enumerate() {
        let mut worst = f64::INFINITY;
        for z in contexts {
            let e = problem.evaluate(theta, z)?;
            worst = e.constraints.iter().fold(worst, |m, g| m.min(-g));
        }
        if worst > best.1 {
            best = (j, worst);
        }
    }
    Ok(best)
}

/// Both sides of `Σ_t σ_{t-1}(x_t) ≤ √(4(T+2)γ_T)` for one function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaSumCheck {
    pub fn_index: usize,
    /// Sum of unit-variance-scale posterior standard deviations.
    pub sigma_sum: f64,
    /// Bound evaluated with the greedy estimate itself.
    pub bound_greedy: f64,
    /// Bound with the greedy estimate inflated by `1/(1-1/e)`, which upper
    /// bounds the true maximum information gain over the grid.
    pub bound_certified: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaSumReport {
    pub steps: usize,
    pub checks: Vec<SigmaSumCheck>,
}

impl SigmaSumReport {
    pub fn holds(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

/// Cumulative-σ check on the unit-variance scale: each `σ_{i,t-1}(x_t)` is
/// divided by `√signal_variance[i]`, since the bound assumes `k(x, x) ≤ 1`.
/// Information gain is unchanged by scaling kernel and noise together, so
/// `gamma_estimate[i]` (the greedy estimate at the trace length) is used
/// as is.
pub fn check_sigma_sum(trace: &ExperimentTrace, gamma_estimate: &[f64], signal_variance: &[f64]) -> SigmaSumReport {
    let t = trace.len() as f64;
    let checks = gamma_estimate
        .iter()
        .enumerate()
        .map(|(i, &gamma)| {
            let scale = signal_variance.get(i).copied().unwrap_or(1.0).sqrt();
            let sigma_sum: f64 = trace.rows.iter().map(|r| r.sigma[i] / scale).sum();
            let bound_greedy = (4.0 * (t + 2.0) * gamma).sqrt();
            let bound_certified = (4.0 * (t + 2.0) * gamma / (1.0 - 1.0 / E)).sqrt();
            SigmaSumCheck { fn_index: i, sigma_sum, bound_greedy, bound_certified, holds: sigma_sum <= bound_certified }
        })
        .collect();
    SigmaSumReport { steps: trace.len(), checks }
}

/// `C_V(η) = (N/2)(4C₀/(ηξ) + 4‖C‖²/ξ)² + 2C₀/η + 2‖C‖²`.
pub fn dual_bound_constant(n_constraints: usize, c0: f64, c_norm: f64, eta: f64, xi: f64) -> f64 {
    let level = 4.0 * c0 / (eta * xi) + 4.0 * c_norm * c_norm / xi;
    0.5 * n_constraints as f64 * level * level + 2.0 * c0 / eta + 2.0 * c_norm * c_norm
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochDualCheck {
    pub epoch: usize,
    pub max_half_sq_norm: f64,
    pub bound: f64,
    pub holds: bool,
    pub horizon_too_short: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualBoundReport {
    /// Set when the trace carries no theory-mode schedule.
    pub skipped: Option<String>,
    pub epochs: Vec<EpochDualCheck>,
}

impl DualBoundReport {
    pub fn holds(&self) -> bool {
        self.epochs.iter().all(|e| e.holds)
    }

    pub fn max_ratio(&self) -> f64 {
        self.epochs.iter().map(|e| e.max_half_sq_norm / e.bound).fold(0.0, f64::max)
    }
}

fn half_sq(v: &[f64]) -> f64 {
    0.5 * v.iter().map(|x| x * x).sum::<f64>()
}

/// `max_t ½‖λ_t‖² ≤ C_V(η)` per epoch, over `λ_1 … λ_{T+1}`.
pub fn check_dual_bound(trace: &ExperimentTrace) -> DualBoundReport {
    let mut epochs = Vec::new();
    for (k, info) in trace.meta.epochs.iter().enumerate() {
        let Some(bound) = info.dual_bound else {
            return DualBoundReport {
                skipped: Some(format!("epoch {k} ran without the theory schedule")),
                epochs: Vec::new(),
            };
        };
        let rows = &trace.rows[info.start..(info.start + info.len).min(trace.rows.len())];
        let max_half_sq_norm = rows
            .iter()
            .map(|r| half_sq(&r.lambda))
            .chain([half_sq(&info.initial_lambda), half_sq(&info.final_lambda)])
            .fold(0.0, f64::max);
        epochs.push(EpochDualCheck {
            epoch: k,
            max_half_sq_norm,
            bound,
            holds: max_half_sq_norm <= bound,
            horizon_too_short: info.horizon_too_short,
        });
    }
    if epochs.is_empty() {
        return DualBoundReport { skipped: Some("no dual schedule recorded".into()), epochs };
    }
    DualBoundReport { skipped: None, epochs }
}
