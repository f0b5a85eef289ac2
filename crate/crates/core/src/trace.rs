//! Per-step records of a run.

use serde::{Deserialize, Serialize};

/// One executed step. Vectors over functions put the objective first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based step index.
    pub t: usize,
    pub context: Vec<f64>,
    pub theta: Vec<f64>,
    /// Noisy observations returned to the optimizer.
    pub observed: Vec<f64>,
    pub true_objective: f64,
    pub true_constraints: Vec<f64>,
    /// Lattice optimum `f(θ*(z_t), z_t)`.
    pub optimal_objective: f64,
    /// Dual vector used to pick `θ_t`; zeros for methods without one.
    pub lambda: Vec<f64>,
    /// Posterior standard deviation `σ_{i,t-1}(x_t)` at the chosen point.
    pub sigma: Vec<f64>,
    pub cum_regret: f64,
    pub cum_constraints: Vec<f64>,
}

impl StepRecord {
    pub fn regret(&self) -> f64 {
        self.true_objective - self.optimal_objective
    }
}

/// Dual schedule in force during one epoch of a PDCBO run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochInfo {
    /// Index into `rows` of the first step of the epoch.
    pub start: usize,
    pub len: usize,
    pub eta: f64,
    pub epsilon: f64,
    pub initial_lambda: Vec<f64>,
    /// Dual vector after the epoch's last update.
    pub final_lambda: Vec<f64>,
    /// `C_V(η)`, when the schedule is the theory one.
    pub dual_bound: Option<f64>,
    pub horizon_too_short: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub algorithm: String,
    pub problem: String,
    pub seed: u64,
    pub n_theta: usize,
    pub n_z: usize,
    pub n_constraints: usize,
    #[serde(default)]
    pub epochs: Vec<EpochInfo>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTrace {
    pub meta: TraceMeta,
    pub rows: Vec<StepRecord>,
}

impl ExperimentTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn final_regret(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.cum_regret)
    }

    pub fn final_constraints(&self) -> Vec<f64> {
        self.rows.last().map_or_else(|| vec![0.0; self.meta.n_constraints], |r| r.cum_constraints.clone())
    }

    /// `‖[Σ_t g(θ_t, z_t)]⁺‖` at the last step.
    pub fn final_violation(&self) -> f64 {
        crate::metrics::positive_part_norm(&self.final_constraints())
    }

    /// Epoch boundaries as cumulative step counts, e.g. `[1, 3, 7]`.
    pub fn epoch_ends(&self) -> Vec<usize> {
        self.meta.epochs.iter().map(|e| e.start + e.len).collect()
    }
}
