//! The primal-dual contextual BO loop and the shared run driver.

mod confidence;
mod run;
mod schedule;

pub use confidence::{gamma_grid, Confidence, GAMMA_GRID_SIZE};
pub use run::{run_policy, run_steps, Policy, RunEnv, RunState, Selection};
pub use schedule::{theory_epsilon, EpsilonValue, ScheduleConfig, ScheduleMode};

use crate::error::{Error, Result};
use crate::gp::{Prediction, SurrogateSet};
use crate::grid::ThetaGrid;
use crate::trace::{EpochInfo, ExperimentTrace};

/// Scaled dual vector `λ_t` with its step parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct DualState {
    pub lambda: Vec<f64>,
    pub eta: f64,
    pub epsilon: f64,
    pub slater_xi: Option<f64>,
}

impl DualState {
    pub fn new(lambda: Vec<f64>, eta: f64, epsilon: f64) -> Result<Self> {
        if lambda.iter().any(|l| !(*l >= 0.0)) {
            return Err(Error::invalid("dual vector must be nonnegative"));
        }
        Ok(DualState { lambda, eta, epsilon, slater_xi: None })
    }

    /// `λ ← [λ + l^g + ε]⁺`.
    pub fn update(&mut self, lcb_g: &[f64]) {
        for (l, g) in self.lambda.iter_mut().zip(lcb_g) {
            *l = (*l + g + self.epsilon).max(0.0);
        }
    }
}

pub fn dual_update(dual: &DualState, lcb_g_at_choice: &[f64]) -> Result<DualState> {
    if lcb_g_at_choice.len() != dual.lambda.len() {
        return Err(Error::DimensionMismatch { expected: dual.lambda.len(), got: lcb_g_at_choice.len() });
    }
    let mut next = dual.clone();
    next.update(lcb_g_at_choice);
    Ok(next)
}

/// The minimizer of `l^f + η λᵀ l^g` over the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct StepSuggestion {
    pub index: usize,
    pub theta: Vec<f64>,
    pub primal_objective_value: f64,
    pub lcb_f: f64,
    pub lcb_g: Vec<f64>,
}

pub(crate) fn joint(theta: &[f64], z: &[f64]) -> Vec<f64> {
    theta.iter().chain(z).copied().collect()
}

/// Posterior predictions for every function at every grid point under `z`.
pub fn predict_grid(models: &SurrogateSet, grid: &[Vec<f64>], z: &[f64]) -> Result<Vec<Vec<Prediction>>> {
    grid.iter().map(|theta| models.predict(&joint(theta, z))).collect()
}

/// Lower confidence bounds per grid point, objective first.
pub fn lower_bounds(predictions: &[Vec<Prediction>], confidence: &Confidence, t: usize) -> Result<Vec<Vec<f64>>> {
    let n = confidence.n_functions();
    let betas = (0..n).map(|i| confidence.beta_sqrt(i, t)).collect::<Result<Vec<_>>>()?;
    Ok(predictions
        .iter()
        .map(|ps| ps.iter().enumerate().map(|(i, p)| p.lower(betas[i], confidence.clip(i))).collect())
        .collect())
}

/// Minimize the primal surrogate over precomputed lower bounds; ties go to
/// the lowest index.
pub fn primal_argmin(lcb: &[Vec<f64>], dual: &DualState) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (j, l) in lcb.iter().enumerate() {
        let penalty: f64 = dual.lambda.iter().zip(&l[1..]).map(|(lam, g)| lam * g).sum();
        let value = l[0] + dual.eta * penalty;
        if best.is_none_or(|(_, v)| value < v) {
            best = Some((j, value));
        }
    }
    best
}

/// One primal step: `argmin_θ l^f_t(θ, z) + η λᵀ l^g_t(θ, z)` over the grid.
pub fn primal_update(
    models: &SurrogateSet,
    confidence: &Confidence,
    t: usize,
    dual: &DualState,
    z: &[f64],
    grid: &[Vec<f64>],
) -> Result<StepSuggestion> {
    if grid.is_empty() {
        return Err(Error::invalid("candidate grid is empty"));
    }
    if dual.lambda.len() != models.n_constraints() {
        return Err(Error::DimensionMismatch { expected: models.n_constraints(), got: dual.lambda.len() });
    }
    let lcb = lower_bounds(&predict_grid(models, grid, z)?, confidence, t)?;
    let (index, value) = primal_argmin(&lcb, dual).expect("nonempty grid");
    Ok(StepSuggestion {
        index,
        theta: grid[index].clone(),
        primal_objective_value: value,
        lcb_f: lcb[index][0],
        lcb_g: lcb[index][1..].to_vec(),
    })
}

/// Schedule plus confidence widths for a PDCBO run.
#[derive(Clone, Debug, PartialEq)]
pub struct PdcboSettings {
    pub schedule: ScheduleConfig,
    pub confidence: Confidence,
}

impl PdcboSettings {
    /// Initial dual state and epoch record for a run of the schedule's horizon.
    pub fn initial_dual(&self, n_constraints: usize) -> Result<(DualState, EpochInfo)> {
        let s = &self.schedule;
        s.validate()?;
        let eta = s.eta_value();
        let (lambda, epsilon, too_short, xi) = match s.mode {
            ScheduleMode::Practical => (vec![0.0; n_constraints], s.practical_epsilon, false, None),
            ScheduleMode::Theory => {
                if s.constraint_bounds.len() != n_constraints {
                    return Err(Error::DimensionMismatch { expected: n_constraints, got: s.constraint_bounds.len() });
                }
                let beta_tg =
                    (1..=n_constraints).map(|i| self.confidence.beta_sqrt(i, s.horizon)).collect::<Result<Vec<_>>>()?;
                let gamma_tg: Vec<f64> = (1..=n_constraints).map(|i| self.confidence.gamma(i, s.horizon)).collect();
                let eps = theory_epsilon(s, &beta_tg, &gamma_tg)?;
                if eps.horizon_too_short {
                    log::warn!(
                        "epsilon {:.4} exceeds half the Slater margin {:.4} at horizon {}",
                        eps.value,
                        s.slater_margin / 2.0,
                        s.horizon
                    );
                }
                (vec![s.lambda_level(); n_constraints], eps.value, eps.horizon_too_short, Some(s.slater_margin))
            }
        };
        let mut dual = DualState::new(lambda.clone(), eta, epsilon)?;
        dual.slater_xi = xi;
        let info = EpochInfo {
            start: 0,
            len: 0,
            eta,
            epsilon,
            initial_lambda: lambda,
            final_lambda: Vec::new(),
            dual_bound: s.dual_bound(),
            horizon_too_short: too_short,
        };
        Ok((dual, info))
    }
}

/// PDCBO as a [`Policy`]: primal step, then dual step on the chosen point.
#[derive(Clone, Debug)]
pub struct Pdcbo {
    pub confidence: Confidence,
    pub dual: DualState,
}

impl Policy for Pdcbo {
    fn name(&self) -> &str {
        "pdcbo"
    }

    fn select(&mut self, models: &SurrogateSet, t: usize, z: &[f64], grid: &ThetaGrid) -> Result<Selection> {
        let s = primal_update(models, &self.confidence, t, &self.dual, z, grid.points())?;
        let lambda = self.dual.lambda.clone();
        self.dual.update(&s.lcb_g);
        Ok(Selection { index: s.index, lambda })
    }
}

/// Run PDCBO for `steps` steps with the schedule's horizon constants.
pub fn run_pdcbo(env: &RunEnv<'_>, settings: &PdcboSettings, steps: usize) -> Result<ExperimentTrace> {
    run_with_epochs(env, settings, &[(settings.schedule.horizon, steps)])
}

/// Epoch lengths `T₀, 2T₀, 4T₀, …`, the last one truncated to fit `total`.
/// Each entry is `(nominal horizon, steps run)`.
pub fn doubling_epochs(initial: usize, total: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut nominal = initial.max(1);
    let mut used = 0;
    while used < total {
        let len = nominal.min(total - used);
        out.push((nominal, len));
        used += len;
        nominal *= 2;
    }
    out
}

/// PDCBO under the doubling trick: the dual state restarts every epoch with
/// that epoch's horizon constants; surrogate data carries over.
pub fn run_with_doubling(env: &RunEnv<'_>, settings: &PdcboSettings, total_steps: usize) -> Result<ExperimentTrace> {
    run_with_epochs(env, settings, &doubling_epochs(settings.schedule.initial_epoch, total_steps))
}

fn run_with_epochs(env: &RunEnv<'_>, settings: &PdcboSettings, epochs: &[(usize, usize)]) -> Result<ExperimentTrace> {
    let n = env.problem.n_constraints();
    let mut state = run::RunState::new(env)?;
    let mut infos = Vec::with_capacity(epochs.len());
    for &(horizon, len) in epochs {
        let epoch = PdcboSettings {
            schedule: settings.schedule.with_horizon(horizon),
            confidence: settings.confidence.clone(),
        };
        let (dual, mut info) = epoch.initial_dual(n)?;
        let mut policy = Pdcbo { confidence: settings.confidence.clone(), dual };
        info.start = state.steps();
        info.len = len;
        run_steps(env, &mut state, &mut policy, len)?;
        info.final_lambda = policy.dual.lambda.clone();
        infos.push(info);
    }
    let mut trace = state.into_trace(env, "pdcbo");
    trace.meta.epochs = infos;
    Ok(trace)
}

#[cfg(test)]
mod tests;
