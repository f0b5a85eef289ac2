use crate::error::{Error, Result};
use crate::gp::{SurrogateSet, SurrogateSpec};
use crate::grid::ThetaGrid;
use crate::metrics::{oracle_optimum, MetricsAccumulator};
use crate::problems::{ContextStream, Problem};
use crate::rng::noise_draw;
use crate::trace::{ExperimentTrace, StepRecord, TraceMeta};

use super::joint;

/// Everything a run reads but never mutates.
#[derive(Clone, Copy)]
pub struct RunEnv<'a> {
    pub problem: &'a dyn Problem,
    pub grid: &'a ThetaGrid,
    /// Surrogate model per function, objective first.
    pub surrogates: &'a [SurrogateSpec],
    /// Seeds the context sequence and the observation noise.
    pub seed: u64,
}

impl RunEnv<'_> {
    fn validate(&self) -> Result<()> {
        let n = self.problem.n_constraints() + 1;
        if self.surrogates.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: self.surrogates.len() });
        }
        let dim = self.problem.n_theta() + self.problem.n_z();
        for s in self.surrogates {
            if s.kernel.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: s.kernel.dim() });
            }
        }
        if self.grid.lattice().dim() != self.problem.n_theta() {
            return Err(Error::DimensionMismatch { expected: self.problem.n_theta(), got: self.grid.lattice().dim() });
        }
        Ok(())
    }
}

/// A choice made by a policy at one step.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    /// Grid index of `θ_t`.
    pub index: usize,
    /// Dual vector in force when choosing; empty for methods without one.
    pub lambda: Vec<f64>,
}

/// A per-step decision rule over the candidate grid.
pub trait Policy {
    fn name(&self) -> &str;

    /// Pick `θ_t` given the surrogates conditioned on steps `1..t`.
    fn select(&mut self, models: &SurrogateSet, t: usize, z: &[f64], grid: &ThetaGrid) -> Result<Selection>;
}

/// Mutable state of a run in progress.
pub struct RunState {
    models: SurrogateSet,
    contexts: ContextStream,
    metrics: MetricsAccumulator,
    rows: Vec<StepRecord>,
}

impl RunState {
    pub fn new(env: &RunEnv<'_>) -> Result<Self> {
        env.validate()?;
        Ok(RunState {
            models: SurrogateSet::new(env.surrogates)?,
            contexts: env.problem.context_generator().stream(env.seed),
            metrics: MetricsAccumulator::new(env.problem.n_constraints()),
            rows: Vec::new(),
        })
    }

    pub fn steps(&self) -> usize {
        self.rows.len()
    }

    pub fn models(&self) -> &SurrogateSet {
        &self.models
    }

    pub fn into_trace(self, env: &RunEnv<'_>, algorithm: &str) -> ExperimentTrace {
        ExperimentTrace {
            meta: TraceMeta {
                algorithm: algorithm.to_string(),
                problem: env.problem.name().to_string(),
                seed: env.seed,
                n_theta: env.problem.n_theta(),
                n_z: env.problem.n_z(),
                n_constraints: env.problem.n_constraints(),
                epochs: Vec::new(),
            },
            rows: self.rows,
        }
    }

    fn step(&mut self, env: &RunEnv<'_>, policy: &mut dyn Policy) -> Result<()> {
        let t = self.rows.len() + 1;
        let z = self.contexts.next().expect("context streams are infinite");
        let sel = policy.select(&self.models, t, &z, env.grid)?;
        if sel.index >= env.grid.len() {
            return Err(Error::invalid(format!("policy chose index {} outside the grid", sel.index)));
        }
        let theta = env.grid.point(sel.index).to_vec();
        let x = joint(&theta, &z);
        let sigma = self.models.predict(&x)?.iter().map(|p| p.std()).collect();
        let truth = env.problem.evaluate(&theta, &z)?;
        let noise = env.problem.noise_sigma();
        let observed: Vec<f64> = std::iter::once(truth.objective)
            .chain(truth.constraints.iter().copied())
            .enumerate()
            .map(|(i, v)| v + noise[i] * noise_draw(env.seed, i, t))
            .collect();
        let oracle = oracle_optimum(env.problem, &z, env.grid.points())?;
        self.metrics.update(truth.objective, oracle.f_star, &truth.constraints);
        self.models.push(&x, &observed)?;
        let lambda = if sel.lambda.is_empty() { vec![0.0; env.problem.n_constraints()] } else { sel.lambda };
        self.rows.push(StepRecord {
            t,
            context: z,
            theta,
            observed,
            true_objective: truth.objective,
            true_constraints: truth.constraints,
            optimal_objective: oracle.f_star,
            lambda,
            sigma,
            cum_regret: self.metrics.regret_cum,
            cum_constraints: self.metrics.violation_cum.clone(),
        });
        Ok(())
    }
}

/// Advance a run by `steps` steps; errors carry the failing step index.
pub fn run_steps(env: &RunEnv<'_>, state: &mut RunState, policy: &mut dyn Policy, steps: usize) -> Result<()> {
    for _ in 0..steps {
        let t = state.steps() + 1;
        state.step(env, policy).map_err(|e| e.at_step(t))?;
    }
    Ok(())
}

/// Run any policy from an empty dataset.
pub fn run_policy(env: &RunEnv<'_>, policy: &mut dyn Policy, steps: usize) -> Result<ExperimentTrace> {
    let mut state = RunState::new(env)?;
    run_steps(env, &mut state, policy, steps)?;
    let name = policy.name().to_string();
    Ok(state.into_trace(env, &name))
}
