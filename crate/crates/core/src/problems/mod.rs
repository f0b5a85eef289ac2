//! Benchmark problem families and context generators.

mod custom;
mod synthetic;
mod williams_otto;

pub use custom::FnProblem;
pub use synthetic::{sample_gp_instance, GpSampleConfig, GpSampledInstance, ANCHOR_NOISE_VARIANCE};
pub use williams_otto::{
    cstr_residual, cstr_steady_state, wo_objective, CstrConstants, SteadyState, WilliamsOttoInstance, NOMINAL_PRICES,
    SPECIES,
};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::invalid(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = Error;

    fn try_from(v: [f64; 2]) -> Result<Self> {
        Interval::new(v[0], v[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

/// True objective and constraint values at one `(θ, z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub constraints: Vec<f64>,
}

/// Seeded generator of the exogenous context sequence `z_1, z_2, ...`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContextGenerator {
    /// I.i.d. uniform draws over a box.
    Uniform { bounds: Vec<Interval> },
    /// Each component drawn uniformly from `[(1-α)P̄_i, (1+α)P̄_i]`.
    Price { nominal: Vec<f64>, alpha: f64 },
}

impl ContextGenerator {
    pub fn validate(&self) -> Result<()> {
        match self {
            ContextGenerator::Uniform { bounds } if bounds.is_empty() => {
                Err(Error::invalid("context box must have at least one dimension"))
            }
            ContextGenerator::Price { nominal, alpha } => {
                if nominal.iter().any(|p| !(*p > 0.0)) {
                    return Err(Error::invalid("nominal prices must be positive"));
                }
                if !(0.0..1.0).contains(alpha) {
                    return Err(Error::invalid(format!("alpha must lie in [0, 1), got {alpha}")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn stream(&self, seed: u64) -> ContextStream {
        ContextStream { generator: self.clone(), rng: crate::rng::stream(seed, &[crate::rng::purpose::CONTEXT]) }
    }

    pub fn sequence(&self, seed: u64, steps: usize) -> Vec<Vec<f64>> {
        self.stream(seed).take(steps).collect()
    }

    /// The box the contexts are drawn from.
    pub fn support(&self) -> Vec<Interval> {
        match self {
            ContextGenerator::Uniform { bounds } => bounds.clone(),
            ContextGenerator::Price { nominal, alpha } => {
                nominal.iter().map(|p| Interval { lo: (1.0 - alpha) * p, hi: (1.0 + alpha) * p }).collect()
            }
        }
    }
}

pub struct ContextStream {
    generator: ContextGenerator,
    rng: ChaCha8Rng,
}

impl Iterator for ContextStream {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        let rng = &mut self.rng;
        Some(match &self.generator {
            ContextGenerator::Uniform { bounds } => {
                bounds.iter().map(|b| b.lo + (b.hi - b.lo) * rng.random::<f64>()).collect()
            }
            ContextGenerator::Price { nominal, alpha } => {
                nominal.iter().map(|p| p * (1.0 + alpha * (2.0 * rng.random::<f64>() - 1.0))).collect()
            }
        })
    }
}

/// I.i.d. uniform contexts over `z_box`.
pub fn uniform_context_gen(z_box: Vec<Interval>, seed: u64) -> ContextStream {
    ContextGenerator::Uniform { bounds: z_box }.stream(seed)
}

/// Price contexts perturbed uniformly by up to `±alpha` around `nominal`.
pub fn price_context_gen(nominal: Vec<f64>, alpha: f64, seed: u64) -> ContextStream {
    ContextGenerator::Price { nominal, alpha }.stream(seed)
}

/// A constrained black-box problem: minimise `f(θ, z)` subject to
/// `g_i(θ, z) <= 0`, with `z` revealed before each decision.
///
/// Oracles are deterministic; observation noise is added by the caller.
pub trait Problem: Send + Sync {
    fn name(&self) -> &str;

    fn theta_box(&self) -> &[Interval];

    fn context_generator(&self) -> &ContextGenerator;

    fn n_constraints(&self) -> usize;

    /// Observation noise scale per function, objective first.
    fn noise_sigma(&self) -> Vec<f64>;

    fn evaluate(&self, theta: &[f64], z: &[f64]) -> Result<Evaluation>;

    fn n_theta(&self) -> usize {
        self.theta_box().len()
    }

    fn z_box(&self) -> Vec<Interval> {
        self.context_generator().support()
    }

    fn n_z(&self) -> usize {
        self.z_box().len()
    }

    fn objective(&self, theta: &[f64], z: &[f64]) -> Result<f64> {
        Ok(self.evaluate(theta, z)?.objective)
    }

    fn constraint(&self, i: usize, theta: &[f64], z: &[f64]) -> Result<f64> {
        self.evaluate(theta, z)?.constraints.get(i).copied().ok_or_else(|| Error::invalid(format!("no constraint {i}")))
    }

    /// A parameter vector known to be feasible for every context, if the
    /// problem declares one.
    fn declared_safe_seed(&self) -> Option<Vec<f64>> {
        None
    }
}

pub(crate) fn check_point(theta_box: &[Interval], theta: &[f64]) -> Result<()> {
    if theta.len() != theta_box.len() {
        return Err(Error::DimensionMismatch { expected: theta_box.len(), got: theta.len() });
    }
    Ok(())
}
