//! Gaussian-process surrogates: kernels, posterior conditioning, confidence
//! bounds and information-gain estimates.

mod bounds;
mod cholesky;
mod info_gain;
mod kernel;
mod posterior;

pub use bounds::{beta_value, confidence_bounds, BetaMode, BetaSchedule};
pub(crate) use cholesky::LowerFactor;
pub use cholesky::JITTER_LADDER;
pub use info_gain::{info_gain_greedy, info_gain_greedy_path};
pub use kernel::{kernel_eval, KernelKind, KernelSpec};
pub use posterior::{posterior_predict, GpPosterior, Prediction, SurrogateSpec, REFACTOR_EVERY, VARIANCE_ROUNDOFF};

use crate::error::{Error, Result};

/// Factor a packed lower triangle, walking the jitter ladder.
pub(crate) fn cholesky_factor(packed: &[f64], n: usize) -> Result<(LowerFactor, f64)> {
    LowerFactor::factor_with_jitter(packed, n)
}

/// Evaluation history shared by all surrogates of one run: joint inputs
/// `x_t = (θ_t, z_t)` and one observation list per function (objective first).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    inputs: Vec<Vec<f64>>,
    observations: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(n_functions: usize) -> Self {
        Dataset { inputs: Vec::new(), observations: vec![Vec::new(); n_functions] }
    }

    pub fn push(&mut self, x: Vec<f64>, ys: &[f64]) -> Result<()> {
        if ys.len() != self.observations.len() {
            return Err(Error::DimensionMismatch { expected: self.observations.len(), got: ys.len() });
        }
        self.inputs.push(x);
        for (obs, y) in self.observations.iter_mut().zip(ys) {
            obs.push(*y);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn observations(&self, fn_index: usize) -> &[f64] {
        &self.observations[fn_index]
    }

    pub fn n_functions(&self) -> usize {
        self.observations.len()
    }
}

/// One posterior per function, objective first, all fed by the same inputs.
#[derive(Clone, Debug)]
pub struct SurrogateSet {
    models: Vec<GpPosterior>,
}

impl SurrogateSet {
    pub fn new(specs: &[SurrogateSpec]) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::invalid("need at least an objective surrogate"));
        }
        let models = specs.iter().map(GpPosterior::from_spec).collect::<Result<_>>()?;
        Ok(SurrogateSet { models })
    }

    /// Rebuild every posterior from a dataset in one batch factorization each.
    pub fn from_dataset(specs: &[SurrogateSpec], data: &Dataset) -> Result<Self> {
        if specs.len() != data.n_functions() {
            return Err(Error::DimensionMismatch { expected: specs.len(), got: data.n_functions() });
        }
        let models = specs
            .iter()
            .enumerate()
            .map(|(i, s)| {
                GpPosterior::fit(
                    s.kernel.clone(),
                    s.noise_variance,
                    data.inputs().to_vec(),
                    data.observations(i).to_vec(),
                )
            })
            .collect::<Result<_>>()?;
        Ok(SurrogateSet { models })
    }

    pub fn n_functions(&self) -> usize {
        self.models.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.models.len() - 1
    }

    pub fn models(&self) -> &[GpPosterior] {
        &self.models
    }

    pub fn objective(&self) -> &GpPosterior {
        &self.models[0]
    }

    pub fn len(&self) -> usize {
        self.models[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.models[0].is_empty()
    }

    pub fn push(&mut self, x: &[f64], ys: &[f64]) -> Result<()> {
        if ys.len() != self.models.len() {
            return Err(Error::DimensionMismatch { expected: self.models.len(), got: ys.len() });
        }
        for (m, y) in self.models.iter_mut().zip(ys) {
            m.push(x.to_vec(), *y)?;
        }
        Ok(())
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<Prediction>> {
        self.models.iter().map(|m| m.predict(x)).collect()
    }
}
