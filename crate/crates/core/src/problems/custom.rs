use std::fmt;

use super::{check_point, ContextGenerator, Evaluation, Interval, Problem};
use crate::error::{Error, Result};

type Oracle = dyn Fn(&[f64], &[f64]) -> Evaluation + Send + Sync;

/// A problem defined by a closure returning objective and constraints.
pub struct FnProblem {
    name: String,
    theta_box: Vec<Interval>,
    contexts: ContextGenerator,
    n_constraints: usize,
    noise_sigma: Vec<f64>,
    safe_seed: Option<Vec<f64>>,
    oracle: Box<Oracle>,
}

impl FnProblem {
    pub fn new(
        name: impl Into<String>,
        theta_box: Vec<Interval>,
        contexts: ContextGenerator,
        n_constraints: usize,
        oracle: impl Fn(&[f64], &[f64]) -> Evaluation + Send + Sync + 'static,
    ) -> Result<Self> {
        contexts.validate()?;
        if theta_box.is_empty() {
            return Err(Error::invalid("parameter box must have at least one dimension"));
        }
        Ok(FnProblem {
            name: name.into(),
            theta_box,
            contexts,
            n_constraints,
            noise_sigma: vec![0.0; n_constraints + 1],
            safe_seed: None,
            oracle: Box::new(oracle),
        })
    }

    pub fn with_noise(mut self, noise_sigma: Vec<f64>) -> Result<Self> {
        if noise_sigma.len() != self.n_constraints + 1 {
            return Err(Error::DimensionMismatch { expected: self.n_constraints + 1, got: noise_sigma.len() });
        }
        self.noise_sigma = noise_sigma;
        Ok(self)
    }

    pub fn with_safe_seed(mut self, seed: Vec<f64>) -> Result<Self> {
        check_point(&self.theta_box, &seed)?;
        self.safe_seed = Some(seed);
        Ok(self)
    }
}

impl fmt::Debug for FnProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnProblem")
            .field("name", &self.name)
            .field("theta_box", &self.theta_box)
            .field("n_constraints", &self.n_constraints)
            .finish_non_exhaustive()
    }
}

impl Problem for FnProblem {
    fn name(&self) -> &str {
        &self.name
    }

    fn theta_box(&self) -> &[Interval] {
        &self.theta_box
    }

    fn context_generator(&self) -> &ContextGenerator {
        &self.contexts
    }

    fn n_constraints(&self) -> usize {
        self.n_constraints
    }

    fn noise_sigma(&self) -> Vec<f64> {
        self.noise_sigma.clone()
    }

    fn evaluate(&self, theta: &[f64], z: &[f64]) -> Result<Evaluation> {
        check_point(&self.theta_box, theta)?;
        let e = (self.oracle)(theta, z);
        if e.constraints.len() != self.n_constraints {
            return Err(Error::DimensionMismatch { expected: self.n_constraints, got: e.constraints.len() });
        }
        Ok(e)
    }

    fn declared_safe_seed(&self) -> Option<Vec<f64>> {
        self.safe_seed.clone()
    }
}
