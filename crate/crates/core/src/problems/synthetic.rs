use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{check_point, ContextGenerator, Evaluation, Interval, Problem};
use crate::error::{Error, Result};
use crate::gp::{GpPosterior, KernelSpec};
use crate::grid::Lattice;
use crate::rng::{purpose, stream};

/// Noise variance used to interpolate through the sampled anchor values.
pub const ANCHOR_NOISE_VARIANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpSampleConfig {
    pub kernel: KernelSpec,
    pub theta_box: Vec<Interval>,
    pub z_box: Vec<Interval>,
    pub n_constraints: usize,
    /// Anchor lattice points per input dimension.
    pub anchor_resolution: usize,
    pub noise_sigma: f64,
}

impl Default for GpSampleConfig {
    fn default() -> Self {
        let b = Interval { lo: -10.0, hi: 10.0 };
        GpSampleConfig {
            kernel: KernelSpec::squared_exponential(2.0, vec![1.0, 1.0]).expect("valid default kernel"),
            theta_box: vec![b],
            z_box: vec![b],
            n_constraints: 1,
            anchor_resolution: 21,
            noise_sigma: 0.05,
        }
    }
}

/// Objective and constraints drawn jointly from a GP prior on an anchor
/// lattice over `Θ × Z`, then extended off-lattice by near-noiseless
/// posterior-mean interpolation. Each function is a finite kernel
/// expansion, so it is a fixed deterministic function with a known RKHS norm.
#[derive(Clone, Debug)]
pub struct GpSampledInstance {
    name: String,
    config: GpSampleConfig,
    seed: u64,
    contexts: ContextGenerator,
    anchors: Vec<Vec<f64>>,
    anchor_values: Vec<Vec<f64>>,
    interpolants: Vec<GpPosterior>,
}

pub fn sample_gp_instance(config: &GpSampleConfig, seed: u64) -> Result<GpSampledInstance> {
    let dim = config.theta_box.len() + config.z_box.len();
    if config.kernel.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: config.kernel.dim() });
    }
    if config.anchor_resolution < 2 {
        return Err(Error::invalid("anchor resolution must be >= 2 per dimension"));
    }
    let bounds: Vec<Interval> = config.theta_box.iter().chain(&config.z_box).copied().collect();
    let anchors = Lattice::uniform(bounds, config.anchor_resolution)?.points();
    let n = anchors.len();

    let mut packed = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in 0..=i {
            packed.push(config.kernel.eval_unchecked(&anchors[i], &anchors[j]));
        }
    }
    let (chol, _) = crate::gp::cholesky_factor(&packed, n)?;

    let mut anchor_values = Vec::with_capacity(config.n_constraints + 1);
    let mut interpolants = Vec::with_capacity(config.n_constraints + 1);
    for f in 0..=config.n_constraints {
        let mut rng = stream(seed, &[purpose::INSTANCE, f as u64]);
        let normals: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let values: Vec<f64> = (0..n).map(|i| chol.row(i).iter().zip(&normals).map(|(l, e)| l * e).sum()).collect();
        interpolants.push(GpPosterior::fit(
            config.kernel.clone(),
            ANCHOR_NOISE_VARIANCE,
            anchors.clone(),
            values.clone(),
        )?);
        anchor_values.push(values);
    }

    Ok(GpSampledInstance {
        name: format!("gp-sample-{seed}"),
        config: config.clone(),
        seed,
        contexts: ContextGenerator::Uniform { bounds: config.z_box.clone() },
        anchors,
        anchor_values,
        interpolants,
    })
}

impl GpSampledInstance {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn config(&self) -> &GpSampleConfig {
        &self.config
    }

    pub fn anchors(&self) -> &[Vec<f64>] {
        &self.anchors
    }

    /// Sampled values on the anchor lattice, objective first.
    pub fn anchor_values(&self) -> &[Vec<f64>] {
        &self.anchor_values
    }

    /// RKHS norm of each function under the instance kernel, objective first.
    pub fn rkhs_norms(&self) -> Vec<f64> {
        self.interpolants.iter().map(GpPosterior::mean_rkhs_norm).collect()
    }

    fn joint(theta: &[f64], z: &[f64]) -> Vec<f64> {
        theta.iter().chain(z).copied().collect()
    }
}

impl Problem for GpSampledInstance {
    fn name(&self) -> &str {
        &self.name
    }

    fn theta_box(&self) -> &[Interval] {
        &self.config.theta_box
    }

    fn context_generator(&self) -> &ContextGenerator {
        &self.contexts
    }

    fn n_constraints(&self) -> usize {
        self.config.n_constraints
    }

    fn noise_sigma(&self) -> Vec<f64> {
        vec![self.config.noise_sigma; self.config.n_constraints + 1]
    }

    fn evaluate(&self, theta: &[f64], z: &[f64]) -> Result<Evaluation> {
        check_point(&self.config.theta_box, theta)?;
        let x = Self::joint(theta, z);
        let mut values = self.interpolants.iter().map(|g| g.mean(&x));
        let objective = values.next().expect("objective interpolant")?;
        let constraints = values.collect::<Result<_>>()?;
        Ok(Evaluation { objective, constraints })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GpSampleConfig {
        let b = Interval::new(-3.0, 3.0).unwrap();
        GpSampleConfig { theta_box: vec![b], z_box: vec![b], anchor_resolution: 7, ..Default::default() }
    }

    #[test]
    fn same_seed_same_instance() {
        let a = sample_gp_instance(&small(), 4).unwrap();
        let b = sample_gp_instance(&small(), 4).unwrap();
        assert_eq!(a.anchor_values(), b.anchor_values());
        assert_ne!(a.anchor_values(), sample_gp_instance(&small(), 5).unwrap().anchor_values());
        let x = [0.37, -1.2];
        assert_eq!(a.evaluate(&x[..1], &x[1..]).unwrap(), b.evaluate(&x[..1], &x[1..]).unwrap());
    }

    #[test]
    fn interpolates_the_anchors() {
        let inst = sample_gp_instance(&GpSampleConfig::default(), 1).unwrap();
        for (k, a) in inst.anchors().iter().enumerate().step_by(37) {
            let e = inst.evaluate(&a[..1], &a[1..]).unwrap();
            assert!((e.objective - inst.anchor_values()[0][k]).abs() < 1e-6);
            assert!((e.constraints[0] - inst.anchor_values()[1][k]).abs() < 1e-6);
        }
    }

    #[test]
    fn anchor_marginal_variance_matches_prior() {
        // Monte-Carlo estimate of Var f(a) at one anchor over 200 instances.
        let cfg = small();
        let anchor = 24;
        let vals: Vec<f64> =
            (0..200).map(|s| sample_gp_instance(&cfg, s).unwrap().anchor_values()[0][anchor]).collect();
        let mean = vals.iter().sum::<f64>() / 200.0;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 199.0;
        assert!((1.6..=2.4).contains(&var), "sample variance {var}");
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = small();
        cfg.anchor_resolution = 1;
        assert!(sample_gp_instance(&cfg, 0).is_err());
        let mut cfg = small();
        cfg.kernel = KernelSpec::squared_exponential(2.0, vec![1.0]).unwrap();
        assert!(sample_gp_instance(&cfg, 0).is_err());
    }

    #[test]
    fn finite_rkhs_norms() {
        let inst = sample_gp_instance(&small(), 2).unwrap();
        let norms = inst.rkhs_norms();
        assert_eq!(norms.len(), 2);
        assert!(norms.iter().all(|n| n.is_finite() && *n > 0.0));
    }
}
