//! Experiment configuration (TOML).
//!
//! ```toml
//! name = "synthetic"
//! horizon = 300
//! replicates = 10
//! base_seed = 7
//! algorithms = ["pdcbo", "cei", "safe_bo"]
//!
//! [problem]
//! family = "gp_sample"
//!
//! [pdcbo]
//! mode = "practical"
//! eta = 1.0
//! ```

use std::path::{Path, PathBuf};

use pdcbo_core::gp::{KernelSpec, SurrogateSpec};
use pdcbo_core::problems::{CstrConstants, GpSampleConfig, NOMINAL_PRICES};
use pdcbo_core::solver::ScheduleMode;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{BenchError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Pdcbo,
    Cei,
    SafeBo,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Pdcbo => "pdcbo",
            Algorithm::Cei => "cei",
            Algorithm::SafeBo => "safe_bo",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ProblemConfig {
    /// Objective and constraints sampled from a GP prior, one instance per
    /// replicate.
    GpSample {
        #[serde(default)]
        sample: GpSampleConfig,
        /// Instances whose Slater margin over the context check lattice is
        /// below this are redrawn.
        #[serde(default = "default_min_margin")]
        min_slater_margin: f64,
        /// Context lattice points per dimension for the margin check.
        #[serde(default = "default_context_check")]
        context_check_resolution: usize,
    },
    /// Williams-Otto reactor with price contexts; replicates differ in the
    /// price trajectory.
    WilliamsOtto {
        #[serde(default)]
        constants: CstrConstants,
        #[serde(default = "default_prices")]
        nominal_prices: Vec<f64>,
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_wo_noise")]
        noise_sigma: Vec<f64>,
        #[serde(default = "default_wo_seed")]
        safe_seed: Vec<f64>,
    },
}

fn default_min_margin() -> f64 {
    0.1
}

fn default_context_check() -> usize {
    81
}

fn default_prices() -> Vec<f64> {
    NOMINAL_PRICES.to_vec()
}

fn default_alpha() -> f64 {
    0.2
}

fn default_wo_noise() -> Vec<f64> {
    vec![0.05, 5e-4, 5e-4]
}

fn default_wo_seed() -> Vec<f64> {
    vec![7.0, 80.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PdcboConfig {
    pub mode: ScheduleMode,
    /// `η` in practical mode.
    pub eta: f64,
    /// `ε` in practical mode.
    pub epsilon: f64,
    /// Constant `β½` in practical mode.
    pub beta_sqrt: f64,
    /// Confidence level of the theory `β` schedule.
    pub delta: f64,
    pub doubling: bool,
    pub initial_epoch: usize,
}

impl Default for PdcboConfig {
    fn default() -> Self {
        PdcboConfig {
            mode: ScheduleMode::Practical,
            eta: 1.0,
            epsilon: 0.0,
            beta_sqrt: 1.0,
            delta: 0.05,
            doubling: false,
            initial_epoch: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SafeBoConfig {
    pub beta_sqrt: f64,
}

impl Default for SafeBoConfig {
    fn default() -> Self {
        SafeBoConfig { beta_sqrt: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub horizon: usize,
    pub replicates: usize,
    pub base_seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub problem: ProblemConfig,
    /// Lattice points per parameter dimension for the primal grid and the
    /// regret oracle.
    #[serde(default = "default_resolution")]
    pub theta_resolution: usize,
    /// Surrogate models, objective first. Defaults to the instance kernel
    /// for sampled problems; required otherwise.
    #[serde(default)]
    pub surrogates: Option<Vec<SurrogateSpec>>,
    #[serde(default)]
    pub pdcbo: PdcboConfig,
    #[serde(default)]
    pub safe_bo: SafeBoConfig,
    /// Standard-deviation multiplier of the aggregate bands.
    #[serde(default = "default_band")]
    pub band_multiplier: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_resolution() -> usize {
    101
}

fn default_band() -> f64 {
    0.5
}

/// Surrogates fitted offline for the Williams-Otto problem (inputs
/// `F_B, T_r, P_product, P_byproduct, P_A, P_B`).
pub fn williams_otto_surrogates() -> Vec<SurrogateSpec> {
    let se = |v: f64, l: Vec<f64>| KernelSpec::squared_exponential(v, l).expect("valid kernel");
    vec![
        SurrogateSpec {
            kernel: se(1.0e8, vec![8.05, 73.7, 38000.0, 16100.0, 17500.0, 6560.0]),
            noise_variance: 0.05 * 0.05,
        },
        SurrogateSpec { kernel: se(7.6e-3, vec![4.21, 94.6, 1e5, 1e5, 1e5, 1e5]), noise_variance: 5e-4 * 5e-4 },
        SurrogateSpec { kernel: se(2.02e-2, vec![5.77, 66.0, 1e5, 1e5, 1e5, 1e5]), noise_variance: 5e-4 * 5e-4 },
    ]
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(BenchError::Config(m.to_string()));
        if self.horizon == 0 {
            return bad("horizon must be >= 1");
        }
        if self.replicates == 0 {
            return bad("replicates must be >= 1");
        }
        if self.algorithms.is_empty() {
            return bad("at least one algorithm is required");
        }
        if self.theta_resolution < 2 {
            return bad("theta_resolution must be >= 2");
        }
        if !(self.band_multiplier >= 0.0) {
            return bad("band_multiplier must be >= 0");
        }
        if self.pdcbo.doubling && self.pdcbo.mode != ScheduleMode::Theory {
            return bad("the doubling trick needs the theory schedule");
        }
        if let ProblemConfig::WilliamsOtto { noise_sigma, .. } = &self.problem {
            if noise_sigma.len() != 3 {
                return bad("williams_otto noise_sigma needs 3 entries");
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn surrogates(&self) -> Vec<SurrogateSpec> {
        if let Some(s) = &self.surrogates {
            return s.clone();
        }
        match &self.problem {
            ProblemConfig::GpSample { sample, .. } => vec![
                SurrogateSpec {
                    kernel: sample.kernel.clone(),
                    noise_variance: sample.noise_sigma * sample.noise_sigma,
                };
                sample.n_constraints + 1
            ],
            ProblemConfig::WilliamsOtto { .. } => williams_otto_surrogates(),
        }
    }
}
