//! Seeded replication of (algorithm × replicate) cells.
//!
//! Replicate `r` of a suite with base seed `s` uses the cell seed
//! `derive_seed(s, [r])` for its contexts and observation noise, shared by
//! every algorithm so that they face the same contexts. Sampled instances
//! come from `derive_seed(s, [INSTANCE, r, attempt])`. Adding replicates
//! never changes existing ones.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use pdcbo_core::baselines::{Cei, SafeBo, SafeBoState};
use pdcbo_core::gp::{info_gain_greedy_path, BetaSchedule, SurrogateSpec};
use pdcbo_core::grid::{Lattice, ThetaGrid};
use pdcbo_core::metrics::{check_dual_bound, check_sigma_sum, slater_margin, uniform_safe_point};
use pdcbo_core::problems::{sample_gp_instance, Problem, WilliamsOttoInstance};
use pdcbo_core::rng::{derive_seed, purpose};
use pdcbo_core::solver::{
    gamma_grid, run_pdcbo, run_policy, run_with_doubling, Confidence, PdcboSettings, RunEnv, ScheduleConfig,
    ScheduleMode,
};
use pdcbo_core::trace::ExperimentTrace;
use serde::{Deserialize, Serialize};

use crate::aggregate::{aggregate, Aggregate};
use crate::config::{Algorithm, ExperimentConfig, ProblemConfig};
use crate::error::{BenchError, Result};
use crate::tracefile::{write_trace, CellChecks, TraceSidecar};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "PDCBO_WORKERS";

/// Redraws allowed when looking for a sampled instance with enough margin.
pub const MAX_INSTANCE_ATTEMPTS: u64 = 200;

/// Largest horizon searched when reporting the theory-mode requirement.
const HORIZON_SEARCH_LIMIT: usize = 1 << 40;

/// Constants the theory schedule needs, known only for sampled instances.
#[derive(Clone, Debug, PartialEq)]
pub struct TheoryConstants {
    /// Bound on each function's RKHS norm under the unit-variance kernel,
    /// objective first.
    pub rkhs_bounds: Vec<f64>,
    pub slater_margin: f64,
    pub noise_sigma: f64,
}

/// One replicate's problem instance and everything derived from it.
pub struct Replicate {
    pub index: usize,
    pub seed: u64,
    pub problem: Arc<dyn Problem>,
    pub grid: ThetaGrid,
    pub safe_seed: Vec<f64>,
    pub theory: Option<TheoryConstants>,
    pub checks: CellChecks,
}

pub fn cell_seed(base: u64, replicate: usize) -> u64 {
    derive_seed(base, &[replicate as u64])
}

pub fn build_replicate(cfg: &ExperimentConfig, index: usize) -> Result<Replicate> {
    let seed = cell_seed(cfg.base_seed, index);
    match &cfg.problem {
        ProblemConfig::GpSample { sample, min_slater_margin, context_check_resolution } => {
            let grid = ThetaGrid::uniform(sample.theta_box.clone(), cfg.theta_resolution)?;
            let contexts = Lattice::uniform(sample.z_box.clone(), *context_check_resolution)?.points();
            for attempt in 0..MAX_INSTANCE_ATTEMPTS {
                let instance_seed = derive_seed(cfg.base_seed, &[purpose::INSTANCE, index as u64, attempt]);
                let instance = sample_gp_instance(sample, instance_seed)?;
                let margin = slater_margin(&instance, grid.points(), &contexts)?;
                if margin < *min_slater_margin {
                    continue;
                }
                let (safe, _) = uniform_safe_point(&instance, grid.points(), &contexts)?;
                let scale = sample.kernel.signal_variance.sqrt();
                let theory = TheoryConstants {
                    rkhs_bounds: instance.rkhs_norms().iter().map(|c| c * scale).collect(),
                    slater_margin: margin,
                    noise_sigma: sample.noise_sigma,
                };
                return Ok(Replicate {
                    index,
                    seed,
                    safe_seed: grid.point(safe).to_vec(),
                    problem: Arc::new(instance),
                    grid,
                    theory: Some(theory),
                    checks: CellChecks {
                        instance_seed: Some(instance_seed),
                        slater_margin: Some(margin),
                        ..Default::default()
                    },
                });
            }
            Err(BenchError::Config(format!(
                "no instance with Slater margin >= {min_slater_margin} in {MAX_INSTANCE_ATTEMPTS} draws"
            )))
        }
        ProblemConfig::WilliamsOtto { constants, nominal_prices, alpha, noise_sigma, safe_seed } => {
            let problem = WilliamsOttoInstance::new(
                constants.clone(),
                nominal_prices.clone(),
                *alpha,
                noise_sigma.clone(),
                safe_seed.clone(),
            )?;
            let grid = ThetaGrid::uniform(problem.theta_box().to_vec(), cfg.theta_resolution)?;
            Ok(Replicate {
                index,
                seed,
                problem: Arc::new(problem),
                grid,
                safe_seed: safe_seed.clone(),
                theory: None,
                checks: CellChecks::default(),
            })
        }
    }
}

/// Per-suite constants shared by every cell.
pub struct SuiteContext {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub surrogates: Vec<SurrogateSpec>,
    /// Greedy information-gain paths per function up to the horizon.
    pub gamma_paths: Vec<Vec<f64>>,
}

impl SuiteContext {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let surrogates = config.surrogates();
        let (theta_box, z_box) = match &config.problem {
            ProblemConfig::GpSample { sample, .. } => (sample.theta_box.clone(), sample.z_box.clone()),
            ProblemConfig::WilliamsOtto { .. } => {
                let r = build_replicate(&config, 0)?;
                (r.problem.theta_box().to_vec(), r.problem.z_box())
            }
        };
        let dim = theta_box.len() + z_box.len();
        if let Some(s) = surrogates.iter().find(|s| s.kernel.dim() != dim) {
            return Err(BenchError::Config(format!(
                "surrogate kernel has {} lengthscales, inputs have {dim} dimensions",
                s.kernel.dim()
            )));
        }
        if config.pdcbo.mode == ScheduleMode::Theory && !matches!(config.problem, ProblemConfig::GpSample { .. }) {
            return Err(BenchError::Config("the theory schedule needs a sampled problem with known RKHS norms".into()));
        }
        let grid = gamma_grid(&theta_box, &z_box)?;
        let gamma_paths = surrogates
            .iter()
            .map(|s| info_gain_greedy_path(&s.kernel, s.noise_variance, &grid, config.horizon))
            .collect();
        let config_hash = config.hash();
        Ok(SuiteContext { config, config_hash, surrogates, gamma_paths })
    }

    fn gamma_at_horizon(&self) -> Vec<f64> {
        self.gamma_paths.iter().map(|p| *p.last().expect("path has t = 0")).collect()
    }

    fn pdcbo_settings(&self, rep: &Replicate) -> Result<(PdcboSettings, Option<usize>)> {
        let p = &self.config.pdcbo;
        let n = rep.problem.n_constraints();
        match p.mode {
            ScheduleMode::Practical => Ok((
                PdcboSettings {
                    schedule: ScheduleConfig::practical(self.config.horizon, p.eta, p.epsilon)?,
                    confidence: Confidence::constant(p.beta_sqrt, n)?,
                },
                None,
            )),
            ScheduleMode::Theory => {
                let th = rep.theory.as_ref().ok_or_else(|| BenchError::Config("no theory constants".into()))?;
                let beta = BetaSchedule::theory(th.rkhs_bounds.clone(), th.noise_sigma, p.delta)?;
                let confidence = Confidence { beta, gamma_paths: self.gamma_paths.clone() };
                let mut schedule = ScheduleConfig::theory(
                    self.config.horizon,
                    th.rkhs_bounds[0],
                    th.rkhs_bounds[1..].to_vec(),
                    th.slater_margin,
                )?;
                schedule.doubling = p.doubling;
                schedule.initial_epoch = p.initial_epoch;
                let beta_tg = (1..=n)
                    .map(|i| confidence.beta_sqrt(i, self.config.horizon))
                    .collect::<pdcbo_core::Result<Vec<_>>>()?;
                let gamma_tg: Vec<f64> = (1..=n).map(|i| confidence.gamma(i, self.config.horizon)).collect();
                let required = schedule.required_horizon(&beta_tg, &gamma_tg, HORIZON_SEARCH_LIMIT);
                Ok((PdcboSettings { schedule, confidence }, required))
            }
        }
    }

    /// Run one cell and compute its checks.
    pub fn run_cell(&self, rep: &Replicate, algorithm: Algorithm) -> Result<(ExperimentTrace, TraceSidecar)> {
        let started = Instant::now();
        let env =
            RunEnv { problem: rep.problem.as_ref(), grid: &rep.grid, surrogates: &self.surrogates, seed: rep.seed };
        let horizon = self.config.horizon;
        let mut checks = rep.checks.clone();
        let trace = match algorithm {
            Algorithm::Pdcbo => {
                let (settings, required) = self.pdcbo_settings(rep)?;
                checks.required_horizon = required;
                if settings.schedule.doubling {
                    run_with_doubling(&env, &settings, horizon)?
                } else {
                    run_pdcbo(&env, &settings, horizon)?
                }
            }
            Algorithm::Cei => run_policy(&env, &mut Cei::default(), horizon)?,
            Algorithm::SafeBo => {
                let state = SafeBoState::new(&rep.grid, &rep.safe_seed, self.config.safe_bo.beta_sqrt)?;
                run_policy(&env, &mut SafeBo { state }, horizon)?
            }
        };
        let variances: Vec<f64> = self.surrogates.iter().map(|s| s.kernel.signal_variance).collect();
        checks.sigma_sum = Some(check_sigma_sum(&trace, &self.gamma_at_horizon(), &variances));
        if algorithm == Algorithm::Pdcbo && self.config.pdcbo.mode == ScheduleMode::Theory {
            checks.dual_bound = Some(check_dual_bound(&trace));
        }
        let sidecar = TraceSidecar {
            config_hash: self.config_hash.clone(),
            replicate: rep.index,
            wall_time_secs: started.elapsed().as_secs_f64(),
            meta: trace.meta.clone(),
            checks,
        };
        Ok((trace, sidecar))
    }
}

/// Outcome of one cell; failures are kept as messages so the suite can
/// continue.
pub struct CellOutcome {
    pub algorithm: Algorithm,
    pub replicate: usize,
    pub result: std::result::Result<(ExperimentTrace, TraceSidecar), String>,
}

/// Summary written next to the traces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub name: String,
    pub config_hash: String,
    pub cells: usize,
    pub failures: Vec<String>,
    pub wall_time_secs: f64,
}

pub struct SuiteOutcome {
    pub cells: Vec<CellOutcome>,
    pub aggregate: Aggregate,
    pub summary: SuiteSummary,
}

impl SuiteOutcome {
    pub fn failed(&self) -> bool {
        !self.summary.failures.is_empty()
    }

    pub fn traces(&self, algorithm: Algorithm) -> Vec<&ExperimentTrace> {
        self.cells
            .iter()
            .filter(|c| c.algorithm == algorithm)
            .filter_map(|c| c.result.as_ref().ok().map(|(t, _)| t))
            .collect()
    }

    pub fn sidecars(&self, algorithm: Algorithm) -> Vec<&TraceSidecar> {
        self.cells
            .iter()
            .filter(|c| c.algorithm == algorithm)
            .filter_map(|c| c.result.as_ref().ok().map(|(_, s)| s))
            .collect()
    }
}

/// Worker count from [`WORKERS_ENV`], defaulting to the available cores.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|n: &usize| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn constraint_offsets(cfg: &ExperimentConfig) -> Vec<f64> {
    match &cfg.problem {
        ProblemConfig::GpSample { sample, .. } => vec![0.0; sample.n_constraints],
        ProblemConfig::WilliamsOtto { .. } => WilliamsOttoInstance::THRESHOLDS.to_vec(),
    }
}

/// Run every cell in a worker pool, aggregate, and (when `out` is given)
/// persist config, traces, aggregate and summary.
pub fn run_suite(config: &ExperimentConfig, out: Option<&Path>) -> Result<SuiteOutcome> {
    let started = Instant::now();
    let ctx = SuiteContext::new(config.clone())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| BenchError::Config(format!("worker pool: {e}")))?;

    let cells: Vec<CellOutcome> = pool.install(|| {
        use rayon::prelude::*;
        let reps: Vec<std::result::Result<Replicate, String>> = (0..config.replicates)
            .into_par_iter()
            .map(|r| build_replicate(config, r).map_err(|e| e.to_string()))
            .collect();
        let jobs: Vec<(usize, Algorithm)> =
            (0..config.replicates).flat_map(|r| config.algorithms.iter().map(move |a| (r, *a))).collect();
        jobs.into_par_iter()
            .map(|(r, algorithm)| {
                let result = match &reps[r] {
                    Ok(rep) => ctx.run_cell(rep, algorithm).map_err(|e| e.to_string()),
                    Err(e) => Err(format!("replicate setup failed: {e}")),
                };
                CellOutcome { algorithm, replicate: r, result }
            })
            .collect()
    });

    let mut failures = Vec::new();
    for c in &cells {
        if let Err(e) = &c.result {
            log::error!("cell {} r{}: {e}", c.algorithm.as_str(), c.replicate);
            failures.push(format!("{} r{}: {e}", c.algorithm.as_str(), c.replicate));
        }
    }
    let ok: Vec<&ExperimentTrace> = cells.iter().filter_map(|c| c.result.as_ref().ok().map(|(t, _)| t)).collect();
    let agg = aggregate(&config.name, &ok, config.band_multiplier, constraint_offsets(config));
    let summary = SuiteSummary {
        name: config.name.clone(),
        config_hash: ctx.config_hash.clone(),
        cells: cells.len(),
        failures,
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    let outcome = SuiteOutcome { cells, aggregate: agg, summary };
    if let Some(dir) = out {
        persist(config, &outcome, dir)?;
    }
    Ok(outcome)
}

pub const CONFIG_FILE: &str = "config.toml";
pub const AGGREGATE_FILE: &str = "aggregate.json";
pub const SUMMARY_FILE: &str = "suite.json";

pub fn traces_dir(run_dir: &Path) -> PathBuf {
    run_dir.join("traces")
}

fn persist(config: &ExperimentConfig, outcome: &SuiteOutcome, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let cfg_path = dir.join(CONFIG_FILE);
    std::fs::write(&cfg_path, config.to_toml()).map_err(|e| BenchError::io(&cfg_path, e))?;
    let traces = traces_dir(dir);
    for c in &outcome.cells {
        if let Ok((trace, sidecar)) = &c.result {
            write_trace(&traces, trace, sidecar)?;
        }
    }
    outcome.aggregate.save(&dir.join(AGGREGATE_FILE))?;
    let summary_path = dir.join(SUMMARY_FILE);
    let json = serde_json::to_vec_pretty(&outcome.summary)?;
    std::fs::write(&summary_path, json).map_err(|e| BenchError::io(&summary_path, e))
}

/// Result of re-running a persisted suite.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReplayReport {
    pub matched: Vec<String>,
    pub mismatched: Vec<String>,
    pub missing: Vec<String>,
}

impl ReplayReport {
    pub fn identical(&self) -> bool {
        self.mismatched.is_empty() && self.missing.is_empty() && !self.matched.is_empty()
    }
}

/// Re-run the config stored in `run_dir` and compare every trace CSV byte
/// for byte.
pub fn replay(run_dir: &Path) -> Result<ReplayReport> {
    let config = ExperimentConfig::load(&run_dir.join(CONFIG_FILE))?;
    let outcome = run_suite(&config, None)?;
    let stored = traces_dir(run_dir);
    let mut report = ReplayReport::default();
    for c in &outcome.cells {
        let Ok((trace, sidecar)) = &c.result else { continue };
        let stem = crate::tracefile::trace_stem(&trace.meta.algorithm, sidecar.replicate);
        let path = crate::tracefile::csv_path(&stored, &stem);
        match std::fs::read(&path) {
            Ok(bytes) if bytes == crate::tracefile::emit_csv(trace)? => report.matched.push(stem),
            Ok(_) => report.mismatched.push(stem),
            Err(_) => report.missing.push(stem),
        }
    }
    Ok(report)
}
