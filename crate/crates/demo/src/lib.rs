//! Three small computations behind the browser page in `www/`.
//!
//! The functions here are plain Rust so they can be tested natively; the
//! `wasm` module wraps them for JavaScript and hands results over as JSON.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use pdcbo_core::baselines::{Cei, SafeBo, SafeBoState};
use pdcbo_core::gp::{confidence_bounds, GpPosterior, KernelSpec, SurrogateSpec};
use pdcbo_core::grid::{Lattice, ThetaGrid};
use pdcbo_core::metrics::{slater_margin, uniform_safe_point};
use pdcbo_core::problems::{
    sample_gp_instance, CstrConstants, GpSampleConfig, Problem, WilliamsOttoInstance, NOMINAL_PRICES,
};
use pdcbo_core::rng::derive_seed;
use pdcbo_core::solver::{run_pdcbo, run_policy, Confidence, PdcboSettings, RunEnv, ScheduleConfig};
use pdcbo_core::trace::ExperimentTrace;
use serde::Serialize;

#[cfg(target_arch = "wasm32")]
mod wasm;

#[derive(Debug, thiserror::Error)]
pub enum DemoError {
    #[error(transparent)]
    Core(#[from] pdcbo_core::Error),
    #[error("{0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, DemoError>;

/// Posterior of a 1-D GP over `[lo, hi]` with its confidence band.
#[derive(Clone, Debug, Serialize)]
pub struct GpSlice {
    pub x: Vec<f64>,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SliceRequest {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub signal_variance: f64,
    pub lengthscale: f64,
    pub noise_variance: f64,
    pub beta_sqrt: f64,
}

pub fn gp_slice(req: &SliceRequest) -> Result<GpSlice> {
    if req.xs.len() != req.ys.len() {
        return Err(DemoError::Input(format!("{} inputs but {} outputs", req.xs.len(), req.ys.len())));
    }
    if req.points < 2 || !(req.hi > req.lo) {
        return Err(DemoError::Input("need at least two points on a non-empty interval".into()));
    }
    let kernel = KernelSpec::squared_exponential(req.signal_variance, vec![req.lengthscale])?;
    let gp = GpPosterior::fit(kernel, req.noise_variance, req.xs.iter().map(|x| vec![*x]).collect(), req.ys.clone())?;
    let mut out = GpSlice { x: Vec::new(), mean: Vec::new(), lower: Vec::new(), upper: Vec::new() };
    for k in 0..req.points {
        let x = req.lo + (req.hi - req.lo) * k as f64 / (req.points - 1) as f64;
        let p = gp.predict(&[x])?;
        let (l, u) = confidence_bounds(p.mean, p.variance.sqrt(), req.beta_sqrt, f64::INFINITY);
        out.x.push(x);
        out.mean.push(p.mean);
        out.lower.push(l);
        out.upper.push(u);
    }
    Ok(out)
}

/// Cumulative regret and constraint curves of each method on one sampled
/// synthetic instance.
#[derive(Clone, Debug, Serialize)]
pub struct RunCurves {
    pub instance_seed: u64,
    pub slater_margin: f64,
    pub methods: Vec<MethodCurve>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MethodCurve {
    pub name: String,
    pub cum_regret: Vec<f64>,
    pub cum_constraint: Vec<f64>,
}

impl MethodCurve {
    fn from_trace(name: &str, t: &ExperimentTrace) -> Self {
        MethodCurve {
            name: name.to_string(),
            cum_regret: t.rows.iter().map(|r| r.cum_regret).collect(),
            cum_constraint: t.rows.iter().map(|r| r.cum_constraints[0]).collect(),
        }
    }
}

const DEMO_THETA_RESOLUTION: usize = 41;
const DEMO_CONTEXT_RESOLUTION: usize = 21;
const DEMO_MIN_MARGIN: f64 = 0.1;
const DEMO_MAX_DRAWS: u64 = 50;

/// Sample an instance (redrawing until the Slater margin is at least 0.1)
/// and run PDCBO, CEI and SafeBO on it with shared contexts and noise.
pub fn synthetic_curves(seed: u64, horizon: usize, eta: f64) -> Result<RunCurves> {
    if horizon == 0 || horizon > 1000 {
        return Err(DemoError::Input("horizon must be in 1..=1000".into()));
    }
    let cfg = GpSampleConfig::default();
    let grid = ThetaGrid::uniform(cfg.theta_box.clone(), DEMO_THETA_RESOLUTION)?;
    let contexts = Lattice::uniform(cfg.z_box.clone(), DEMO_CONTEXT_RESOLUTION)?.points();
    let surrogates =
        vec![
            SurrogateSpec { kernel: cfg.kernel.clone(), noise_variance: cfg.noise_sigma * cfg.noise_sigma };
            cfg.n_constraints + 1
        ];
    for attempt in 0..DEMO_MAX_DRAWS {
        let instance_seed = derive_seed(seed, &[attempt]);
        let instance = sample_gp_instance(&cfg, instance_seed)?;
        let margin = slater_margin(&instance, grid.points(), &contexts)?;
        if margin < DEMO_MIN_MARGIN {
            continue;
        }
        let (safe, _) = uniform_safe_point(&instance, grid.points(), &contexts)?;
        let env = RunEnv { problem: &instance, grid: &grid, surrogates: &surrogates, seed };
        let settings = PdcboSettings {
            schedule: ScheduleConfig::practical(horizon, eta, 0.0)?,
            confidence: Confidence::constant(1.0, cfg.n_constraints)?,
        };
        let pd = run_pdcbo(&env, &settings, horizon)?;
        let cei = run_policy(&env, &mut Cei::default(), horizon)?;
        let state = SafeBoState::new(&grid, grid.point(safe), 2.0)?;
        let safe_bo = run_policy(&env, &mut SafeBo { state }, horizon)?;
        return Ok(RunCurves {
            instance_seed,
            slater_margin: margin,
            methods: vec![
                MethodCurve::from_trace("pdcbo", &pd),
                MethodCurve::from_trace("cei", &cei),
                MethodCurve::from_trace("safe_bo", &safe_bo),
            ],
        });
    }
    Err(DemoError::Input(format!("no instance with margin >= {DEMO_MIN_MARGIN} in {DEMO_MAX_DRAWS} draws")))
}

/// Steady-state quantities of the Williams-Otto reactor over an
/// `(F_B, T_r)` lattice, row-major with `F_B` varying fastest.
#[derive(Clone, Debug, Serialize)]
pub struct FeasibilityMap {
    pub resolution: usize,
    pub f_b: Vec<f64>,
    pub t_r: Vec<f64>,
    pub cost: Vec<f64>,
    pub x_a: Vec<f64>,
    pub x_g: Vec<f64>,
    pub feasible: Vec<bool>,
    pub thresholds: [f64; 2],
}

/// `price_scale` multiplies every nominal price.
pub fn williams_otto_map(resolution: usize, price_scale: f64) -> Result<FeasibilityMap> {
    if !(2..=200).contains(&resolution) {
        return Err(DemoError::Input("resolution must be in 2..=200".into()));
    }
    let problem = WilliamsOttoInstance::new(
        CstrConstants::default(),
        NOMINAL_PRICES.to_vec(),
        0.2,
        vec![0.0; 3],
        vec![7.0, 80.0],
    )?;
    let prices: Vec<f64> = NOMINAL_PRICES.iter().map(|p| p * price_scale).collect();
    let lattice = Lattice::uniform(problem.theta_box().to_vec(), resolution)?;
    let thresholds = WilliamsOttoInstance::THRESHOLDS;
    let mut map = FeasibilityMap {
        resolution,
        f_b: Vec::new(),
        t_r: Vec::new(),
        cost: Vec::new(),
        x_a: Vec::new(),
        x_g: Vec::new(),
        feasible: Vec::new(),
        thresholds,
    };
    for theta in lattice.points() {
        let e = problem.evaluate(&theta, &prices)?;
        map.f_b.push(theta[0]);
        map.t_r.push(theta[1]);
        map.cost.push(e.objective);
        map.x_a.push(e.constraints[0] + thresholds[0]);
        map.x_g.push(e.constraints[1] + thresholds[1]);
        map.feasible.push(e.constraints.iter().all(|g| *g <= 0.0));
    }
    Ok(map)
}
