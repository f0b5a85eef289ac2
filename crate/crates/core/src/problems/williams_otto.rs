//! Williams-Otto CSTR at steady state.
//!
//! Reactions (rates per unit holdup, `k_j = A_j exp(-E_j / (T_r + 273.15))`):
//!
//! ```text
//! A + B -> C          k1
//! B + C -> P + E      k2
//! C + P -> G          k3
//! ```
//!
//! Mass balances over the reactor with outlet flow `F_R = F_A + F_B`:
//!
//! ```text
//! 0 = F_A - F_R X_A - W k1 X_A X_B
//! 0 = F_B - F_R X_B - W k1 X_A X_B - W k2 X_B X_C
//! 0 =     - F_R X_C + 2 W k1 X_A X_B - 2 W k2 X_B X_C - W k3 X_C X_P
//! 0 =     - F_R X_P + W k2 X_B X_C - ½ W k3 X_C X_P
//! 0 =     - F_R X_E + 2 W k2 X_B X_C
//! 0 =     - F_R X_G + 1.5 W k3 X_C X_P
//! ```
//!
//! Constants are the usual literature values for this benchmark (holdup
//! 2105 kg, `F_A` = 1.8275 kg/s); they are defaults, not measurements.

use std::collections::HashMap;
use std::sync::RwLock;

use nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use super::{check_point, ContextGenerator, Evaluation, Interval, Problem};
use crate::error::{Error, Result};

pub const SPECIES: [&str; 6] = ["A", "B", "C", "P", "E", "G"];

/// Nominal prices: product P, byproduct E, raw material A, raw material B.
pub const NOMINAL_PRICES: [f64; 4] = [1043.38, 20.92, 79.23, 118.34];

const MAX_NEWTON_ITERATIONS: usize = 200;
const RESIDUAL_TOLERANCE: f64 = 1e-10;
const NEGATIVE_FRACTION_TOLERANCE: f64 = -1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CstrConstants {
    /// Reactor mass holdup `W` (kg).
    pub holdup: f64,
    /// Feed rate of A (kg/s).
    pub feed_a: f64,
    pub pre_exponential: [f64; 3],
    /// Activation temperatures `E_j / R` (K).
    pub activation_temperature: [f64; 3],
}

impl Default for CstrConstants {
    fn default() -> Self {
        CstrConstants {
            holdup: 2105.0,
            feed_a: 1.8275,
            pre_exponential: [1.6599e6, 7.2117e8, 2.6745e12],
            activation_temperature: [6666.7, 8333.3, 11111.0],
        }
    }
}

impl CstrConstants {
    fn rate_constants(&self, t_r: f64) -> [f64; 3] {
        let t = t_r + 273.15;
        std::array::from_fn(|j| self.pre_exponential[j] * (-self.activation_temperature[j] / t).exp())
    }
}

/// Outlet mass fractions `(X_A, X_B, X_C, X_P, X_E, X_G)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyState {
    pub fractions: [f64; 6],
    /// Max-norm of the balance residual at `fractions` (kg/s).
    pub residual: f64,
}

impl SteadyState {
    pub fn x_a(&self) -> f64 {
        self.fractions[0]
    }

    pub fn x_p(&self) -> f64 {
        self.fractions[3]
    }

    pub fn x_e(&self) -> f64 {
        self.fractions[4]
    }

    pub fn x_g(&self) -> f64 {
        self.fractions[5]
    }
}

/// Residual of the six steady-state balances at mass fractions `x`.
pub fn cstr_residual(x: &[f64; 6], f_b: f64, t_r: f64, c: &CstrConstants) -> [f64; 6] {
    let [xa, xb, xc, xp, xe, xg] = *x;
    let [k1, k2, k3] = c.rate_constants(t_r);
    let w = c.holdup;
    let fr = c.feed_a + f_b;
    let r1 = w * k1 * xa * xb;
    let r2 = w * k2 * xb * xc;
    let r3 = w * k3 * xc * xp;
    [
        c.feed_a - fr * xa - r1,
        f_b - fr * xb - r1 - r2,
        -fr * xc + 2.0 * r1 - 2.0 * r2 - r3,
        -fr * xp + r2 - 0.5 * r3,
        -fr * xe + 2.0 * r2,
        -fr * xg + 1.5 * r3,
    ]
}

fn jacobian(x: &[f64; 6], f_b: f64, t_r: f64, c: &CstrConstants) -> Matrix6<f64> {
    let [xa, xb, xc, xp, _, _] = *x;
    let [k1, k2, k3] = c.rate_constants(t_r);
    let (a1, a2, a3) = (c.holdup * k1, c.holdup * k2, c.holdup * k3);
    let fr = c.feed_a + f_b;
    #[rustfmt::skip]
    let j = Matrix6::new(
        -fr - a1 * xb, -a1 * xa,                    0.0,                               0.0,                    0.0, 0.0,
        -a1 * xb,      -fr - a1 * xa - a2 * xc,     -a2 * xb,                          0.0,                    0.0, 0.0,
        2.0 * a1 * xb, 2.0 * a1 * xa - 2.0 * a2 * xc, -fr - 2.0 * a2 * xb - a3 * xp,  -a3 * xc,               0.0, 0.0,
        0.0,           a2 * xc,                     a2 * xb - 0.5 * a3 * xp,           -fr - 0.5 * a3 * xc,    0.0, 0.0,
        0.0,           2.0 * a2 * xc,               2.0 * a2 * xb,                     0.0,                    -fr, 0.0,
        0.0,           0.0,                         1.5 * a3 * xp,                     1.5 * a3 * xc,          0.0, -fr,
    );
    j
}

fn max_norm(r: &[f64; 6]) -> f64 {
    r.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Solve the steady-state balances by damped Newton iteration.
pub fn cstr_steady_state(f_b: f64, t_r: f64, c: &CstrConstants) -> Result<SteadyState> {
    if !(f_b > 0.0 && f_b.is_finite() && t_r.is_finite()) {
        return Err(Error::invalid(format!("invalid operating point F_B={f_b}, T_r={t_r}")));
    }
    let mut x = [0.1, 0.4, 0.02, 0.1, 0.3, 0.05];
    let mut r = cstr_residual(&x, f_b, t_r, c);
    let mut norm = max_norm(&r);
    let mut iterations = 0;
    while norm > RESIDUAL_TOLERANCE {
        if iterations == MAX_NEWTON_ITERATIONS {
            return Err(Error::SolverDiverged { residual: norm, iterations });
        }
        iterations += 1;
        let step = jacobian(&x, f_b, t_r, c)
            .lu()
            .solve(&-Vector6::from_row_slice(&r))
            .ok_or(Error::SolverDiverged { residual: norm, iterations })?;
        // Backtrack until the residual decreases.
        let mut damping = 1.0;
        loop {
            let mut trial = x;
            for i in 0..6 {
                trial[i] += damping * step[i];
            }
            let tr = cstr_residual(&trial, f_b, t_r, c);
            let tn = max_norm(&tr);
            if tn < norm || damping < 1e-4 {
                x = trial;
                r = tr;
                norm = tn;
                break;
            }
            damping *= 0.5;
        }
    }
    for (value, species) in x.iter().zip(SPECIES) {
        if *value < NEGATIVE_FRACTION_TOLERANCE {
            return Err(Error::ModelDomain { species, value: *value });
        }
    }
    Ok(SteadyState { fractions: x, residual: norm })
}

/// Negative net profit per second at the operating point, for prices
/// `(product P, byproduct E, raw A, raw B)`.
pub fn wo_objective(f_b: f64, t_r: f64, prices: &[f64], c: &CstrConstants) -> Result<f64> {
    let ss = cstr_steady_state(f_b, t_r, c)?;
    objective_at(&ss, f_b, prices, c)
}

fn objective_at(ss: &SteadyState, f_b: f64, prices: &[f64], c: &CstrConstants) -> Result<f64> {
    if prices.len() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, got: prices.len() });
    }
    let flow = c.feed_a + f_b;
    let profit = prices[0] * flow * ss.x_p() + prices[1] * flow * ss.x_e() - prices[2] * c.feed_a - prices[3] * f_b;
    Ok(-profit)
}

/// Economic tuning of `θ = (F_B, T_r)` under price contexts, with
/// `g₁ = X_A - 0.12` and `g₂ = X_G - 0.08`.
#[derive(Debug)]
pub struct WilliamsOttoInstance {
    constants: CstrConstants,
    theta_box: Vec<Interval>,
    contexts: ContextGenerator,
    thresholds: [f64; 2],
    noise_sigma: Vec<f64>,
    safe_seed: Vec<f64>,
    memo: RwLock<HashMap<[u64; 2], SteadyState>>,
}

impl WilliamsOttoInstance {
    pub const THRESHOLDS: [f64; 2] = [0.12, 0.08];

    pub fn new(
        constants: CstrConstants,
        nominal_prices: Vec<f64>,
        alpha: f64,
        noise_sigma: Vec<f64>,
        safe_seed: Vec<f64>,
    ) -> Result<Self> {
        let contexts = ContextGenerator::Price { nominal: nominal_prices, alpha };
        contexts.validate()?;
        if noise_sigma.len() != 3 {
            return Err(Error::DimensionMismatch { expected: 3, got: noise_sigma.len() });
        }
        let theta_box = vec![Interval::new(4.0, 7.0)?, Interval::new(70.0, 100.0)?];
        check_point(&theta_box, &safe_seed)?;
        Ok(WilliamsOttoInstance {
            constants,
            theta_box,
            contexts,
            thresholds: Self::THRESHOLDS,
            noise_sigma,
            safe_seed,
            memo: RwLock::new(HashMap::new()),
        })
    }

    pub fn constants(&self) -> &CstrConstants {
        &self.constants
    }

    pub fn thresholds(&self) -> [f64; 2] {
        self.thresholds
    }

    /// Steady state at `(F_B, T_r)`, memoized per exact operating point.
    pub fn steady_state(&self, f_b: f64, t_r: f64) -> Result<SteadyState> {
        let key = [f_b.to_bits(), t_r.to_bits()];
        if let Some(ss) = self.memo.read().expect("memo lock").get(&key) {
            return Ok(*ss);
        }
        let ss = cstr_steady_state(f_b, t_r, &self.constants)?;
        self.memo.write().expect("memo lock").insert(key, ss);
        Ok(ss)
    }
}

impl Problem for WilliamsOttoInstance {
    fn name(&self) -> &str {
        "williams-otto"
    }

    fn theta_box(&self) -> &[Interval] {
        &self.theta_box
    }

    fn context_generator(&self) -> &ContextGenerator {
        &self.contexts
    }

    fn n_constraints(&self) -> usize {
        2
    }

    fn noise_sigma(&self) -> Vec<f64> {
        self.noise_sigma.clone()
    }

    fn evaluate(&self, theta: &[f64], z: &[f64]) -> Result<Evaluation> {
        check_point(&self.theta_box, theta)?;
        let ss = self.steady_state(theta[0], theta[1])?;
        Ok(Evaluation {
            objective: objective_at(&ss, theta[0], z, &self.constants)?,
            constraints: vec![ss.x_a() - self.thresholds[0], ss.x_g() - self.thresholds[1]],
        })
    }

    fn declared_safe_seed(&self) -> Option<Vec<f64>> {
        Some(self.safe_seed.clone())
    }
}
