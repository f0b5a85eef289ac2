//! Comparison methods on the same step interface as PDCBO: constrained
//! expected improvement and a simplified contextual SafeOpt.

use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::gp::{Prediction, SurrogateSet};
use crate::grid::ThetaGrid;
use crate::solver::{predict_grid, Policy, Selection};

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Expected improvement below `incumbent` for a minimization problem.
pub fn expected_improvement(p: &Prediction, incumbent: f64) -> f64 {
    let sd = p.std();
    let gap = incumbent - p.mean;
    if sd <= 0.0 {
        return gap.max(0.0);
    }
    let u = gap / sd;
    gap * normal_cdf(u) + sd * normal_pdf(u)
}

/// `Pr[g ≤ 0]` under the Gaussian posterior.
pub fn feasibility_probability(p: &Prediction) -> f64 {
    let sd = p.std();
    if sd <= 0.0 {
        return if p.mean <= 0.0 { 1.0 } else { 0.0 };
    }
    normal_cdf(-p.mean / sd)
}

/// `EI(θ) · Π_i Pr[g_i ≤ 0]`, or the feasibility product alone without an
/// incumbent. `preds` is objective first.
pub fn cei_acquisition(preds: &[Prediction], incumbent: Option<f64>) -> f64 {
    let pof: f64 = preds[1..].iter().map(feasibility_probability).product();
    match incumbent {
        Some(best) => expected_improvement(&preds[0], best) * pof,
        None => pof,
    }
}

/// Best observed objective among evaluated points whose constraint
/// posterior means are all nonpositive.
pub fn cei_incumbent(models: &SurrogateSet) -> Result<Option<f64>> {
    let objective = models.objective();
    let mut best: Option<f64> = None;
    for (x, y) in objective.inputs().iter().zip(objective.targets()) {
        let mut feasible = true;
        for m in &models.models()[1..] {
            if m.mean(x)? > 0.0 {
                feasible = false;
                break;
            }
        }
        if feasible && best.is_none_or(|b| *y < b) {
            best = Some(*y);
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CeiState {
    pub best_feasible_value: Option<f64>,
}

/// Grid index maximizing the constrained expected improvement; ties go to
/// the lowest index.
pub fn cei_step(models: &SurrogateSet, state: &mut CeiState, z: &[f64], grid: &[Vec<f64>]) -> Result<usize> {
    if grid.is_empty() {
        return Err(Error::invalid("candidate grid is empty"));
    }
    state.best_feasible_value = cei_incumbent(models)?;
    let preds = predict_grid(models, grid, z)?;
    let mut best = (0, f64::NEG_INFINITY);
    for (j, p) in preds.iter().enumerate() {
        let a = cei_acquisition(p, state.best_feasible_value);
        if a > best.1 {
            best = (j, a);
        }
    }
    Ok(best.0)
}

#[derive(Clone, Debug, Default)]
pub struct Cei {
    pub state: CeiState,
}

impl Policy for Cei {
    fn name(&self) -> &str {
        "cei"
    }

    fn select(&mut self, models: &SurrogateSet, _t: usize, z: &[f64], grid: &ThetaGrid) -> Result<Selection> {
        Ok(Selection { index: cei_step(models, &mut self.state, z, grid.points())?, lambda: Vec::new() })
    }
}

/// Safe exploration state: a seed assumed feasible in every context and a
/// fixed confidence width.
#[derive(Clone, Debug, PartialEq)]
pub struct SafeBoState {
    /// Grid index of the safe seed.
    pub safe_seed: usize,
    pub beta_sqrt: f64,
}

impl SafeBoState {
    pub fn new(grid: &ThetaGrid, seed_theta: &[f64], beta_sqrt: f64) -> Result<Self> {
        if !(beta_sqrt > 0.0) {
            return Err(Error::invalid("beta must be positive"));
        }
        Ok(SafeBoState { safe_seed: grid.lattice().nearest(seed_theta), beta_sqrt })
    }
}

/// Indices of the safe set `{θ : u^{g_i}(θ, z) ≤ 0 ∀i} ∪ {seed}`.
pub fn safe_set(preds: &[Vec<Prediction>], state: &SafeBoState) -> Vec<bool> {
    preds
        .iter()
        .enumerate()
        .map(|(j, p)| j == state.safe_seed || p[1..].iter().all(|g| g.upper(state.beta_sqrt, f64::INFINITY) <= 0.0))
        .collect()
}

/// Simplified contextual SafeOpt step. Candidates are the safe minimizers
/// (`l^f ≤ min_safe u^f`) and safe points bordering the unsafe region; the
/// one with the widest objective interval wins, ties to the lowest index.
pub fn safe_bo_step(models: &SurrogateSet, state: &SafeBoState, z: &[f64], grid: &ThetaGrid) -> Result<usize> {
    if state.safe_seed >= grid.len() {
        return Err(Error::invalid("safe seed is not on the grid"));
    }
    let preds = predict_grid(models, grid.points(), z)?;
    let safe = safe_set(&preds, state);
    let b = state.beta_sqrt;
    let best_upper = preds
        .iter()
        .zip(&safe)
        .filter(|(_, s)| **s)
        .map(|(p, _)| p[0].upper(b, f64::INFINITY))
        .fold(f64::INFINITY, f64::min);
    let mut best = (state.safe_seed, f64::NEG_INFINITY);
    for (j, p) in preds.iter().enumerate() {
        if !safe[j] {
            continue;
        }
        let (lo, hi) = p[0].bounds(b, f64::INFINITY);
        let minimizer = lo <= best_upper;
        let expander = grid.lattice().neighbors(j).iter().any(|&k| !safe[k]);
        if (minimizer || expander) && hi - lo > best.1 {
            best = (j, hi - lo);
        }
    }
    Ok(best.0)
}

#[derive(Clone, Debug)]
pub struct SafeBo {
    pub state: SafeBoState,
}

impl Policy for SafeBo {
    fn name(&self) -> &str {
        "safe_bo"
    }

    fn select(&mut self, models: &SurrogateSet, _t: usize, z: &[f64], grid: &ThetaGrid) -> Result<Selection> {
        Ok(Selection { index: safe_bo_step(models, &self.state, z, grid)?, lambda: Vec::new() })
    }
}
