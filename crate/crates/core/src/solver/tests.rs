use proptest::prelude::*;

use super::*;
use crate::gp::{KernelSpec, SurrogateSpec};
use crate::problems::{ContextGenerator, Evaluation, FnProblem, Interval, Problem};

fn dual(lambda: Vec<f64>, eta: f64, epsilon: f64) -> DualState {
    DualState::new(lambda, eta, epsilon).unwrap()
}

#[test]
fn dual_update_examples() {
    assert!((dual_update(&dual(vec![2.0], 1.0, 0.1), &[0.5]).unwrap().lambda[0] - 2.6).abs() < 1e-15);
    assert_eq!(dual_update(&dual(vec![0.3], 1.0, 0.0), &[-1.0]).unwrap().lambda, vec![0.0]);
    let next = dual_update(&dual(vec![1.0, 0.0], 1.0, 0.05), &[-0.2, 0.4]).unwrap();
    assert!((next.lambda[0] - 0.85).abs() < 1e-15 && (next.lambda[1] - 0.45).abs() < 1e-15);
    assert!(dual_update(&dual(vec![1.0], 1.0, 0.0), &[1.0, 2.0]).is_err());
    assert!(DualState::new(vec![-1.0], 1.0, 0.0).is_err());
}

fn spec(dim: usize) -> SurrogateSpec {
    SurrogateSpec { kernel: KernelSpec::squared_exponential(2.0, vec![1.0; dim]).unwrap(), noise_variance: 0.0025 }
}

fn hand_models() -> SurrogateSet {
    let mut m = SurrogateSet::new(&[spec(2), spec(2)]).unwrap();
    m.push(&[0.0, 0.0], &[1.0, 0.5]).unwrap();
    m.push(&[1.0, 0.0], &[-0.5, 1.0]).unwrap();
    m.push(&[2.0, 0.0], &[0.2, -1.0]).unwrap();
    m
}

#[test]
fn zero_dual_minimizes_objective_bound() {
    let models = hand_models();
    let conf = Confidence::constant(1.0, 1).unwrap();
    let grid: Vec<Vec<f64>> = (0..21).map(|k| vec![k as f64 * 0.1]).collect();
    let s = primal_update(&models, &conf, 4, &dual(vec![0.0], 1.0, 0.0), &[0.0], &grid).unwrap();
    let lcb_f: Vec<f64> =
        grid.iter().map(|th| models.predict(&[th[0], 0.0]).unwrap()[0].lower(1.0, f64::INFINITY)).collect();
    let best = (0..grid.len()).fold(0, |b, j| if lcb_f[j] < lcb_f[b] { j } else { b });
    assert_eq!(s.index, best);
    assert_eq!(s.primal_objective_value, lcb_f[best]);
}

#[test]
fn single_point_grid() {
    let models = hand_models();
    let conf = Confidence::constant(1.0, 1).unwrap();
    let s = primal_update(&models, &conf, 4, &dual(vec![3.0], 0.5, 0.0), &[0.0], &[vec![1.5]]).unwrap();
    assert_eq!(s.index, 0);
    assert_eq!(s.theta, vec![1.5]);
    assert_eq!(s.primal_objective_value, s.lcb_f + 0.5 * 3.0 * s.lcb_g[0]);
}

#[test]
fn three_point_grid_matches_exhaustive_evaluation() {
    let models = hand_models();
    let conf = Confidence::constant(1.0, 1).unwrap();
    let grid = vec![vec![0.4], vec![1.1], vec![1.9]];
    let d = dual(vec![1.7], 0.8, 0.0);
    let s = primal_update(&models, &conf, 4, &d, &[0.0], &grid).unwrap();
    let values: Vec<f64> = grid
        .iter()
        .map(|th| {
            let p = models.predict(&[th[0], 0.0]).unwrap();
            let lf = p[0].mean - p[0].variance.sqrt();
            let lg = p[1].mean - p[1].variance.sqrt();
            lf + 0.8 * 1.7 * lg
        })
        .collect();
    let best = (0..3).fold(0, |b, j| if values[j] < values[b] { j } else { b });
    assert_eq!(s.index, best);
    assert!((s.primal_objective_value - values[best]).abs() < 1e-12);
}

fn smoke_problem() -> FnProblem {
    FnProblem::new(
        "smoke",
        vec![Interval::new(-1.0, 1.0).unwrap()],
        ContextGenerator::Uniform { bounds: vec![Interval::new(0.0, 0.0).unwrap()] },
        1,
        |th, _| Evaluation { objective: th[0] * th[0], constraints: vec![th[0] - 10.0] },
    )
    .unwrap()
}

fn practical(horizon: usize) -> PdcboSettings {
    PdcboSettings {
        schedule: ScheduleConfig::practical(horizon, 1.0, 0.0).unwrap(),
        confidence: Confidence::constant(1.0, 1).unwrap(),
    }
}

fn smoke_surrogates() -> Vec<SurrogateSpec> {
    let s =
        SurrogateSpec { kernel: KernelSpec::squared_exponential(1.0, vec![0.5, 1.0]).unwrap(), noise_variance: 1e-6 };
    vec![s.clone(), s]
}

#[test]
fn first_step_without_data_takes_first_grid_point() {
    let p = smoke_problem();
    let grid = ThetaGrid::uniform(p.theta_box().to_vec(), 21).unwrap();
    let sur = smoke_surrogates();
    let env = RunEnv { problem: &p, grid: &grid, surrogates: &sur, seed: 1 };
    let trace = run_pdcbo(&env, &practical(1), 1).unwrap();
    assert_eq!(trace.rows[0].theta, vec![-1.0]);
}

#[test]
fn smoke_problem_regret_vanishes() {
    let p = smoke_problem();
    let grid = ThetaGrid::uniform(p.theta_box().to_vec(), 21).unwrap();
    let sur = smoke_surrogates();
    let env = RunEnv { problem: &p, grid: &grid, surrogates: &sur, seed: 3 };
    let trace = run_pdcbo(&env, &practical(12), 12).unwrap();
    let first_zero = trace.rows.iter().position(|r| r.regret() == 0.0).expect("reaches the optimum");
    assert!(first_zero < 10, "regret per step {:?}", trace.rows.iter().map(|r| r.regret()).collect::<Vec<_>>());
    assert!(trace.rows[9..].iter().all(|r| r.regret() == 0.0));
}

#[test]
fn identical_seeds_give_identical_traces() {
    let p = smoke_problem().with_noise(vec![0.05, 0.05]).unwrap();
    let grid = ThetaGrid::uniform(p.theta_box().to_vec(), 21).unwrap();
    let sur = smoke_surrogates();
    let env = RunEnv { problem: &p, grid: &grid, surrogates: &sur, seed: 9 };
    let a = run_pdcbo(&env, &practical(15), 15).unwrap();
    let b = run_pdcbo(&env, &practical(15), 15).unwrap();
    assert_eq!(a, b);
    let c = run_pdcbo(&RunEnv { seed: 10, ..env }, &practical(15), 15).unwrap();
    assert_ne!(a.rows, c.rows);
}

#[test]
fn doubling_arithmetic() {
    assert_eq!(doubling_epochs(1, 7), vec![(1, 1), (2, 2), (4, 4)]);
    assert_eq!(doubling_epochs(1, 8), vec![(1, 1), (2, 2), (4, 4), (8, 1)]);
    assert_eq!(doubling_epochs(5, 5), vec![(5, 5)]);
    assert!(doubling_epochs(3, 0).is_empty());
}

fn theory_settings(horizon: usize, initial_epoch: usize) -> PdcboSettings {
    let mut schedule = ScheduleConfig::theory(horizon, 1.0, vec![1.0], 0.5).unwrap();
    schedule.doubling = true;
    schedule.initial_epoch = initial_epoch;
    let beta = crate::gp::BetaSchedule::theory(vec![1.0, 1.0], 0.05, 0.05).unwrap();
    let grid = gamma_grid(&[Interval::new(-1.0, 1.0).unwrap()], &[Interval::new(0.0, 0.0).unwrap()]).unwrap();
    PdcboSettings { schedule, confidence: Confidence::theory(beta, &smoke_surrogates(), &grid, 64).unwrap() }
}

#[test]
fn doubling_epochs_in_trace() {
    let p = smoke_problem();
    let grid = ThetaGrid::uniform(p.theta_box().to_vec(), 11).unwrap();
    let sur = smoke_surrogates();
    let env = RunEnv { problem: &p, grid: &grid, surrogates: &sur, seed: 2 };
    let trace = run_with_doubling(&env, &theory_settings(7, 1), 7).unwrap();
    assert_eq!(trace.len(), 7);
    assert_eq!(trace.epoch_ends(), vec![1, 3, 7]);
    let etas: Vec<f64> = trace.meta.epochs.iter().map(|e| e.eta).collect();
    assert_eq!(etas, vec![1.0, 1.0 / 2f64.sqrt(), 0.5]);
    // Each epoch restarts the dual vector at its own level.
    for e in &trace.meta.epochs {
        assert_eq!(trace.rows[e.start].lambda, e.initial_lambda);
    }
}

#[test]
fn single_epoch_doubling_equals_plain_run() {
    let p = smoke_problem().with_noise(vec![0.05, 0.05]).unwrap();
    let grid = ThetaGrid::uniform(p.theta_box().to_vec(), 11).unwrap();
    let sur = smoke_surrogates();
    let env = RunEnv { problem: &p, grid: &grid, surrogates: &sur, seed: 4 };
    let s = theory_settings(6, 6);
    assert_eq!(run_with_doubling(&env, &s, 6).unwrap(), run_pdcbo(&env, &s, 6).unwrap());
}

fn wavy_problem() -> FnProblem {
    FnProblem::new(
        "wavy",
        vec![Interval::new(-2.0, 2.0).unwrap()],
        ContextGenerator::Uniform { bounds: vec![Interval::new(-1.0, 1.0).unwrap()] },
        2,
        |th, z| Evaluation {
            objective: (2.0 * th[0]).sin() + 0.3 * z[0] * th[0],
            constraints: vec![0.4 - th[0] + 0.2 * z[0], th[0] * th[0] - 3.0 + 0.5 * z[0]],
        },
    )
    .unwrap()
    .with_noise(vec![0.05; 3])
    .unwrap()
}

fn wavy_run(seed: u64, eta: f64, epsilon: f64) -> (ExperimentTrace, Vec<SurrogateSpec>, ThetaGrid) {
    let p = wavy_problem();
    let grid = ThetaGrid::uniform(p.theta_box().to_vec(), 17).unwrap();
    let sur = vec![spec(2), spec(2), spec(2)];
    let settings = PdcboSettings {
        schedule: ScheduleConfig::practical(25, eta, epsilon).unwrap(),
        confidence: Confidence::constant(1.0, 2).unwrap(),
    };
    let env = RunEnv { problem: &p, grid: &grid, surrogates: &sur, seed };
    let trace = run_pdcbo(&env, &settings, 25).unwrap();
    (trace, sur, grid)
}

/// Rebuild the surrogates from the logged observations and recompute the
/// lower bounds of every grid point at step `t`.
fn replay_bounds(trace: &ExperimentTrace, sur: &[SurrogateSpec], grid: &ThetaGrid) -> Vec<Vec<Vec<f64>>> {
    let mut models = SurrogateSet::new(sur).unwrap();
    let conf = Confidence::constant(1.0, 2).unwrap();
    let mut out = Vec::new();
    for r in &trace.rows {
        let preds = predict_grid(&models, grid.points(), &r.context).unwrap();
        out.push(lower_bounds(&preds, &conf, r.t).unwrap());
        models.push(&joint(&r.theta, &r.context), &r.observed).unwrap();
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn logged_steps_are_primal_optimal_and_duals_telescope(
        seed in 0u64..1000,
        eta in 0.1f64..5.0,
        epsilon in 0.0f64..0.2,
    ) {
        let (trace, sur, grid) = wavy_run(seed, eta, epsilon);
        let bounds = replay_bounds(&trace, &sur, &grid);
        let mut lcb_sum = [0.0; 2];
        for (r, lcb) in trace.rows.iter().zip(&bounds) {
            prop_assert!(r.lambda.iter().all(|l| *l >= 0.0));
            let d = DualState::new(r.lambda.clone(), eta, epsilon).unwrap();
            let (best, value) = primal_argmin(lcb, &d).unwrap();
            let chosen = grid.lattice().nearest(&r.theta);
            prop_assert_eq!(best, chosen);
            let no_better = lcb.iter().all(|l| l[0] + eta * (r.lambda[0] * l[1] + r.lambda[1] * l[2]) >= value);
            prop_assert!(no_better);
            for i in 0..2 {
                lcb_sum[i] += lcb[chosen][i + 1] + epsilon;
            }
        }
        let last = &trace.meta.epochs[0].final_lambda;
        for i in 0..2 {
            prop_assert!(last[i] >= lcb_sum[i] - 1e-9);
        }
    }

    #[test]
    fn larger_dual_never_raises_the_weighted_constraint_bound(
        seed in 0u64..1000,
        base in 0.0f64..3.0,
        bump in 0.0f64..5.0,
        which in 0usize..2,
    ) {
        let (trace, sur, grid) = wavy_run(seed, 1.0, 0.0);
        let bounds = replay_bounds(&trace, &sur, &grid);
        let lcb = &bounds[trace.len() / 2];
        let mut lo = vec![base, base];
        let d_lo = DualState::new(lo.clone(), 1.0, 0.0).unwrap();
        lo[which] += bump;
        let d_hi = DualState::new(lo, 1.0, 0.0).unwrap();
        let (j_lo, _) = primal_argmin(lcb, &d_lo).unwrap();
        let (j_hi, _) = primal_argmin(lcb, &d_hi).unwrap();
        prop_assert!(lcb[j_hi][which + 1] <= lcb[j_lo][which + 1] + 1e-12);
    }
}
