//! Posterior and information-gain properties against independent dense
//! computations.

use nalgebra::{DMatrix, DVector};
use pdcbo_core::gp::{info_gain_greedy_path, GpPosterior, KernelSpec};
use proptest::prelude::*;

/// `σ² exp(-Σ ((a_d - b_d) / ℓ_d)²)`, written out independently of the crate.
fn se(var: f64, ls: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let r2: f64 = a.iter().zip(b).zip(ls).map(|((x, y), l)| ((x - y) / l).powi(2)).sum();
    var * (-r2).exp()
}

/// Mean and variance from an explicit inverse of `K + noise·I`.
fn dense_posterior(var: f64, ls: &[f64], noise: f64, xs: &[Vec<f64>], ys: &[f64], q: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let k = DMatrix::from_fn(n, n, |i, j| se(var, ls, &xs[i], &xs[j]) + if i == j { noise } else { 0.0 });
    let inv = k.try_inverse().expect("invertible");
    let kq = DVector::from_fn(n, |i, _| se(var, ls, &xs[i], q));
    let y = DVector::from_column_slice(ys);
    let mean = (kq.transpose() * &inv * y)[0];
    let v = se(var, ls, q, q) - (kq.transpose() * &inv * &kq)[0];
    (mean, v)
}

/// `(signal variance, lengthscales, noise, inputs, outputs, query)`.
type Dataset = (f64, Vec<f64>, f64, Vec<Vec<f64>>, Vec<f64>, Vec<f64>);

fn dataset() -> impl Strategy<Value = Dataset> {
    (1usize..=3, 1usize..=20).prop_flat_map(|(d, n)| {
        (
            0.2f64..3.0,
            prop::collection::vec(0.3f64..3.0, d),
            0.01f64..0.5,
            prop::collection::vec(prop::collection::vec(-5.0f64..5.0, d), n),
            prop::collection::vec(-2.0f64..2.0, n),
            prop::collection::vec(-6.0f64..6.0, d),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn posterior_matches_dense_inverse((var, ls, noise, xs, ys, q) in dataset()) {
        let gp = GpPosterior::fit(KernelSpec::squared_exponential(var, ls.clone()).unwrap(), noise, xs.clone(), ys.clone()).unwrap();
        let p = gp.predict(&q).unwrap();
        let (m, v) = dense_posterior(var, &ls, noise, &xs, &ys, &q);
        prop_assert!((p.mean - m).abs() <= 1e-8, "mean {} vs {}", p.mean, m);
        prop_assert!((p.variance - v.max(0.0)).abs() <= 1e-8, "variance {} vs {}", p.variance, v);
    }

    #[test]
    fn incremental_and_batch_agree((var, ls, noise, xs, ys, q) in dataset()) {
        let spec = KernelSpec::squared_exponential(var, ls).unwrap();
        let mut inc = GpPosterior::new(spec.clone(), noise).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            inc.push(x.clone(), *y).unwrap();
        }
        let batch = GpPosterior::fit(spec, noise, xs, ys).unwrap();
        let (a, b) = (inc.predict(&q).unwrap(), batch.predict(&q).unwrap());
        prop_assert!((a.mean - b.mean).abs() <= 1e-9);
        prop_assert!((a.variance - b.variance).abs() <= 1e-9);
    }

    #[test]
    fn variance_never_grows_with_data((var, ls, noise, xs, ys, q) in dataset()) {
        let mut gp = GpPosterior::new(KernelSpec::squared_exponential(var, ls).unwrap(), noise).unwrap();
        let mut last = gp.predict(&q).unwrap().variance;
        prop_assert!((last - var).abs() < 1e-12);
        for (x, y) in xs.iter().zip(&ys) {
            gp.push(x.clone(), *y).unwrap();
            let v = gp.predict(&q).unwrap().variance;
            prop_assert!(v <= last + 1e-10);
            last = v;
        }
    }

    #[test]
    fn greedy_gain_is_monotone_with_shrinking_increments(
        ls in prop::collection::vec(0.5f64..3.0, 2),
        noise in 0.001f64..0.5,
        t in 1usize..40,
    ) {
        let spec = KernelSpec::squared_exponential(1.0, ls).unwrap();
        let grid: Vec<Vec<f64>> = (0..64).map(|i| vec![(i % 8) as f64, (i / 8) as f64]).collect();
        let path = info_gain_greedy_path(&spec, noise, &grid, t);
        prop_assert_eq!(path.len(), t + 1);
        prop_assert_eq!(path[0], 0.0);
        for w in path.windows(3) {
            let (d1, d2) = (w[1] - w[0], w[2] - w[1]);
            prop_assert!(d1 >= 0.0 && d2 >= 0.0);
            prop_assert!(d2 <= d1 + 1e-12);
        }
        // First pick: ½ ln(1 + σ²/noise) at prior variance 1.
        prop_assert!((path[1] - 0.5 * (1.0 + 1.0 / noise).ln()).abs() < 1e-12);
    }

    // Scaling by a power of four keeps every operation exact (square roots
    // included), so the greedy picks must agree bit for bit. Arbitrary
    // factors can flip near-tied argmax picks through round-off.
    #[test]
    fn greedy_gain_is_invariant_to_exact_joint_scaling(k in -3i32..4, t in 1usize..25) {
        let scale = 4f64.powi(k);
        let grid: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 * 0.3]).collect();
        let a = info_gain_greedy_path(&KernelSpec::squared_exponential(1.0, vec![1.0]).unwrap(), 0.01, &grid, t);
        let b = info_gain_greedy_path(&KernelSpec::squared_exponential(scale, vec![1.0]).unwrap(), 0.01 * scale, &grid, t);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn design_gain_is_invariant_to_joint_scaling(
        scale in 0.1f64..100.0,
        xs in prop::collection::vec(-4.0f64..4.0, 1..12),
    ) {
        let gain = |var: f64, noise: f64| {
            let n = xs.len();
            let k = DMatrix::from_fn(n, n, |i, j| se(var, &[1.0], &[xs[i]], &[xs[j]]) / noise + if i == j { 1.0 } else { 0.0 });
            0.5 * k.determinant().ln()
        };
        let (a, b) = (gain(1.0, 0.05), gain(scale, 0.05 * scale));
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn near_noiseless_posterior_interpolates() {
    let xs: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 * 0.7 - 4.0]).collect();
    let ys: Vec<f64> = xs.iter().map(|x| (x[0]).sin()).collect();
    let gp = GpPosterior::fit(KernelSpec::squared_exponential(1.0, vec![1.0]).unwrap(), 1e-10, xs.clone(), ys.clone())
        .unwrap();
    for (x, y) in xs.iter().zip(&ys) {
        let p = gp.predict(x).unwrap();
        assert!((p.mean - y).abs() < 1e-5, "at {x:?}: {} vs {y}", p.mean);
        assert!(p.variance < 1e-6);
    }
}

#[test]
fn duplicate_inputs_are_handled() {
    let x = vec![vec![0.5, 0.5]; 4];
    let gp =
        GpPosterior::fit(KernelSpec::squared_exponential(2.0, vec![1.0, 1.0]).unwrap(), 0.0, x, vec![1.0; 4]).unwrap();
    let p = gp.predict(&[0.5, 0.5]).unwrap();
    assert!((p.mean - 1.0).abs() < 1e-6);
    assert!(p.variance >= 0.0);
}
