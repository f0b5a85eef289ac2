use super::kernel::KernelSpec;

/// Greedy estimate of the maximum information gain after `t` observations.
///
/// Repeatedly picks the candidate with the largest marginal gain
/// `½ ln(1 + σ²(x) / noise)` under the current posterior (points may be
/// picked more than once) and returns the accumulated sum. By
/// submodularity this is within a factor `1 - 1/e` of the best `t`-subset
/// of the grid.
pub fn info_gain_greedy(spec: &KernelSpec, noise_variance: f64, grid: &[Vec<f64>], t: usize) -> f64 {
    info_gain_greedy_path(spec, noise_variance, grid, t).last().copied().unwrap_or(0.0)
}

/// Prefix values of the greedy estimate: entry `s` is the estimate for `s`
/// observations, `s = 0..=t`.
pub fn info_gain_greedy_path(spec: &KernelSpec, noise_variance: f64, grid: &[Vec<f64>], t: usize) -> Vec<f64> {
    let mut path = Vec::with_capacity(t + 1);
    path.push(0.0);
    if grid.is_empty() || t == 0 {
        return path;
    }
    let noise = noise_variance.max(f64::MIN_POSITIVE);
    let mut var: Vec<f64> = grid.iter().map(|x| spec.prior_variance(x)).collect();
    // Columns of the partial Cholesky factor of the selected points, one per pick.
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(t);
    let mut total = 0.0;
    for _ in 0..t {
        let (best, best_var) =
            var.iter()
                .copied()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        let best_var = best_var.max(0.0);
        total += 0.5 * (1.0 + best_var / noise).ln();
        path.push(total);

        let denom = (best_var + noise).sqrt();
        let xb = &grid[best];
        let col: Vec<f64> = grid
            .iter()
            .enumerate()
            .map(|(j, x)| {
                let mut c = spec.eval_unchecked(x, xb);
                for prev in &cols {
                    c -= prev[j] * prev[best];
                }
                c / denom
            })
            .collect();
        for (v, c) in var.iter_mut().zip(&col) {
            *v = (*v - c * c).max(0.0);
        }
        cols.push(col);
    }
    path
}
