//! Packed lower-triangular Cholesky factor that grows one row at a time.

use crate::error::{Error, Result};

/// Diagonal jitter levels tried, in order, before giving up on a factorization.
pub const JITTER_LADDER: [f64; 4] = [0.0, 1e-10, 1e-8, 1e-6];

/// Smallest accepted squared pivot, relative to the diagonal entry.
const PIVOT_FLOOR: f64 = 1e-12;

/// Lower-triangular `L` stored row-major and packed: row `i` holds `i + 1` entries.
#[derive(Clone, Debug, Default)]
pub(crate) struct LowerFactor {
    data: Vec<f64>,
    n: usize,
}

#[inline]
fn row_start(i: usize) -> usize {
    i * (i + 1) / 2
}

impl LowerFactor {
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[row_start(i)..row_start(i + 1)]
    }

    /// Factor a symmetric matrix given as a packed lower triangle, adding
    /// `jitter` to the diagonal. Returns `None` when a pivot is not positive
    /// relative to its diagonal entry.
    pub fn factor_packed(lower: &[f64], n: usize, jitter: f64) -> Option<Self> {
        debug_assert_eq!(lower.len(), row_start(n));
        let mut data = vec![0.0; row_start(n)];
        for i in 0..n {
            let ri = row_start(i);
            for j in 0..=i {
                let rj = row_start(j);
                let dot: f64 = data[ri..ri + j].iter().zip(&data[rj..rj + j]).map(|(a, b)| a * b).sum();
                let mut v = lower[ri + j] - dot;
                if i == j {
                    v += jitter;
                    if !(v > (lower[ri + j] + jitter) * PIVOT_FLOOR) || !v.is_finite() {
                        return None;
                    }
                    data[ri + j] = v.sqrt();
                } else {
                    data[ri + j] = v / data[rj + j];
                }
            }
        }
        Some(LowerFactor { data, n })
    }

    /// Walk the jitter ladder until the factorization succeeds.
    pub fn factor_with_jitter(lower: &[f64], n: usize) -> Result<(Self, f64)> {
        for &jitter in JITTER_LADDER.iter() {
            if let Some(f) = Self::factor_packed(lower, n, jitter) {
                return Ok((f, jitter));
            }
        }
        Err(Error::Factorization { jitters: JITTER_LADDER.to_vec() })
    }

    /// Solve `L v = b`.
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let row = self.row(i);
            let dot: f64 = row[..i].iter().zip(&v).map(|(a, b)| a * b).sum();
            v.push((b[i] - dot) / row[i]);
        }
        v
    }

    /// Solve `Lᵀ x = b`.
    pub fn backward_transposed(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        for i in (0..self.n).rev() {
            let row = self.row(i);
            x[i] /= row[i];
            let xi = x[i];
            for (xj, lij) in x[..i].iter_mut().zip(&row[..i]) {
                *xj -= lij * xi;
            }
        }
        x
    }

    /// Append the row for a new point with cross-covariances `cross` (against
    /// the existing points) and diagonal entry `diag`. Returns `false` and
    /// leaves the factor untouched if the new pivot is not positive.
    pub fn try_append(&mut self, cross: &[f64], diag: f64) -> bool {
        let l = self.forward(cross);
        let d2 = diag - l.iter().map(|v| v * v).sum::<f64>();
        // A pivot this small relative to the diagonal means the rank-1 update
        // has lost all precision; the caller refactors instead.
        if !(d2 > diag * PIVOT_FLOOR) || !d2.is_finite() {
            return false;
        }
        self.data.extend_from_slice(&l);
        self.data.push(d2.sqrt());
        self.n += 1;
        true
    }
}
