//! Candidate sets: regular lattices over a box and Halton point sets.

use crate::error::{Error, Result};
use crate::problems::Interval;

/// Regular lattice over a box. Point index is row-major with the first
/// dimension varying slowest, so "lowest index" tie-breaks are well defined.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    bounds: Vec<Interval>,
    resolution: Vec<usize>,
}

impl Lattice {
    pub fn new(bounds: Vec<Interval>, resolution: Vec<usize>) -> Result<Self> {
        if bounds.len() != resolution.len() {
            return Err(Error::DimensionMismatch { expected: bounds.len(), got: resolution.len() });
        }
        if bounds.is_empty() {
            return Err(Error::invalid("lattice needs at least one dimension"));
        }
        if resolution.contains(&0) {
            return Err(Error::invalid("lattice resolution must be >= 1 per dimension"));
        }
        Ok(Lattice { bounds, resolution })
    }

    pub fn uniform(bounds: Vec<Interval>, per_dim: usize) -> Result<Self> {
        let n = bounds.len();
        Self::new(bounds, vec![per_dim; n])
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn bounds(&self) -> &[Interval] {
        &self.bounds
    }

    fn coord(&self, d: usize, k: usize) -> f64 {
        let r = self.resolution[d];
        let b = self.bounds[d];
        if r == 1 {
            0.5 * (b.lo + b.hi)
        } else {
            b.lo + (b.hi - b.lo) * k as f64 / (r - 1) as f64
        }
    }

    pub fn multi_index(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for d in (0..self.dim()).rev() {
            out[d] = index % self.resolution[d];
            index /= self.resolution[d];
        }
        out
    }

    fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.resolution).fold(0, |acc, (m, r)| acc * r + m)
    }

    pub fn point(&self, index: usize) -> Vec<f64> {
        self.multi_index(index).iter().enumerate().map(|(d, &k)| self.coord(d, k)).collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Indices of the axis-aligned neighbours of a lattice point.
    pub fn neighbors(&self, index: usize) -> Vec<usize> {
        let m = self.multi_index(index);
        let mut out = Vec::with_capacity(2 * self.dim());
        for d in 0..self.dim() {
            for step in [-1i64, 1] {
                let k = m[d] as i64 + step;
                if k >= 0 && (k as usize) < self.resolution[d] {
                    let mut n = m.clone();
                    n[d] = k as usize;
                    out.push(self.flat_index(&n));
                }
            }
        }
        out
    }

    /// Index of the lattice point nearest to `x` (per-axis rounding).
    pub fn nearest(&self, x: &[f64]) -> usize {
        let multi: Vec<usize> = (0..self.dim())
            .map(|d| {
                let r = self.resolution[d];
                if r == 1 {
                    return 0;
                }
                let b = self.bounds[d];
                let u = ((x[d] - b.lo) / (b.hi - b.lo) * (r - 1) as f64).round();
                u.clamp(0.0, (r - 1) as f64) as usize
            })
            .collect();
        self.flat_index(&multi)
    }
}

/// A parameter lattice with its points materialized once.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaGrid {
    lattice: Lattice,
    points: Vec<Vec<f64>>,
}

impl ThetaGrid {
    pub fn new(lattice: Lattice) -> Self {
        let points = lattice.points();
        ThetaGrid { lattice, points }
    }

    pub fn uniform(bounds: Vec<Interval>, per_dim: usize) -> Result<Self> {
        Ok(Self::new(Lattice::uniform(bounds, per_dim)?))
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, index: usize) -> &[f64] {
        &self.points[index]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    out
}

/// First `n` Halton points (skipping index 0) scaled into the box.
pub fn halton_points(bounds: &[Interval], n: usize) -> Result<Vec<Vec<f64>>> {
    if bounds.len() > PRIMES.len() {
        return Err(Error::invalid(format!("halton sequence supports up to {} dims", PRIMES.len())));
    }
    Ok((1..=n as u64)
        .map(|i| bounds.iter().zip(PRIMES).map(|(b, p)| b.lo + (b.hi - b.lo) * radical_inverse(i, p)).collect())
        .collect())
}
