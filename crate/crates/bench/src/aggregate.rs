//! Mean and standard-deviation curves over replicates.

use std::collections::BTreeMap;
use std::path::Path;

use pdcbo_core::trace::ExperimentTrace;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

/// Per-step mean and standard deviation of one quantity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Series {
    /// `(mean - m·std, mean + m·std)` per step.
    pub fn band(&self, multiplier: f64) -> (Vec<f64>, Vec<f64>) {
        let lo = self.mean.iter().zip(&self.std).map(|(m, s)| m - multiplier * s).collect();
        let hi = self.mean.iter().zip(&self.std).map(|(m, s)| m + multiplier * s).collect();
        (lo, hi)
    }

    pub fn last_mean(&self) -> Option<f64> {
        self.mean.last().copied()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub algorithm: String,
    pub replicates: usize,
    pub series: Vec<Series>,
}

impl AlgorithmSummary {
    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }
}

/// Everything the figures need.
///
/// Series names: `cum_regret`, `cum_cost` (running sum of `f`),
/// `cum_g_i` and `avg_g_i` (running mean of `g_i`) for `i = 1..=N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub name: String,
    pub band_multiplier: f64,
    pub n_constraints: usize,
    /// Added to `avg_g_i` when plotting, so constraints of the form
    /// `x - threshold` are shown on the scale of `x`.
    pub constraint_offsets: Vec<f64>,
    pub algorithms: Vec<AlgorithmSummary>,
}

impl Aggregate {
    pub fn empty(name: &str, band_multiplier: f64) -> Self {
        Aggregate {
            name: name.to_string(),
            band_multiplier,
            n_constraints: 0,
            constraint_offsets: Vec::new(),
            algorithms: Vec::new(),
        }
    }

    pub fn algorithm(&self, name: &str) -> Option<&AlgorithmSummary> {
        self.algorithms.iter().find(|a| a.algorithm == name)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec_pretty(self)?;
        std::fs::write(path, json).map_err(|e| BenchError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| BenchError::io(path, e))?;
        Ok(serde_json::from_slice(&bytes)?)
    }
}

/// Sample mean and standard deviation (`n - 1` denominator; zero for one
/// value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn columns(trace: &ExperimentTrace) -> Vec<(String, Vec<f64>)> {
    let n = trace.meta.n_constraints;
    let mut out = vec![("cum_regret".to_string(), trace.rows.iter().map(|r| r.cum_regret).collect())];
    let mut cost = 0.0;
    out.push((
        "cum_cost".to_string(),
        trace
            .rows
            .iter()
            .map(|r| {
                cost += r.true_objective;
                cost
            })
            .collect(),
    ));
    for i in 0..n {
        out.push((format!("cum_g_{}", i + 1), trace.rows.iter().map(|r| r.cum_constraints[i]).collect()));
        out.push((format!("avg_g_{}", i + 1), trace.rows.iter().map(|r| r.cum_constraints[i] / r.t as f64).collect()));
    }
    out
}

/// Group traces by algorithm and average each series step by step. Steps
/// beyond the shortest trace of a group are dropped.
pub fn aggregate(
    name: &str,
    traces: &[&ExperimentTrace],
    band_multiplier: f64,
    constraint_offsets: Vec<f64>,
) -> Aggregate {
    let mut groups: BTreeMap<&str, Vec<&ExperimentTrace>> = BTreeMap::new();
    for t in traces {
        groups.entry(t.meta.algorithm.as_str()).or_default().push(t);
    }
    let n_constraints = traces.first().map_or(0, |t| t.meta.n_constraints);
    let algorithms = groups
        .into_iter()
        .map(|(alg, group)| {
            let len = group.iter().map(|t| t.len()).min().unwrap_or(0);
            let cols: Vec<Vec<(String, Vec<f64>)>> = group.iter().map(|t| columns(t)).collect();
            let series = (0..cols[0].len())
                .map(|k| {
                    let (mean, std) =
                        (0..len).map(|step| mean_std(&cols.iter().map(|c| c[k].1[step]).collect::<Vec<_>>())).unzip();
                    Series { name: cols[0][k].0.clone(), mean, std }
                })
                .collect();
            AlgorithmSummary { algorithm: alg.to_string(), replicates: group.len(), series }
        })
        .collect();
    Aggregate { name: name.to_string(), band_multiplier, n_constraints, constraint_offsets, algorithms }
}
