//! Trace persistence: one CSV per cell plus a JSON sidecar.
//!
//! CSV columns, in order (`N` constraints, objective index 0):
//!
//! | column | meaning |
//! |---|---|
//! | `t` | 1-based step |
//! | `z_0 …` | context |
//! | `theta_0 …` | chosen parameters |
//! | `y_0 … y_N` | noisy observations |
//! | `f` | true objective |
//! | `g_1 … g_N` | true constraints |
//! | `f_star` | lattice optimum for the step's context |
//! | `lambda_1 … lambda_N` | dual vector used to choose |
//! | `sigma_0 … sigma_N` | posterior std at the choice, before conditioning |
//! | `cum_regret` | running sum of `f - f_star` |
//! | `cum_g_1 … cum_g_N` | running sums of `g_i` |
//!
//! Floats are written in shortest round-trip form, so parsing an emitted
//! trace gives back the same values bit for bit.

use std::path::{Path, PathBuf};

use pdcbo_core::metrics::{DualBoundReport, SigmaSumReport};
use pdcbo_core::trace::{ExperimentTrace, StepRecord, TraceMeta};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

/// Per-cell checks computed after the run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CellChecks {
    #[serde(default)]
    pub instance_seed: Option<u64>,
    #[serde(default)]
    pub slater_margin: Option<f64>,
    #[serde(default)]
    pub sigma_sum: Option<SigmaSumReport>,
    #[serde(default)]
    pub dual_bound: Option<DualBoundReport>,
    /// Theory-mode horizon at which `ε ≤ ξ/2` would first hold.
    #[serde(default)]
    pub required_horizon: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSidecar {
    pub config_hash: String,
    pub replicate: usize,
    pub wall_time_secs: f64,
    pub meta: TraceMeta,
    pub checks: CellChecks,
}

pub fn trace_stem(algorithm: &str, replicate: usize) -> String {
    format!("{algorithm}_r{replicate:03}")
}

pub fn csv_path(dir: &Path, stem: &str) -> PathBuf {
    dir.join(format!("{stem}.csv"))
}

pub fn sidecar_path(dir: &Path, stem: &str) -> PathBuf {
    dir.join(format!("{stem}.json"))
}

fn header(n_z: usize, n_theta: usize, n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((0..n_z).map(|i| format!("z_{i}")));
    h.extend((0..n_theta).map(|i| format!("theta_{i}")));
    h.extend((0..=n).map(|i| format!("y_{i}")));
    h.push("f".into());
    h.extend((1..=n).map(|i| format!("g_{i}")));
    h.push("f_star".into());
    h.extend((1..=n).map(|i| format!("lambda_{i}")));
    h.extend((0..=n).map(|i| format!("sigma_{i}")));
    h.push("cum_regret".into());
    h.extend((1..=n).map(|i| format!("cum_g_{i}")));
    h
}

/// Render the rows of a trace as CSV bytes.
pub fn emit_csv(trace: &ExperimentTrace) -> Result<Vec<u8>> {
    let m = &trace.meta;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header(m.n_z, m.n_theta, m.n_constraints))?;
    for r in &trace.rows {
        let mut rec = vec![r.t.to_string()];
        let mut put = |v: &[f64]| rec.extend(v.iter().map(|x| x.to_string()));
        put(&r.context);
        put(&r.theta);
        put(&r.observed);
        put(&[r.true_objective]);
        put(&r.true_constraints);
        put(&[r.optimal_objective]);
        put(&r.lambda);
        put(&r.sigma);
        put(&[r.cum_regret]);
        put(&r.cum_constraints);
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| BenchError::Config(format!("csv buffer: {e}")))
}

/// Parse CSV produced by [`emit_csv`]. Dimensions come from the header;
/// `meta` supplies the rest.
pub fn parse_csv(bytes: &[u8], mut meta: TraceMeta, origin: &Path) -> Result<ExperimentTrace> {
    let mut r = csv::Reader::from_reader(bytes);
    let head: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let count = |prefix: &str| head.iter().filter(|h| h.starts_with(prefix)).count();
    let n_z = count("z_");
    let n_theta = count("theta_");
    let n = count("lambda_");
    if head != header(n_z, n_theta, n) {
        return Err(BenchError::trace(origin, "unexpected column layout"));
    }
    meta.n_z = n_z;
    meta.n_theta = n_theta;
    meta.n_constraints = n;

    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let mut cells = rec.iter();
        let t: usize =
            cells.next().and_then(|s| s.parse().ok()).ok_or_else(|| BenchError::trace(origin, "bad step index"))?;
        let vals: Vec<f64> = cells
            .map(|s| s.parse::<f64>().map_err(|_| BenchError::trace(origin, format!("bad number {s:?} at t={t}"))))
            .collect::<Result<_>>()?;
        let mut it = vals.into_iter();
        let mut take = |k: usize| -> Vec<f64> { it.by_ref().take(k).collect() };
        rows.push(StepRecord {
            t,
            context: take(n_z),
            theta: take(n_theta),
            observed: take(n + 1),
            true_objective: take(1)[0],
            true_constraints: take(n),
            optimal_objective: take(1)[0],
            lambda: take(n),
            sigma: take(n + 1),
            cum_regret: take(1)[0],
            cum_constraints: take(n),
        });
    }
    Ok(ExperimentTrace { meta, rows })
}

/// Rows must be numbered `1..=T` and the cumulative columns must be the
/// running sums of the per-step columns.
pub fn check_prefix_sums(trace: &ExperimentTrace) -> std::result::Result<(), String> {
    let mut regret = 0.0;
    let mut cum = vec![0.0; trace.meta.n_constraints];
    for (k, r) in trace.rows.iter().enumerate() {
        if r.t != k + 1 {
            return Err(format!("row {k} has t = {}", r.t));
        }
        regret += r.regret();
        if regret != r.cum_regret {
            return Err(format!("cum_regret mismatch at t = {}", r.t));
        }
        for (c, g) in cum.iter_mut().zip(&r.true_constraints) {
            *c += g;
        }
        if cum != r.cum_constraints {
            return Err(format!("cumulative constraint mismatch at t = {}", r.t));
        }
    }
    Ok(())
}

pub fn write_trace(dir: &Path, trace: &ExperimentTrace, sidecar: &TraceSidecar) -> Result<String> {
    std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let stem = trace_stem(&trace.meta.algorithm, sidecar.replicate);
    let csv = csv_path(dir, &stem);
    std::fs::write(&csv, emit_csv(trace)?).map_err(|e| BenchError::io(&csv, e))?;
    let side = sidecar_path(dir, &stem);
    let json = serde_json::to_vec_pretty(sidecar)?;
    std::fs::write(&side, json).map_err(|e| BenchError::io(&side, e))?;
    Ok(stem)
}

pub fn read_sidecar(dir: &Path, stem: &str) -> Result<TraceSidecar> {
    let path = sidecar_path(dir, stem);
    let text = std::fs::read(&path).map_err(|e| BenchError::io(&path, e))?;
    Ok(serde_json::from_slice(&text)?)
}

pub fn read_trace(dir: &Path, stem: &str) -> Result<(ExperimentTrace, TraceSidecar)> {
    let sidecar = read_sidecar(dir, stem)?;
    let path = csv_path(dir, stem);
    let bytes = std::fs::read(&path).map_err(|e| BenchError::io(&path, e))?;
    let trace = parse_csv(&bytes, sidecar.meta.clone(), &path)?;
    if trace.meta != sidecar.meta {
        return Err(BenchError::trace(&path, "header dimensions disagree with the sidecar"));
    }
    Ok((trace, sidecar))
}

/// Stems of every trace in `dir`, sorted.
pub fn list_traces(dir: &Path) -> Result<Vec<String>> {
    let entries = std::fs::read_dir(dir).map_err(|e| BenchError::io(dir, e))?;
    let mut stems = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| BenchError::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "csv") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                if sidecar_path(dir, stem).exists() {
                    stems.push(stem.to_string());
                }
            }
        }
    }
    stems.sort();
    Ok(stems)
}
