//! Text summaries of persisted runs.

use std::fmt::Write as _;
use std::path::Path;

use pdcbo_core::trace::ExperimentTrace;

use crate::aggregate::{aggregate, Aggregate};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::suite::{traces_dir, CONFIG_FILE};
use crate::tracefile::{check_prefix_sums, list_traces, read_trace, TraceSidecar};

/// Every trace under `run_dir`, with sidecars.
pub fn load_run(run_dir: &Path) -> Result<Vec<(ExperimentTrace, TraceSidecar)>> {
    let dir = traces_dir(run_dir);
    list_traces(&dir)?.iter().map(|stem| read_trace(&dir, stem)).collect()
}

/// Rebuild the aggregate of a persisted run from its traces.
pub fn rebuild_aggregate(run_dir: &Path) -> Result<Aggregate> {
    let config = ExperimentConfig::load(&run_dir.join(CONFIG_FILE))?;
    let cells = load_run(run_dir)?;
    let traces: Vec<&ExperimentTrace> = cells.iter().map(|(t, _)| t).collect();
    let offsets = crate::suite::constraint_offsets(&config);
    Ok(aggregate(&config.name, &traces, config.band_multiplier, offsets))
}

/// Human-readable table of final values and check outcomes.
pub fn render(agg: &Aggregate, cells: &[(ExperimentTrace, TraceSidecar)]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "suite {} (band ±{} sd)", agg.name, agg.band_multiplier);
    let _ = writeln!(s, "{:<10} {:>4} {:>14} {:>14} cum g_i at T / avg g_i at T", "algorithm", "n", "R_T", "cost_T");
    for a in &agg.algorithms {
        let last = |name: &str| a.series(name).and_then(|s| s.last_mean()).unwrap_or(f64::NAN);
        let cons: Vec<String> = (1..=agg.n_constraints)
            .map(|i| format!("{:.4} / {:.5}", last(&format!("cum_g_{i}")), last(&format!("avg_g_{i}"))))
            .collect();
        let _ = writeln!(
            s,
            "{:<10} {:>4} {:>14.4} {:>14.4} {}",
            a.algorithm,
            a.replicates,
            last("cum_regret"),
            last("cum_cost"),
            cons.join(", ")
        );
    }
    let mut schema_bad = 0;
    let mut sigma_bad = 0;
    let mut dual_bad = 0;
    let mut dual_checked = 0;
    for (trace, side) in cells {
        if check_prefix_sums(trace).is_err() {
            schema_bad += 1;
        }
        if side.checks.sigma_sum.as_ref().is_some_and(|r| !r.holds()) {
            sigma_bad += 1;
        }
        if let Some(d) = side.checks.dual_bound.as_ref().filter(|d| d.skipped.is_none()) {
            dual_checked += 1;
            if !d.holds() {
                dual_bad += 1;
            }
        }
    }
    let _ = writeln!(s, "traces: {}; prefix-sum violations: {schema_bad}", cells.len());
    let _ = writeln!(s, "cumulative-sigma bound violations: {sigma_bad}");
    if dual_checked > 0 {
        let _ = writeln!(s, "dual bound violations: {dual_bad} of {dual_checked}");
    }
    s
}
