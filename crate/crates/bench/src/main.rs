use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pdcbo_bench::aggregate::Aggregate;
use pdcbo_bench::config::ExperimentConfig;
use pdcbo_bench::figures::emit_figures;
use pdcbo_bench::report::{load_run, rebuild_aggregate, render};
use pdcbo_bench::suite::{replay, run_suite, AGGREGATE_FILE};
use pdcbo_bench::BenchError;

const EXIT_CELLS_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "pdcbo-bench", version, about = "Run and report constrained contextual BO experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (algorithm, replicate) cell of a TOML config.
    Run {
        config: PathBuf,
        /// Override the horizon T.
        #[arg(long)]
        horizon: Option<usize>,
        /// Override the replicate count.
        #[arg(long)]
        replicates: Option<usize>,
        /// Override the base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: the config's `output_dir`, else `runs/<name>`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write SVG figures.
        #[arg(long)]
        figures: bool,
    },
    /// Re-run a persisted run and compare traces byte for byte.
    Replay { run_dir: PathBuf },
    /// Summarize a persisted run and refresh its aggregate.
    Report { run_dir: PathBuf },
    /// Write SVG figures for an aggregate file.
    Figures {
        aggregate: PathBuf,
        /// Output directory (default: `figures/` next to the aggregate).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_for(err: &BenchError) -> ExitCode {
    eprintln!("error: {err}");
    match err {
        BenchError::Config(_) => ExitCode::from(EXIT_CONFIG),
        _ => ExitCode::from(EXIT_CELLS_FAILED),
    }
}

fn figures_dir(aggregate: &Path) -> PathBuf {
    aggregate.parent().unwrap_or(Path::new(".")).join("figures")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, horizon, replicates, seed, out, figures } => {
            let mut cfg = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            if let Some(h) = horizon {
                cfg.horizon = h;
            }
            if let Some(r) = replicates {
                cfg.replicates = r;
            }
            if let Some(s) = seed {
                cfg.base_seed = s;
            }
            if let Err(e) = cfg.validate() {
                return exit_for(&e);
            }
            let dir = out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("runs").join(&cfg.name));
            let outcome = match run_suite(&cfg, Some(&dir)) {
                Ok(o) => o,
                Err(e) => return exit_for(&e),
            };
            match load_run(&dir) {
                Ok(cells) => print!("{}", render(&outcome.aggregate, &cells)),
                Err(e) => return exit_for(&e),
            }
            if figures {
                if let Err(e) = emit_figures(&outcome.aggregate, &dir.join("figures")) {
                    return exit_for(&e);
                }
            }
            println!("wrote {}", dir.display());
            if outcome.failed() {
                for f in &outcome.summary.failures {
                    eprintln!("failed: {f}");
                }
                return ExitCode::from(EXIT_CELLS_FAILED);
            }
            ExitCode::SUCCESS
        }
        Command::Replay { run_dir } => match replay(&run_dir) {
            Ok(r) => {
                println!("matched {} traces", r.matched.len());
                for m in r.mismatched.iter().chain(&r.missing) {
                    println!("differs: {m}");
                }
                if r.identical() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(EXIT_CELLS_FAILED)
                }
            }
            Err(e) => exit_for(&e),
        },
        Command::Report { run_dir } => {
            let result = rebuild_aggregate(&run_dir).and_then(|agg| {
                agg.save(&run_dir.join(AGGREGATE_FILE))?;
                Ok((agg, load_run(&run_dir)?))
            });
            match result {
                Ok((agg, cells)) => {
                    print!("{}", render(&agg, &cells));
                    ExitCode::SUCCESS
                }
                Err(e) => exit_for(&e),
            }
        }
        Command::Figures { aggregate, out } => {
            let dir = out.unwrap_or_else(|| figures_dir(&aggregate));
            match Aggregate::load(&aggregate).and_then(|agg| emit_figures(&agg, &dir)) {
                Ok(files) => {
                    for f in files {
                        println!("{}", f.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => exit_for(&e),
            }
        }
    }
}
