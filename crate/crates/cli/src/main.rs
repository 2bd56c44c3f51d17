//! `fixflex` — scenario evaluator for integrated fixed-route + microtransit
//! service designs.
//!
//! Exit codes: 0 all scenarios ran and converged; 2 at least one ran but did
//! not converge (outputs are still written); 1 invalid configuration or
//! inputs. Set `FIXFLEX_LOG` (e.g. `info`, `debug`) for progress logging.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use fixflex_cli::{run_batch, run_scenario, validate_inputs, write_summary, InputSet};
use fixflex_core::{Params, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "fixflex",
    version,
    about = "Evaluate fixed-route + microtransit service designs to mode-choice equilibrium"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario from a TOML config and write its output bundle.
    Run {
        /// Scenario TOML file.
        #[arg(long)]
        config: PathBuf,
        /// Directory holding street.csv, frt_lines.csv, demand.csv[, zones.csv].
        #[arg(long)]
        inputs: PathBuf,
        /// Output root; files land under <out>/<scenario_id>/.
        #[arg(long)]
        out: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run every scenario in a matrix CSV and write summary.csv.
    Batch {
        /// Matrix CSV: scenario_id,transit_mode,headway_min,virtual_stop_pct,
        /// fleet_size,operating_periods[,partition].
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        inputs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Master seed shared by every row (common random numbers).
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Worker threads; defaults to the machine's parallelism.
        #[arg(short, long)]
        jobs: Option<usize>,
    },
    /// Parse the input directory and report what it contains.
    Validate {
        #[arg(long)]
        inputs: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FIXFLEX_LOG", "warn"))
        .format_timestamp(None)
        .init();
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Run {
            config,
            inputs,
            out,
            seed,
        } => {
            let mut cfg = ScenarioConfig::from_toml_path(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            let inputs = InputSet::discover(&inputs)?;
            let outcome = run_scenario(&cfg, &inputs, &out)?;
            let r = &outcome.report;
            println!(
                "{}: {} in {} iterations (gap {}), subsidy/user {} -> {}",
                r.scenario_id,
                if r.converged { "converged" } else { "did not converge" },
                r.iterations,
                r.final_gap.map_or_else(|| "n/a".into(), |g| format!("{g:.4}")),
                r.costs
                    .subsidy_per_user_usd
                    .map_or_else(|| "n/a".into(), |s| format!("${s:.2}")),
                outcome.out_dir.display(),
            );
            Ok(if r.converged { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Cmd::Batch {
            matrix,
            inputs,
            out,
            seed,
            jobs,
        } => {
            let inputs = InputSet::discover(&inputs)?;
            let rows = match jobs {
                Some(j) => rayon::ThreadPoolBuilder::new()
                    .num_threads(j)
                    .build()
                    .context("building worker pool")?
                    .install(|| run_batch(&matrix, &inputs, &out, seed, &Params::default())),
                None => run_batch(&matrix, &inputs, &out, seed, &Params::default()),
            }?;
            let summary = out.join("summary.csv");
            write_summary(&summary, &rows)?;

            let mut failed = 0u32;
            let mut stuck = 0u32;
            for row in &rows {
                match &row.outcome {
                    Ok(m) if m.converged => {}
                    Ok(_) => stuck += 1,
                    Err(e) => {
                        failed += 1;
                        eprintln!("{}: {e}", row.scenario_id);
                    }
                }
            }
            println!(
                "{} scenarios: {} converged, {stuck} unconverged, {failed} failed -> {}",
                rows.len(),
                rows.len() as u32 - stuck - failed,
                summary.display()
            );
            Ok(if failed > 0 || stuck > 0 {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
        Cmd::Validate { inputs } => {
            let report = validate_inputs(&inputs)?;
            println!(
                "ok: {} nodes, {} street links, {} lines, {} travelers, {}",
                report.nodes,
                report.street_links,
                report.lines,
                report.travelers,
                report
                    .zones
                    .map_or_else(|| "no zone map".into(), |z| format!("{z} zones")),
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}
