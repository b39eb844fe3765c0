use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use vits_harness::battery::run_battery;
use vits_harness::plot::plot_summary;
use vits_harness::runner::{write_diagnostics_csv, CellDiagnostic};
use vits_harness::{load_config, run_experiment, RunOptions};

#[derive(Parser)]
#[command(
    name = "vits",
    version,
    about = "Variational Thompson sampling experiments"
)]
struct Cli {
    /// Output directory (overrides `out_dir` in the config).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads for the grid (default: logical CPUs).
    #[arg(long, global = true)]
    parallelism: Option<usize>,
    /// Added to every configured seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed_offset: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the (agent × seed) grid of a config.
    Run { config: PathBuf },
    /// Run the diagnostic battery described by a config's `[battery]` table.
    Diagnose { config: PathBuf },
    /// Render a summary CSV as an SVG chart.
    Plot { summary: PathBuf, out: PathBuf },
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Run { config } => {
            let cfg =
                load_config(&config).with_context(|| format!("loading {}", config.display()))?;
            if cli.parallelism == Some(0) {
                anyhow::bail!("--parallelism must be at least 1");
            }
            let opts = RunOptions {
                out_dir: cli.out_dir,
                parallelism: cli.parallelism,
                seed_offset: cli.seed_offset,
            };
            let outcome = run_experiment(&cfg, &opts)?;
            for f in &outcome.failures {
                log::error!("cell {}/{} failed: {}", f.agent, f.seed, f.error);
            }
            for d in outcome.diagnostics.iter().filter(|d| !d.report.pass) {
                log::error!(
                    "diagnostic {} failed on {}/{}: worst violation {:e}",
                    d.report.name,
                    d.agent,
                    d.seed,
                    d.report.worst_violation
                );
            }
            println!("wrote {}", outcome.out_dir.display());
            Ok(outcome.success())
        }
        Command::Diagnose { config } => {
            let cfg =
                load_config(&config).with_context(|| format!("loading {}", config.display()))?;
            let out_dir = cli.out_dir.unwrap_or_else(|| cfg.out_dir.clone());
            std::fs::create_dir_all(&out_dir)
                .with_context(|| format!("creating {}", out_dir.display()))?;
            let reports = run_battery(&cfg)?;
            let rows: Vec<CellDiagnostic> = reports
                .into_iter()
                .map(|report| CellDiagnostic {
                    agent: "battery".into(),
                    seed: cfg.battery.seed,
                    report,
                })
                .collect();
            let path = out_dir.join("diagnostics.csv");
            write_diagnostics_csv(&path, &rows)?;
            for r in &rows {
                let status = if r.report.pass { "pass" } else { "FAIL" };
                println!(
                    "{status} {} worst={:e} tol={:e}",
                    r.report.name, r.report.worst_violation, r.report.tolerance
                );
            }
            println!("wrote {}", path.display());
            Ok(rows.iter().all(|r| r.report.pass))
        }
        Command::Plot { summary, out } => {
            plot_summary(&summary, &out)?;
            println!("wrote {}", out.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
