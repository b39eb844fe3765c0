//! Runs the (agent × seed) grid and writes its outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use vits_core::agents::{Agent, LinTsAgent, LmcTsAgent, UniformAgent, VitsAgent, LMC_STEPS};
use vits_core::bandit::EnvKind;
use vits_core::diagnostics::{DiagnosticReport, TrajectoryMonitor};
use vits_core::engine::Mode;
use vits_core::model::{LinearPotential, LogisticPotential, Potential, SufficientStats};
use vits_core::sim::{ProblemSpec, RoundRecord, Simulation};

use crate::aggregate::{
    aggregate, rounds_file_name, write_rounds_csv, write_summary_csv, write_text, SummaryRow,
};
use crate::config::{AgentConfig, AgentKind, ExperimentConfig};
use crate::error::{csv_err, io_err, HarnessError, Result};

/// Command-line overrides of config values.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub parallelism: Option<usize>,
    pub seed_offset: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellFailure {
    pub agent: String,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellDiagnostic {
    pub agent: String,
    pub seed: u64,
    pub report: DiagnosticReport,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub summary: Vec<SummaryRow>,
    pub failures: Vec<CellFailure>,
    pub diagnostics: Vec<CellDiagnostic>,
}

impl RunOutcome {
    /// True iff every cell completed and every diagnostic passed.
    pub fn success(&self) -> bool {
        self.failures.is_empty() && self.diagnostics.iter().all(|d| d.report.pass)
    }
}

#[derive(Serialize)]
struct RunMeta<'a> {
    version: &'static str,
    resolved_eta: f64,
    wall_time_s: f64,
    seed_offset: u64,
    parallelism: usize,
    cells: usize,
    notes: Vec<String>,
    failures: &'a [CellFailure],
    config: &'a ExperimentConfig,
}

fn build_potential(cfg: &ExperimentConfig, eta: f64) -> Result<Box<dyn Potential>> {
    Ok(match cfg.env_kind {
        EnvKind::LinearGaussian => Box::new(LinearPotential::new(
            SufficientStats::new(cfg.d, cfg.lambda)?,
            eta,
        )),
        EnvKind::Logistic => Box::new(LogisticPotential::new(cfg.d, eta, cfg.lambda)?),
    })
}

fn vits_agent(
    cfg: &ExperimentConfig,
    a: &AgentConfig,
    mode: Mode,
    sim: &mut Simulation,
) -> Result<VitsAgent> {
    let params = cfg.hyper_params(a)?;
    let potential = build_potential(cfg, params.eta)?;
    Ok(VitsAgent::new(
        params,
        mode,
        potential,
        a.schedule_overrides(),
        sim.agent_rng(),
    )?)
}

/// Builds the agent for one cell, drawing its initial randomness from the cell's agent stream.
pub fn build_agent(
    cfg: &ExperimentConfig,
    a: &AgentConfig,
    sim: &mut Simulation,
) -> Result<Box<dyn Agent>> {
    let params = cfg.hyper_params(a)?;
    Ok(match a.kind {
        AgentKind::Vits1 => Box::new(vits_agent(cfg, a, Mode::Vits1, sim)?),
        AgentKind::Vits2 => Box::new(vits_agent(cfg, a, Mode::Vits2, sim)?),
        AgentKind::Lints => Box::new(LinTsAgent::new(&params)?),
        AgentKind::Lmcts => {
            let potential = build_potential(cfg, params.eta)?;
            let steps = a.k_lmc.unwrap_or(LMC_STEPS);
            Box::new(LmcTsAgent::new(
                &params,
                potential,
                a.h_lmc,
                steps,
                sim.agent_rng(),
            )?)
        }
        AgentKind::Uniform => Box::new(UniformAgent),
    })
}

fn monitorable(cfg: &ExperimentConfig, a: &AgentConfig) -> bool {
    a.kind == AgentKind::Vits1 && cfg.env_kind == EnvKind::LinearGaussian
}

pub fn problem_spec(cfg: &ExperimentConfig, a: &AgentConfig) -> ProblemSpec {
    ProblemSpec {
        kind: cfg.env_kind,
        d: cfg.d,
        n_arms: cfg.n_arms,
        noise_std: cfg.noise_std,
        resample_contexts: a.resample_contexts,
    }
}

struct CellResult {
    records: Vec<RoundRecord>,
    diagnostics: Vec<DiagnosticReport>,
}

/// Runs a single (agent, seed) cell in memory.
pub fn run_cell(
    cfg: &ExperimentConfig,
    a: &AgentConfig,
    seed: u64,
) -> Result<(Vec<RoundRecord>, Vec<DiagnosticReport>)> {
    let r = run_cell_inner(cfg, a, seed)?;
    Ok((r.records, r.diagnostics))
}

fn run_cell_inner(cfg: &ExperimentConfig, a: &AgentConfig, seed: u64) -> Result<CellResult> {
    let mut sim = Simulation::new(&problem_spec(cfg, a), seed)?.record_timing(cfg.record_timing);
    let monitor = cfg.diagnostics && monitorable(cfg, a);
    if monitor {
        let agent = vits_agent(cfg, a, Mode::Vits1, &mut sim)?;
        let mut mon = TrajectoryMonitor::new(agent, a.schedule_overrides(), false)?;
        let records = sim.run(&mut mon, cfg.horizon)?;
        return Ok(CellResult {
            records,
            diagnostics: vec![mon.psd_report(), mon.contraction_report()],
        });
    }
    let mut agent = build_agent(cfg, a, &mut sim)?;
    let records = sim.run(agent.as_mut(), cfg.horizon)?;
    Ok(CellResult {
        records,
        diagnostics: Vec::new(),
    })
}

fn notes(cfg: &ExperimentConfig) -> Vec<String> {
    let mut notes = Vec::new();
    if cfg.eta_override.is_none() {
        notes.push("eta from the horizon-based default formula".into());
    }
    for a in &cfg.agents {
        let name = a.name();
        match a.kind {
            AgentKind::Vits1 | AgentKind::Vits2 => {
                if a.h_override.is_none() {
                    notes.push(format!(
                        "{name}: step size from the condition-number rule times h_scale={}",
                        a.h_scale
                    ));
                }
                if a.k_override.is_none() {
                    notes.push(format!(
                        "{name}: inner iterations from the default formula times k_scale={}",
                        a.k_scale
                    ));
                }
            }
            AgentKind::Lmcts => {
                if a.h_lmc.is_none() {
                    notes.push(format!("{name}: Langevin step 0.1 / (eta lambda_max(V_t))"));
                }
                if a.k_lmc.is_none() {
                    notes.push(format!("{name}: {LMC_STEPS} Langevin steps per round"));
                }
            }
            AgentKind::Lints | AgentKind::Uniform => {}
        }
    }
    if cfg.diagnostics {
        notes.push(
            "diagnostics: covariance floor and contraction monitored on vits1 cells of linear problems"
                .into(),
        );
    }
    if !cfg.record_timing {
        notes.push("elapsed_ns is 0: timing disabled (record_timing = false)".into());
    }
    notes
}

pub fn write_diagnostics_csv(path: &Path, rows: &[CellDiagnostic]) -> Result<()> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(std::io::BufWriter::new(file));
    w.write_record([
        "agent",
        "seed",
        "name",
        "rounds_checked",
        "worst_violation",
        "tolerance",
        "pass",
    ])
    .map_err(csv_err(path))?;
    for d in rows {
        let r = &d.report;
        w.write_record([
            d.agent.clone(),
            d.seed.to_string(),
            r.name.clone(),
            r.rounds_checked.to_string(),
            crate::aggregate::fmt_real(r.worst_violation),
            crate::aggregate::fmt_real(r.tolerance),
            r.pass.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub(crate) fn thread_pool(parallelism: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.unwrap_or(0))
        .build()
        .map_err(|e| HarnessError::Other(format!("thread pool: {e}")))
}

/// Runs the whole grid. Cell failures are collected, not propagated; only I/O
/// problems and invalid configs abort the run.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let out_dir = opts.out_dir.clone().unwrap_or_else(|| cfg.out_dir.clone());
    fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;
    let parallelism = opts.parallelism.or(cfg.parallelism);
    let pool = thread_pool(parallelism)?;

    let cells: Vec<(&AgentConfig, u64)> = cfg
        .agents
        .iter()
        .flat_map(|a| cfg.seeds.iter().map(move |s| (a, s + opts.seed_offset)))
        .collect();

    let results: Vec<(String, u64, Result<CellResult>)> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(a, seed)| {
                let name = a.name().to_string();
                log::info!("cell {name}/{seed}: start");
                let res = run_cell_inner(cfg, a, seed).and_then(|r| {
                    write_rounds_csv(&out_dir.join(rounds_file_name(&name, seed)), &r.records)?;
                    Ok(r)
                });
                match &res {
                    Ok(r) => log::info!(
                        "cell {name}/{seed}: cumulative regret {:.3}",
                        r.records.last().map_or(0.0, |x| x.cum_regret)
                    ),
                    Err(e) => log::warn!("cell {name}/{seed} failed: {e}"),
                }
                (name, seed, res)
            })
            .collect()
    });

    let mut series = Vec::new();
    let mut failures = Vec::new();
    let mut diagnostics = Vec::new();
    for (agent, seed, res) in results {
        match res {
            Ok(r) => {
                diagnostics.extend(r.diagnostics.into_iter().map(|report| CellDiagnostic {
                    agent: agent.clone(),
                    seed,
                    report,
                }));
                series.push((
                    agent,
                    seed,
                    r.records.iter().map(|x| x.cum_regret).collect(),
                ));
            }
            Err(e) => failures.push(CellFailure {
                agent,
                seed,
                error: e.to_string(),
            }),
        }
    }

    // Failed cells leave an agent with fewer seeds; summarise each agent on its own.
    let mut summary = Vec::new();
    for a in &cfg.agents {
        let own: Vec<_> = series
            .iter()
            .filter(|(n, _, _)| n == a.name())
            .cloned()
            .collect();
        if !own.is_empty() {
            summary.extend(aggregate(&own)?);
        }
    }
    write_summary_csv(&out_dir.join("summary.csv"), &summary)?;
    if cfg.diagnostics {
        write_diagnostics_csv(&out_dir.join("diagnostics.csv"), &diagnostics)?;
    }

    let meta = RunMeta {
        version: env!("CARGO_PKG_VERSION"),
        resolved_eta: cfg.resolved_eta(),
        wall_time_s: start.elapsed().as_secs_f64(),
        seed_offset: opts.seed_offset,
        parallelism: pool.current_num_threads(),
        cells: cells.len(),
        notes: notes(cfg),
        failures: &failures,
        config: cfg,
    };
    let text = toml::to_string(&meta).map_err(|e| HarnessError::Other(e.to_string()))?;
    write_text(&out_dir.join("run_meta.toml"), &text)?;

    Ok(RunOutcome {
        out_dir,
        summary,
        failures,
        diagnostics,
    })
}
