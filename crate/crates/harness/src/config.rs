//! Experiment configuration, read from TOML.
//!
//! One flat table of problem settings plus an `agents` array of tables and an optional
//! `battery` table for the `diagnose` subcommand. Unknown keys are rejected.
//!
//! ```toml
//! env_kind = "linear_gaussian"   # or "logistic"
//! d = 10
//! K = 10                         # arms
//! T = 2000                       # horizon
//! lambda = 1.0
//! R = 1.0
//! eta_override = 1.0             # optional; default is the horizon-based formula
//! seeds = [0, 1, 2]
//!
//! [[agents]]
//! kind = "vits1"
//! K_override = 400
//! h_scale = 0.3
//!
//! [[agents]]
//! kind = "lints"
//! ```

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vits_core::bandit::EnvKind;
use vits_core::engine::{compute_eta, ScheduleOverrides};
use vits_core::model::{HyperParams, MeanInit};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Vits1,
    Vits2,
    Lints,
    Lmcts,
    Uniform,
}

impl AgentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Vits1 => "vits1",
            AgentKind::Vits2 => "vits2",
            AgentKind::Lints => "lints",
            AgentKind::Lmcts => "lmcts",
            AgentKind::Uniform => "uniform",
        }
    }
}

fn one() -> f64 {
    1.0
}

fn is_one(x: &f64) -> bool {
    *x == 1.0
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn is_zero_init(m: &MeanInit) -> bool {
    *m == MeanInit::Zero
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub kind: AgentKind,
    /// Output name; defaults to the kind. Must be unique within a config.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_override: Option<f64>,
    #[serde(
        rename = "K_override",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub k_override: Option<usize>,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub k_scale: f64,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub h_scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_lmc: Option<f64>,
    #[serde(rename = "K_lmc", default, skip_serializing_if = "Option::is_none")]
    pub k_lmc: Option<usize>,
    #[serde(default, skip_serializing_if = "is_zero_init")]
    pub mean_init_mode: MeanInit,
    #[serde(default, skip_serializing_if = "is_false")]
    pub resample_contexts: bool,
}

impl AgentConfig {
    pub fn new(kind: AgentKind) -> Self {
        Self {
            kind,
            label: None,
            h_override: None,
            k_override: None,
            k_scale: 1.0,
            h_scale: 1.0,
            h_lmc: None,
            k_lmc: None,
            mean_init_mode: MeanInit::Zero,
            resample_contexts: false,
        }
    }

    pub fn name(&self) -> &str {
        self.label.as_deref().unwrap_or(self.kind.as_str())
    }

    pub fn schedule_overrides(&self) -> ScheduleOverrides {
        ScheduleOverrides {
            h: self.h_override,
            k: self.k_override,
            k_scale: self.k_scale,
            h_scale: self.h_scale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    PsdFloor,
    Contraction,
    Stein,
    Geodesic,
    FixedPoint,
    ShermanMorrison,
}

impl Check {
    pub const ALL: [Check; 6] = [
        Check::PsdFloor,
        Check::Contraction,
        Check::Stein,
        Check::Geodesic,
        Check::FixedPoint,
        Check::ShermanMorrison,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Check::PsdFloor => "psd_floor",
            Check::Contraction => "contraction",
            Check::Stein => "stein",
            Check::Geodesic => "geodesic",
            Check::FixedPoint => "fixed_point",
            Check::ShermanMorrison => "sherman_morrison",
        }
    }
}

/// Settings of the `diagnose` battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatteryConfig {
    pub checks: Vec<Check>,
    pub dims: Vec<usize>,
    /// Bandit rounds per trajectory check.
    pub rounds: usize,
    /// Inner iterations per round in trajectory checks.
    pub inner_steps: usize,
    /// Multiplier on the default step size; values well above 1 inject a fault.
    pub h_scale: f64,
    pub stein_samples: usize,
    pub seed: u64,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        Self {
            checks: Check::ALL.to_vec(),
            dims: vec![1, 3, 5, 10],
            rounds: 100,
            inner_steps: 20,
            h_scale: 1.0,
            stein_samples: 100_000,
            seed: 0,
        }
    }
}

fn default_env() -> EnvKind {
    EnvKind::LinearGaussian
}
fn default_d() -> usize {
    10
}
fn default_arms() -> usize {
    10
}
fn default_horizon() -> usize {
    2000
}
fn default_seeds() -> Vec<u64> {
    (0..20).collect()
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_agents() -> Vec<AgentConfig> {
    [
        AgentKind::Vits1,
        AgentKind::Vits2,
        AgentKind::Lints,
        AgentKind::Lmcts,
        AgentKind::Uniform,
    ]
    .into_iter()
    .map(AgentConfig::new)
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_env")]
    pub env_kind: EnvKind,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(rename = "K", default = "default_arms")]
    pub n_arms: usize,
    #[serde(rename = "T", default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(rename = "R", default = "one")]
    pub r: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_override: Option<f64>,
    /// Standard deviation of the Gaussian reward noise (linear environment).
    #[serde(default = "one")]
    pub noise_std: f64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub diagnostics: bool,
    /// Record per-round wall time; off keeps the rounds CSVs reproducible byte for byte.
    #[serde(default)]
    pub record_timing: bool,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallelism: Option<usize>,
    #[serde(default = "default_agents")]
    pub agents: Vec<AgentConfig>,
    #[serde(default)]
    pub battery: BatteryConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        // An empty document deserialises to every default.
        toml::from_str("").expect("empty config is valid")
    }
}

fn bad(field: &str, reason: impl Into<String>) -> HarnessError {
    HarnessError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn positive(field: &str, x: Option<f64>) -> Result<()> {
    match x {
        Some(v) if !(v > 0.0 && v.is_finite()) => Err(bad(field, format!("{v} is not positive"))),
        _ => Ok(()),
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| HarnessError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| HarnessError::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(bad("T", "must be at least 1"));
        }
        if self.n_arms < 2 {
            return Err(bad("K", "must be at least 2"));
        }
        if self.d < 1 {
            return Err(bad("d", "must be at least 1"));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(bad("lambda", format!("{} not in (0, 1]", self.lambda)));
        }
        if !(self.r >= 1.0 && self.r.is_finite()) {
            return Err(bad("R", format!("{} is not >= 1", self.r)));
        }
        if let Some(eta) = self.eta_override {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(bad("eta_override", format!("{eta} not in (0, 1]")));
            }
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(bad("noise_std", format!("{} is negative", self.noise_std)));
        }
        if self.seeds.is_empty() {
            return Err(bad("seeds", "must not be empty"));
        }
        let distinct: HashSet<_> = self.seeds.iter().collect();
        if distinct.len() != self.seeds.len() {
            return Err(bad("seeds", "must be distinct"));
        }
        if self.parallelism == Some(0) {
            return Err(bad("parallelism", "must be at least 1"));
        }
        let mut names = HashSet::new();
        for a in &self.agents {
            let name = a.name();
            if name.is_empty() || name.contains(['/', '\\', ',']) {
                return Err(bad(
                    "agents.label",
                    format!("`{name}` is not a usable name"),
                ));
            }
            if !names.insert(name.to_string()) {
                return Err(bad("agents", format!("duplicate agent name `{name}`")));
            }
            positive("agents.h_override", a.h_override)?;
            positive("agents.k_scale", Some(a.k_scale))?;
            positive("agents.h_scale", Some(a.h_scale))?;
            positive("agents.h_lmc", a.h_lmc)?;
            if a.k_override == Some(0) {
                return Err(bad("agents.K_override", "must be at least 1"));
            }
            if a.k_lmc == Some(0) {
                return Err(bad("agents.K_lmc", "must be at least 1"));
            }
        }
        let b = &self.battery;
        if b.dims.contains(&0) {
            return Err(bad("battery.dims", "dimensions must be positive"));
        }
        if b.rounds == 0 || b.inner_steps == 0 {
            return Err(bad("battery", "rounds and inner_steps must be positive"));
        }
        positive("battery.h_scale", Some(b.h_scale))?;
        if b.checks.contains(&Check::Stein) && b.stein_samples < 10_000 {
            return Err(bad("battery.stein_samples", "must be at least 10000"));
        }
        Ok(())
    }

    /// The inverse temperature actually used.
    pub fn resolved_eta(&self) -> f64 {
        self.eta_override
            .unwrap_or_else(|| compute_eta(self.lambda, self.r, self.d, self.horizon))
    }

    pub fn hyper_params(&self, agent: &AgentConfig) -> Result<HyperParams> {
        Ok(HyperParams::new(self.d, self.horizon, self.lambda, self.r)?
            .with_eta(self.resolved_eta())?
            .with_mean_init(agent.mean_init_mode))
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    ExperimentConfig::from_toml_str(&text)
}
