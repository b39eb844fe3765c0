//! The `diagnose` battery: every invariant check, at each configured dimension.

use nalgebra::Cholesky;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use vits_core::agents::VitsAgent;
use vits_core::bandit::EnvKind;
use vits_core::diagnostics::{
    geodesic_step_check, stein_identity_check, DiagnosticReport, TrajectoryMonitor,
};
use vits_core::engine::{
    default_step_size, standard_normal, update_posterior, Mode, Schedule, ScheduleOverrides,
    VariationalState,
};
use vits_core::linalg::{inverse, symmetrize, Matrix, Vector};
use vits_core::model::{
    exact_posterior, HyperParams, LinearPotential, LogisticPotential, SufficientStats,
};
use vits_core::sim::{stream, ProblemSpec, Simulation};
use vits_core::VitsError;

use crate::config::{Check, ExperimentConfig};
use crate::error::Result;

/// Relative tolerance for the exact posterior being a fixed point of the noiseless step.
pub const FIXED_POINT_TOL: f64 = 1e-12;
/// Frobenius tolerance of the rank-one inverse against dense inversion.
pub const SHERMAN_MORRISON_TOL: f64 = 1e-8;
pub const SHERMAN_MORRISON_UPDATES: usize = 1000;

/// A feature vector drawn uniformly in direction with norm in `[0, 1]`.
pub fn random_feature<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vector {
    let g = standard_normal(d, rng);
    let r: f64 = rng.random();
    g.normalize() * r
}

/// Gram statistics after `n` random observations with Gaussian rewards.
pub fn random_stats<R: Rng + ?Sized>(
    d: usize,
    n: usize,
    lambda: f64,
    rng: &mut R,
) -> Result<SufficientStats> {
    let mut stats = SufficientStats::new(d, lambda)?;
    for _ in 0..n {
        let phi = random_feature(d, rng);
        let r: f64 = rng.sample(rand_distr::StandardNormal);
        stats.update(&phi, r)?;
    }
    Ok(stats)
}

/// A Gaussian state with mean of scale `scale` and a well-conditioned random factor.
pub fn random_state<R: Rng + ?Sized>(
    d: usize,
    scale: f64,
    rng: &mut R,
) -> Result<VariationalState> {
    let mu = standard_normal(d, rng) * scale;
    let noise = Matrix::from_fn(d, d, |_, _| rng.random_range(-0.2..0.2));
    let b = (Matrix::identity(d, d) + noise) * scale;
    Ok(VariationalState::from_parts(mu, b, Mode::Vits1)?)
}

fn seeded(cfg: &ExperimentConfig, check: Check, d: usize) -> ChaCha8Rng {
    let id = Check::ALL.iter().position(|c| *c == check).unwrap_or(0) as u64;
    stream(cfg.battery.seed.wrapping_add(1000 * d as u64), 10 + id)
}

/// Covariance floor and contraction along a VITS-I bandit trajectory.
pub fn trajectory_reports(
    cfg: &ExperimentConfig,
    d: usize,
) -> Result<(DiagnosticReport, DiagnosticReport)> {
    let b = &cfg.battery;
    let spec = ProblemSpec {
        kind: EnvKind::LinearGaussian,
        d,
        n_arms: cfg.n_arms,
        noise_std: cfg.noise_std,
        resample_contexts: false,
    };
    let mut sim = Simulation::new(&spec, b.seed)?;
    let params =
        HyperParams::new(d, cfg.horizon, cfg.lambda, cfg.r)?.with_eta(cfg.resolved_eta())?;
    let overrides = ScheduleOverrides {
        k: Some(b.inner_steps),
        h_scale: b.h_scale,
        ..Default::default()
    };
    let agent = VitsAgent::linear(params, Mode::Vits1, overrides, sim.agent_rng())?;
    let mut mon = TrajectoryMonitor::new(agent, overrides, false)?;
    // A numerically blown-up trajectory is itself a failed check, not an abort.
    let outcome = sim.run(&mut mon, b.rounds);
    let (mut psd, mut contraction) = (mon.psd_report(), mon.contraction_report());
    if let Err(e) = outcome {
        log::warn!("trajectory at d={d} stopped early: {e}");
        for r in [&mut psd, &mut contraction] {
            r.worst_violation = f64::INFINITY;
            r.pass = false;
        }
    }
    psd.name = format!("psd_floor_d{d}");
    contraction.name = format!("contraction_d{d}");
    Ok((psd, contraction))
}

pub fn stein_reports(cfg: &ExperimentConfig, d: usize) -> Result<Vec<DiagnosticReport>> {
    let mut rng = seeded(cfg, Check::Stein, d);
    let n = cfg.battery.stein_samples;
    let eta = 0.5;

    let stats = random_stats(d, 5, cfg.lambda, &mut rng)?;
    let linear = LinearPotential::new(stats, eta);
    let state = random_state(d, 0.7, &mut rng)?;
    let mut lin = stein_identity_check(&state, &linear, n, &mut rng)?;
    lin.name = format!("stein_linear_d{d}");

    let history: Vec<(Vector, f64)> = (0..2)
        .map(|i| (random_feature(d, &mut rng), (i % 2) as f64))
        .collect();
    let logistic = LogisticPotential::from_history(d, eta, cfg.lambda, &history)?;
    let state = random_state(d, 0.7, &mut rng)?;
    let mut log = stein_identity_check(&state, &logistic, n, &mut rng)?;
    log.name = format!("stein_logistic_d{d}");
    Ok(vec![lin, log])
}

pub fn geodesic_report(cfg: &ExperimentConfig, d: usize) -> Result<DiagnosticReport> {
    let mut rng = seeded(cfg, Check::Geodesic, d);
    let mut report: Option<DiagnosticReport> = None;
    for _ in 0..20 {
        let eta: f64 = rng.random_range(0.1..1.0);
        let stats = random_stats(d, 10, cfg.lambda, &mut rng)?;
        let h = default_step_size(stats.lambda_min(), stats.lambda_max(), eta);
        let potential = LinearPotential::new(stats, eta);
        let state = random_state(d, 1.0, &mut rng)?;
        let r = geodesic_step_check(state.mu(), state.b(), &potential, h)?;
        match &mut report {
            Some(acc) => acc.merge(&r),
            None => report = Some(r),
        }
    }
    let mut report = report.expect("at least one instance");
    report.name = format!("geodesic_d{d}");
    Ok(report)
}

/// Relative distance moved by one noiseless step started at the exact posterior.
pub fn fixed_point_gap(stats: &SufficientStats, eta: f64) -> Result<f64> {
    let post = exact_posterior(stats, eta);
    let chol = Cholesky::new(post.sigma_hat.clone())
        .ok_or(VitsError::NotPositiveDefinite("posterior covariance"))?;
    let mut state =
        VariationalState::from_parts(post.mu_hat.clone(), chol.l(), Mode::ExactExpectation)?;
    let potential = LinearPotential::new(stats.clone(), eta);
    let h = default_step_size(stats.lambda_min(), stats.lambda_max(), eta);
    // Noiseless mode never draws; any RNG will do.
    let mut rng = stream(0, 0);
    update_posterior(&mut state, &potential, &Schedule::new(h, 1)?, &mut rng)?;
    let dmu = (state.mu() - &post.mu_hat).norm() / post.mu_hat.norm().max(1.0);
    let dsigma = (symmetrize(&state.covariance()) - &post.sigma_hat).norm() / post.sigma_hat.norm();
    Ok(dmu.max(dsigma))
}

pub fn fixed_point_report(cfg: &ExperimentConfig, d: usize) -> Result<DiagnosticReport> {
    let mut rng = seeded(cfg, Check::FixedPoint, d);
    let mut gaps = Vec::new();
    for _ in 0..10 {
        let eta: f64 = rng.random_range(0.1..1.0);
        let stats = random_stats(d, 20, cfg.lambda, &mut rng)?;
        gaps.push(fixed_point_gap(&stats, eta)?);
    }
    Ok(DiagnosticReport::from_violations(
        format!("fixed_point_d{d}"),
        FIXED_POINT_TOL,
        gaps,
        false,
    ))
}

/// Frobenius gap between the incrementally updated inverse and a dense inverse,
/// after each of `updates` random rank-one updates.
pub fn sherman_morrison_gaps<R: Rng + ?Sized>(
    d: usize,
    updates: usize,
    lambda: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut stats = SufficientStats::new(d, lambda)?;
    let mut gaps = Vec::with_capacity(updates);
    for _ in 0..updates {
        let phi = random_feature(d, rng);
        stats.update(&phi, 0.0)?;
        gaps.push((stats.v_inv() - inverse(stats.v(), "V")?).norm());
    }
    Ok(gaps)
}

pub fn sherman_morrison_report(cfg: &ExperimentConfig, d: usize) -> Result<DiagnosticReport> {
    let mut rng = seeded(cfg, Check::ShermanMorrison, d);
    let gaps = sherman_morrison_gaps(d, SHERMAN_MORRISON_UPDATES, cfg.lambda, &mut rng)?;
    Ok(DiagnosticReport::from_violations(
        format!("sherman_morrison_d{d}"),
        SHERMAN_MORRISON_TOL,
        gaps,
        false,
    ))
}

/// Runs the selected checks at every configured dimension, in a fixed order.
pub fn run_battery(cfg: &ExperimentConfig) -> Result<Vec<DiagnosticReport>> {
    let b = &cfg.battery;
    let wants = |c: Check| b.checks.contains(&c);
    let mut reports = Vec::new();
    for &d in &b.dims {
        if wants(Check::PsdFloor) || wants(Check::Contraction) {
            let (psd, contraction) = trajectory_reports(cfg, d)?;
            if wants(Check::PsdFloor) {
                reports.push(psd);
            }
            if wants(Check::Contraction) {
                reports.push(contraction);
            }
        }
        if wants(Check::Stein) {
            reports.extend(stein_reports(cfg, d)?);
        }
        if wants(Check::Geodesic) {
            reports.push(geodesic_report(cfg, d)?);
        }
        if wants(Check::FixedPoint) {
            reports.push(fixed_point_report(cfg, d)?);
        }
        if wants(Check::ShermanMorrison) {
            reports.push(sherman_morrison_report(cfg, d)?);
        }
    }
    for r in &reports {
        log::info!(
            "{}: worst {:.3e} (tol {:.1e}) {}",
            r.name,
            r.worst_violation,
            r.tolerance,
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    Ok(reports)
}
