//! Numerical checks of the invariants the variational recursion is supposed to keep.
//!
//! Every check reduces to a signed violation (`<= tolerance` passes) collected in a
//! [`DiagnosticReport`]. The functions here are pure; randomness only enters through
//! an explicit RNG argument.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::agents::{Agent, VitsAgent};
use crate::bandit::ArmSet;
use crate::engine::{
    compute_schedule_with, exact_inverse_transpose, sqrt_step, standard_normal, Mode,
    ScheduleOverrides, VariationalState,
};
use crate::error::{invalid, Result, VitsError};
use crate::linalg::{
    asymmetry, check_dim, check_square, sqrtm_psd, sym_extreme_eigenvalues, sym_min_eigenvalue,
    symmetrize, Matrix, Vector,
};
use crate::model::{LinearPotential, Potential, SufficientStats};

/// Outcome of one diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub name: String,
    pub rounds_checked: usize,
    /// Largest signed violation; the check passes iff this is `<= tolerance`.
    pub worst_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<f64>,
}

impl DiagnosticReport {
    pub fn from_violations(
        name: impl Into<String>,
        tolerance: f64,
        violations: impl IntoIterator<Item = f64>,
        keep_details: bool,
    ) -> Self {
        let mut worst = f64::NEG_INFINITY;
        let mut n = 0;
        let mut details = Vec::new();
        for v in violations {
            // NaN counts as a failure.
            worst = if v.is_nan() {
                f64::INFINITY
            } else {
                worst.max(v)
            };
            n += 1;
            if keep_details {
                details.push(v);
            }
        }
        Self {
            name: name.into(),
            rounds_checked: n,
            worst_violation: worst,
            tolerance,
            pass: worst <= tolerance,
            details,
        }
    }

    /// Folds another report's checks into this one.
    pub fn merge(&mut self, other: &DiagnosticReport) {
        self.rounds_checked += other.rounds_checked;
        self.worst_violation = self.worst_violation.max(other.worst_violation);
        self.pass = self.worst_violation <= self.tolerance;
        self.details.extend_from_slice(&other.details);
    }
}

fn check_symmetric(m: &Matrix) -> Result<()> {
    let scale = m.iter().fold(1.0_f64, |acc, x| acc.max(x.abs()));
    let asym = asymmetry(m);
    if asym > 1e-8 * scale {
        return Err(VitsError::Asymmetric(asym));
    }
    Ok(())
}

/// `lambda_min(Sigma - V^{-1} / (2 eta))`; nonnegative means the floor holds.
pub fn psd_floor_margin(sigma: &Matrix, v: &Matrix, eta: f64) -> Result<f64> {
    check_square(v, sigma.nrows())?;
    check_symmetric(sigma)?;
    check_symmetric(v)?;
    let v_inv = symmetrize(v)
        .cholesky()
        .ok_or(VitsError::NotPositiveDefinite("V"))?
        .inverse();
    Ok(psd_floor_margin_with_inverse(sigma, &v_inv, eta))
}

fn psd_floor_margin_with_inverse(sigma: &Matrix, v_inv: &Matrix, eta: f64) -> f64 {
    sym_min_eigenvalue(&symmetrize(&(sigma - v_inv / (2.0 * eta))))
}

/// `next - (1 - 1.5 eta h lambda_min) prev`; nonpositive means the contraction holds.
pub fn contraction_ratio(prev_norm: f64, next_norm: f64, eta: f64, h: f64, lambda_min: f64) -> f64 {
    next_norm - (1.0 - 1.5 * eta * h * lambda_min) * prev_norm
}

/// Spectral norm of a symmetric matrix.
fn sym_spectral_norm(m: &Matrix) -> f64 {
    let (lo, hi) = sym_extreme_eigenvalues(&symmetrize(m));
    lo.abs().max(hi.abs())
}

/// `KL(N(mu0, s0) || N(mu1, s1))`.
pub fn kl_gaussians(mu0: &Vector, s0: &Matrix, mu1: &Vector, s1: &Matrix) -> Result<f64> {
    let d = mu0.len();
    check_dim(d, mu1.len())?;
    check_square(s0, d)?;
    check_square(s1, d)?;
    let c0 = symmetrize(s0)
        .cholesky()
        .ok_or(VitsError::NotPositiveDefinite("S0"))?;
    let c1 = symmetrize(s1)
        .cholesky()
        .ok_or(VitsError::NotPositiveDefinite("S1"))?;
    let logdet = |l: &Matrix| 2.0 * l.diagonal().iter().map(|x| x.ln()).sum::<f64>();
    let trace = c1.solve(s0).trace();
    let diff = mu1 - mu0;
    let maha = diff.dot(&c1.solve(&diff));
    Ok(0.5 * (trace + maha - d as f64 + logdet(&c1.l()) - logdet(&c0.l())))
}

/// Squared 2-Wasserstein distance between two Gaussians,
/// `|m0 - m1|^2 + tr(S0 + S1 - 2 (S0^{1/2} S1 S0^{1/2})^{1/2})`.
pub fn w2_gaussians(mu0: &Vector, s0: &Matrix, mu1: &Vector, s1: &Matrix) -> Result<f64> {
    let d = mu0.len();
    check_dim(d, mu1.len())?;
    check_square(s0, d)?;
    check_square(s1, d)?;
    let r0 = sqrtm_psd(s0);
    let cross = sqrtm_psd(&symmetrize(&(&r0 * s1 * &r0)));
    let w2 = (mu0 - mu1).norm_squared() + (s0 + s1 - cross * 2.0).trace();
    Ok(w2.max(0.0))
}

/// Bures–Wasserstein exponential map at `N(mu_p, sigma_p)`:
/// `N(mu_p + mu_v, (sigma_v + I) sigma_p (sigma_v + I))`.
pub fn exp_map(
    mu_p: &Vector,
    sigma_p: &Matrix,
    mu_v: &Vector,
    sigma_v: &Matrix,
) -> (Vector, Matrix) {
    let d = mu_p.len();
    let m = sigma_v + Matrix::identity(d, d);
    (mu_p + mu_v, &m * sigma_p * &m)
}

/// Compares one noiseless engine step (mean step plus square-root step with the exact
/// inverse) against the exponential map applied to `-h` times the Wasserstein gradient
/// `(E[grad U], E[hess U] - Sigma^{-1})`. Violation is the largest entrywise gap.
pub fn geodesic_step_check(
    mu: &Vector,
    b: &Matrix,
    potential: &LinearPotential,
    h: f64,
) -> Result<DiagnosticReport> {
    let sigma = b * b.transpose();
    let (grad, hess) = potential
        .gaussian_expectations(mu, &sigma)
        .ok_or(VitsError::Unsupported("closed-form expectations"))??;
    let b_inv_t = exact_inverse_transpose(b)?;
    let mu_engine = mu - &grad * h;
    let b_engine = sqrt_step(b, &hess, &b_inv_t, h);
    let sigma_engine = &b_engine * b_engine.transpose();

    let precision = b_inv_t.clone() * b_inv_t.transpose();
    let mu_v = -&grad * h;
    let sigma_v = -(hess - precision) * h;
    let (mu_geo, sigma_geo) = exp_map(mu, &sigma, &mu_v, &sigma_v);

    let gaps = (&mu_engine - &mu_geo)
        .iter()
        .chain((&sigma_engine - &sigma_geo).iter())
        .map(|x| x.abs())
        .collect::<Vec<_>>();
    Ok(DiagnosticReport::from_violations(
        "geodesic_step",
        1e-10,
        gaps,
        false,
    ))
}

/// Monte-Carlo comparison of the Hessian-free estimator `P (theta - mu) grad U(theta)^T`
/// (with `P` the state's precision approximation) against `hess U(theta)` under
/// `theta ~ N(mu, B B^T)`. The violation is the largest entrywise z-score minus 5.
pub fn stein_identity_check<R: Rng + ?Sized>(
    state: &VariationalState,
    potential: &dyn Potential,
    n_samples: usize,
    rng: &mut R,
) -> Result<DiagnosticReport> {
    if n_samples < 10_000 {
        return Err(invalid(
            "n_samples",
            "the Stein check needs at least 10^4 samples",
        ));
    }
    let d = state.dim();
    check_dim(d, potential.dim())?;
    let precision = state.precision()?;
    let mut mean = Matrix::zeros(d, d);
    let mut m2 = Matrix::zeros(d, d);
    for i in 0..n_samples {
        let eps = standard_normal(d, rng);
        let theta = state.sample_with(&eps);
        let grad = potential.grad(&theta)?;
        let a = &precision * (&theta - state.mu()) * grad.transpose();
        let diff = a - potential.hessian(&theta)?;
        // Welford update per entry.
        let n = (i + 1) as f64;
        let delta = &diff - &mean;
        mean += &delta / n;
        let delta2 = &diff - &mean;
        m2 += delta.component_mul(&delta2);
    }
    let n = n_samples as f64;
    let z_scores = mean.iter().zip(m2.iter()).map(|(m, s)| {
        let se = (s / (n - 1.0)).sqrt() / n.sqrt();
        if se > 0.0 {
            m.abs() / se
        } else if *m == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    });
    let mut report =
        DiagnosticReport::from_violations("stein_identity", 0.0, z_scores.map(|z| z - 5.0), false);
    report.rounds_checked = n_samples;
    Ok(report)
}

/// Wraps a [`VitsAgent`] on a linear potential and checks, at every inner iteration,
/// the covariance floor `Sigma >= V^{-1} / (2 eta)` and the contraction
/// `|Lambda_{k+1}| <= (1 - 1.5 eta h lambda_min) |Lambda_k|` with
/// `Lambda = Sigma - (eta V)^{-1}`.
pub struct TrajectoryMonitor {
    agent: VitsAgent,
    mirror: SufficientStats,
    overrides: ScheduleOverrides,
    psd: Vec<f64>,
    contraction: Vec<f64>,
    keep_details: bool,
}

impl TrajectoryMonitor {
    pub fn new(agent: VitsAgent, overrides: ScheduleOverrides, keep_details: bool) -> Result<Self> {
        if agent.state().mode() == Mode::Vits2 {
            return Err(VitsError::Unsupported(
                "covariance monitoring needs the exact square-root recursion",
            ));
        }
        let p = agent.params();
        let mirror = SufficientStats::new(p.d, p.lambda)?;
        Ok(Self {
            agent,
            mirror,
            overrides,
            psd: Vec::new(),
            contraction: Vec::new(),
            keep_details,
        })
    }

    pub fn agent(&self) -> &VitsAgent {
        &self.agent
    }

    pub fn psd_report(&self) -> DiagnosticReport {
        let tol = 1e-10;
        let viol = self.psd.iter().map(|m| -m);
        DiagnosticReport::from_violations("psd_floor", tol, viol, self.keep_details)
    }

    pub fn contraction_report(&self) -> DiagnosticReport {
        DiagnosticReport::from_violations(
            "contraction",
            1e-10,
            self.contraction.iter().copied(),
            self.keep_details,
        )
    }
}

impl Agent for TrajectoryMonitor {
    fn name(&self) -> &'static str {
        self.agent.name()
    }

    fn select(&mut self, arms: &ArmSet, rng: &mut dyn RngCore) -> Result<usize> {
        self.agent.select(arms, rng)
    }

    fn observe(&mut self, phi: &Vector, reward: f64, rng: &mut dyn RngCore) -> Result<()> {
        self.mirror.update(phi, reward)?;
        let params = self.agent.params().clone();
        let eta = params.eta;
        let schedule = compute_schedule_with(&self.mirror, &params, &self.overrides)?;
        let target = self.mirror.v_inv() / eta;
        let v_inv = self.mirror.v_inv().clone();
        let factor_h = schedule.h;
        let lambda_min = self.mirror.lambda_min();

        let mut prev = sym_spectral_norm(&(self.agent.state().covariance() - &target));
        let psd = &mut self.psd;
        let contraction = &mut self.contraction;
        self.agent.observe_with(phi, reward, rng, &mut |_, state| {
            let sigma = state.covariance();
            psd.push(psd_floor_margin_with_inverse(&sigma, &v_inv, eta));
            let next = sym_spectral_norm(&(sigma - &target));
            contraction.push(contraction_ratio(prev, next, eta, factor_h, lambda_min));
            prev = next;
        })?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(v: &[f64]) -> Matrix {
        Matrix::from_diagonal(&Vector::from_vec(v.to_vec()))
    }

    fn random_spd(d: usize, rng: &mut ChaCha8Rng) -> Matrix {
        let a = Matrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        &a * a.transpose() + Matrix::identity(d, d) * 0.1
    }

    #[test]
    fn psd_margin_examples() {
        let v = Matrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]);
        let eta = 0.5;
        let v_inv = v.clone().try_inverse().unwrap();
        let post = &v_inv / eta;
        let m = psd_floor_margin(&post, &v, eta).unwrap();
        let expected = sym_min_eigenvalue(&(&v_inv / (2.0 * eta)));
        assert!((m - expected).abs() < 1e-12 && m > 0.0);
        let boundary = &v_inv / (2.0 * eta);
        assert!(psd_floor_margin(&boundary, &v, eta).unwrap().abs() < 1e-12);
        let asym = Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(
            psd_floor_margin(&asym, &v, eta),
            Err(VitsError::Asymmetric(_))
        ));
    }

    #[test]
    fn contraction_examples() {
        assert_eq!(contraction_ratio(0.0, 0.3, 1.0, 0.1, 1.0), 0.3);
        // d = 1, V = 1, eta = 1, h = 1/6, Sigma = 2: Lambda = 1.
        let h = 1.0 / 6.0;
        let a = 1.0 - h;
        let sigma = 2.0;
        let next = a * sigma * a + 2.0 * h * a + h * h / sigma;
        let lambda_next = (next - 1.0_f64).abs();
        assert!(lambda_next <= 0.75);
        assert!(contraction_ratio(1.0, lambda_next, 1.0, h, 1.0) <= 0.0);
    }

    #[test]
    fn kl_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_spd(3, &mut rng);
        let mu = Vector::from_vec(vec![0.1, 0.2, 0.3]);
        assert!(kl_gaussians(&mu, &s, &mu, &s).unwrap().abs() < 1e-12);
        let one = Matrix::identity(1, 1);
        let kl =
            kl_gaussians(&Vector::zeros(1), &one, &Vector::from_element(1, 1.0), &one).unwrap();
        assert!((kl - 0.5).abs() < 1e-15);
        assert!(kl_gaussians(&mu, &Matrix::zeros(3, 3), &mu, &s).is_err());
        for _ in 0..1000 {
            let s0 = random_spd(3, &mut rng);
            let s1 = random_spd(3, &mut rng);
            let m0 = standard_normal(3, &mut rng);
            let m1 = standard_normal(3, &mut rng);
            assert!(kl_gaussians(&m0, &s0, &m1, &s1).unwrap() >= -1e-10);
        }
    }

    #[test]
    fn w2_examples() {
        let mu = Vector::zeros(2);
        assert!(w2_gaussians(&mu, &diag(&[1.0, 2.0]), &mu, &diag(&[1.0, 2.0])).unwrap() < 1e-12);
        let w = w2_gaussians(
            &mu,
            &Matrix::identity(2, 2),
            &mu,
            &(Matrix::identity(2, 2) * 4.0),
        )
        .unwrap();
        assert!((w - 2.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..1000 {
            let s0 = random_spd(3, &mut rng);
            let s1 = random_spd(3, &mut rng);
            let m0 = standard_normal(3, &mut rng);
            let m1 = standard_normal(3, &mut rng);
            let ab = w2_gaussians(&m0, &s0, &m1, &s1).unwrap();
            let ba = w2_gaussians(&m1, &s1, &m0, &s0).unwrap();
            assert!((ab - ba).abs() < 1e-10, "{ab} vs {ba}");
        }
    }

    #[test]
    fn exp_map_zero_tangent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = random_spd(3, &mut rng);
        let mu = standard_normal(3, &mut rng);
        let (m, c) = exp_map(&mu, &s, &Vector::zeros(3), &Matrix::zeros(3, 3));
        assert_eq!(m, mu);
        assert!((c - s).norm() < 1e-14);
    }

    #[test]
    fn report_semantics() {
        let r = DiagnosticReport::from_violations("x", 0.0, vec![-1.0, -0.5], true);
        assert!(r.pass && r.worst_violation == -0.5 && r.rounds_checked == 2);
        let r = DiagnosticReport::from_violations("x", 0.0, vec![-1.0, f64::NAN], false);
        assert!(!r.pass);
        let mut a = DiagnosticReport::from_violations("x", 0.1, vec![0.0], false);
        a.merge(&DiagnosticReport::from_violations(
            "x",
            0.1,
            vec![0.2],
            false,
        ));
        assert!(!a.pass && a.rounds_checked == 2);
    }

    #[test]
    fn stein_needs_enough_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let state =
            VariationalState::from_parts(Vector::zeros(2), Matrix::identity(2, 2), Mode::Vits1)
                .unwrap();
        let pot = LinearPotential::new(SufficientStats::new(2, 1.0).unwrap(), 1.0);
        assert!(stein_identity_check(&state, &pot, 100, &mut rng).is_err());
    }
}
