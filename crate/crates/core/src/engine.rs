//! Gaussian variational posterior updates.
//!
//! The variational family is `N(mu, B B^T)`. One inner iteration moves the mean
//! along a (sampled) gradient of the potential and moves the square-root factor
//! `B` along the Bures–Wasserstein gradient:
//!
//! ```text
//! mu' = mu - h grad U(theta)
//! B'  = (I - h A) B + h B^{-T}
//! ```
//!
//! where `theta ~ N(mu, B B^T)` and `A` is either the Hessian at `theta`
//! ([`Mode::Vits1`]) or the Hessian-free estimate `C^T C (theta - mu) grad U(theta)^T`
//! with `C` a running first-order approximation of `B^{-1}` ([`Mode::Vits2`]).
//! [`Mode::ExactExpectation`] replaces the sampled quantities by their Gaussian
//! expectations, which is the noiseless recursion.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, VitsError};
use crate::linalg::{all_finite_mat, all_finite_vec, check_dim, inverse, Matrix, Vector};
use crate::model::{HyperParams, MeanInit, Potential, SufficientStats};

/// Largest tolerated `|C B - I|_F` in [`Mode::Vits2`].
pub const INVERSE_DRIFT_GATE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Sampled Hessian, exact `B^{-1}`.
    Vits1,
    /// Hessian-free estimator and approximate inverse `C`.
    Vits2,
    /// Closed-form Gaussian expectations, no sampling.
    ExactExpectation,
}

/// Mean, square-root covariance factor and (in [`Mode::Vits2`]) approximate inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalState {
    mu: Vector,
    b: Matrix,
    c: Option<Matrix>,
    mode: Mode,
}

impl VariationalState {
    /// Builds a state from an explicit mean and factor. In [`Mode::Vits2`] the
    /// approximate inverse starts at the exact `B^{-1}`.
    pub fn from_parts(mu: Vector, b: Matrix, mode: Mode) -> Result<Self> {
        let d = mu.len();
        check_dim(d, b.nrows())?;
        check_dim(d, b.ncols())?;
        let c = match mode {
            Mode::Vits2 => Some(inverse(&b, "B")?),
            _ => None,
        };
        Ok(Self { mu, b, c, mode })
    }

    /// Like [`from_parts`](Self::from_parts) but with a caller-supplied `C`.
    pub fn with_inverse_approx(mu: Vector, b: Matrix, c: Matrix) -> Result<Self> {
        let d = mu.len();
        check_dim(d, b.nrows())?;
        check_dim(d, c.nrows())?;
        Ok(Self {
            mu,
            b,
            c: Some(c),
            mode: Mode::Vits2,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
    pub fn mu(&self) -> &Vector {
        &self.mu
    }
    pub fn b(&self) -> &Matrix {
        &self.b
    }
    pub fn c(&self) -> Option<&Matrix> {
        self.c.as_ref()
    }
    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// `B B^T`.
    pub fn covariance(&self) -> Matrix {
        &self.b * self.b.transpose()
    }

    /// `mu + B eps`.
    pub fn sample_with(&self, eps: &Vector) -> Vector {
        &self.mu + &self.b * eps
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        let eps = standard_normal(self.dim(), rng);
        self.sample_with(&eps)
    }

    /// `|C B - I|_F`, when an approximate inverse is tracked.
    pub fn inverse_drift(&self) -> Option<f64> {
        self.c.as_ref().map(|c| {
            let d = self.dim();
            (c * &self.b - Matrix::identity(d, d)).norm()
        })
    }

    /// Approximation of `Sigma^{-1}`: `C^T C` when tracked, otherwise the exact inverse.
    pub fn precision(&self) -> Result<Matrix> {
        match &self.c {
            Some(c) => Ok(c.transpose() * c),
            None => {
                let b_inv = inverse(&self.b, "B")?;
                Ok(b_inv.transpose() * b_inv)
            }
        }
    }
}

pub fn standard_normal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vector {
    Vector::from_fn(d, |_, _| rng.sample(StandardNormal))
}

/// `B = I / sqrt(lambda eta)`, `C = I sqrt(lambda eta)`; the mean is zero or drawn
/// from `N(0, I / (11 eta lambda))` depending on [`HyperParams::mean_init`].
pub fn init_state<R: Rng + ?Sized>(
    params: &HyperParams,
    mode: Mode,
    rng: &mut R,
) -> VariationalState {
    let d = params.d;
    let scale = (params.lambda * params.eta).sqrt();
    let mu = match params.mean_init {
        MeanInit::Zero => Vector::zeros(d),
        MeanInit::Gaussian => {
            let sd = (1.0 / (11.0 * params.eta * params.lambda)).sqrt();
            standard_normal(d, rng) * sd
        }
    };
    let c = match mode {
        Mode::Vits2 => Some(Matrix::identity(d, d) * scale),
        _ => None,
    };
    VariationalState {
        mu,
        b: Matrix::identity(d, d) / scale,
        c,
        mode,
    }
}

/// `mu - h grad`.
pub fn mean_step(mu: &Vector, grad: &Vector, h: f64) -> Result<Vector> {
    check_dim(mu.len(), grad.len())?;
    if !all_finite_vec(grad) {
        return Err(VitsError::NonFinite("gradient"));
    }
    Ok(mu - grad * h)
}

/// `(I - h A) B + h B_inv_T`, where `B_inv_T` is `B^{-T}` or its approximation `C^T`.
///
/// Assumes `h |A|_2 < 1`.
pub fn sqrt_step(b: &Matrix, a: &Matrix, b_inv_t: &Matrix, h: f64) -> Matrix {
    b - (a * b) * h + b_inv_t * h
}

/// `B^{-T}`, solved against `B`.
pub fn exact_inverse_transpose(b: &Matrix) -> Result<Matrix> {
    Ok(inverse(b, "B")?.transpose())
}

/// Hessian-free estimate `C^T C (theta - mu) grad^T`. Its expectation under
/// `N(mu, B B^T)` with `C = B^{-1}` is the expected Hessian (Gaussian integration by parts).
pub fn hessian_free_a(c: &Matrix, theta: &Vector, mu: &Vector, grad: &Vector) -> Matrix {
    let u = c.transpose() * (c * (theta - mu));
    u * grad.transpose()
}

/// First-order update of the approximate inverse: `C (I - h (C^T C - A))`.
pub fn inverse_approx_step(c: &Matrix, a: &Matrix, h: f64) -> Matrix {
    let ctc = c.transpose() * c;
    c - (c * (ctc - a)) * h
}

/// Step size and inner iteration count for one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub h: f64,
    pub k: usize,
}

impl Schedule {
    pub fn new(h: f64, k: usize) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(invalid("h", format!("{h} is not a positive step size")));
        }
        if k == 0 {
            return Err(invalid("K", "at least one inner iteration is required"));
        }
        Ok(Self { h, k })
    }
}

/// Per-agent knobs on top of the default schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleOverrides {
    /// Fixed step size replacing the eigenvalue-based one.
    pub h: Option<f64>,
    /// Fixed iteration count replacing the condition-number-based one.
    pub k: Option<usize>,
    /// Multiplier on the default iteration count.
    pub k_scale: f64,
    /// Multiplier on the default step size.
    pub h_scale: f64,
}

impl Default for ScheduleOverrides {
    fn default() -> Self {
        Self {
            h: None,
            k: None,
            k_scale: 1.0,
            h_scale: 1.0,
        }
    }
}

/// `min(1, 4 lambda^2 / (81 R^2 d ln(3 T^3)))`.
pub fn compute_eta(lambda: f64, r: f64, d: usize, horizon: usize) -> f64 {
    let t = horizon as f64;
    let eta = 4.0 * lambda * lambda / (81.0 * r * r * d as f64 * (3.0 * t.powi(3)).ln());
    if eta.is_finite() {
        eta.min(1.0)
    } else {
        1.0
    }
}

/// `lambda_min / (2 eta (lambda_min^2 + 2 lambda_max^2))`.
pub fn default_step_size(lambda_min: f64, lambda_max: f64, eta: f64) -> f64 {
    lambda_min / (2.0 * eta * (lambda_min * lambda_min + 2.0 * lambda_max * lambda_max))
}

/// Unrounded `1 + 2 (1 + 2 kappa^2) ln(2 R kappa d^2 T^2 ln^2(3 T^3))`.
pub fn default_iterations(kappa: f64, r: f64, d: usize, horizon: usize) -> f64 {
    let t = horizon as f64;
    let d = d as f64;
    let log_t = (3.0 * t.powi(3)).ln();
    1.0 + 2.0 * (1.0 + 2.0 * kappa * kappa) * (2.0 * r * kappa * d * d * t * t * log_t * log_t).ln()
}

pub fn compute_schedule(stats: &SufficientStats, params: &HyperParams) -> Result<Schedule> {
    compute_schedule_with(stats, params, &ScheduleOverrides::default())
}

pub fn compute_schedule_with(
    stats: &SufficientStats,
    params: &HyperParams,
    overrides: &ScheduleOverrides,
) -> Result<Schedule> {
    let h = match overrides.h {
        Some(h) => h,
        None => {
            overrides.h_scale
                * default_step_size(stats.lambda_min(), stats.lambda_max(), params.eta)
        }
    };
    let k = match overrides.k {
        Some(k) => k,
        None => {
            let raw = overrides.k_scale
                * default_iterations(stats.kappa(), params.r, params.d, params.horizon);
            if !raw.is_finite() {
                return Err(invalid("K", format!("iteration count {raw} is not finite")));
            }
            (raw.ceil() as usize).max(1)
        }
    };
    Schedule::new(h, k)
}

/// Runs `schedule.k` inner iterations on `state` against `potential`.
pub fn update_posterior<R: Rng + ?Sized>(
    state: &mut VariationalState,
    potential: &dyn Potential,
    schedule: &Schedule,
    rng: &mut R,
) -> Result<()> {
    update_posterior_observed(state, potential, schedule, rng, &mut |_, _| {})
}

/// [`update_posterior`] with a callback invoked after every inner iteration with the
/// 1-based iteration index and the new state.
pub fn update_posterior_observed<R: Rng + ?Sized>(
    state: &mut VariationalState,
    potential: &dyn Potential,
    schedule: &Schedule,
    rng: &mut R,
    observer: &mut dyn FnMut(usize, &VariationalState),
) -> Result<()> {
    let schedule = Schedule::new(schedule.h, schedule.k)?;
    check_dim(state.dim(), potential.dim())?;
    let h = schedule.h;
    for k in 1..=schedule.k {
        match state.mode {
            Mode::Vits1 => {
                let theta = state.sample(rng);
                let grad = potential.grad(&theta)?;
                let a = potential.hessian(&theta)?;
                let b_inv_t = exact_inverse_transpose(&state.b)?;
                state.mu = mean_step(&state.mu, &grad, h)?;
                state.b = sqrt_step(&state.b, &a, &b_inv_t, h);
            }
            Mode::Vits2 => {
                let theta = state.sample(rng);
                let grad = potential.grad(&theta)?;
                let c = state.c.as_ref().ok_or(VitsError::Unsupported(
                    "approximate-inverse mode without an inverse approximation",
                ))?;
                let a = hessian_free_a(c, &theta, &state.mu, &grad);
                let b_next = sqrt_step(&state.b, &a, &c.transpose(), h);
                let c_next = inverse_approx_step(c, &a, h);
                state.mu = mean_step(&state.mu, &grad, h)?;
                state.b = b_next;
                state.c = Some(c_next);
            }
            Mode::ExactExpectation => {
                let cov = state.covariance();
                let (grad, a) = potential.gaussian_expectations(&state.mu, &cov).ok_or(
                    VitsError::Unsupported(
                        "exact-expectation mode needs closed-form Gaussian expectations",
                    ),
                )??;
                let b_inv_t = exact_inverse_transpose(&state.b)?;
                state.mu = mean_step(&state.mu, &grad, h)?;
                state.b = sqrt_step(&state.b, &a, &b_inv_t, h);
            }
        }
        if !all_finite_mat(&state.b) {
            return Err(VitsError::NonFinite("square-root factor"));
        }
        observer(k, state);
    }
    if let Some(drift) = state.inverse_drift() {
        if drift.is_nan() || drift > INVERSE_DRIFT_GATE {
            return Err(VitsError::InverseDrift(drift));
        }
    }
    Ok(())
}
