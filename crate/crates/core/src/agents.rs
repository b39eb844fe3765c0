//! Bandit agents. An agent only ever sees the arm features and its own rewards.

use nalgebra::Cholesky;
use rand::{Rng, RngCore};

use crate::bandit::{select_arm, ArmSet};
use crate::engine::{
    compute_schedule_with, init_state, standard_normal, update_posterior_observed, Mode, Schedule,
    ScheduleOverrides, VariationalState,
};
use crate::error::{invalid, Result, VitsError};
use crate::linalg::{all_finite_vec, check_dim, symmetrize, Vector};
use crate::model::{
    exact_posterior, HyperParams, LinearPotential, LogisticPotential, Potential, SufficientStats,
};

/// Default Langevin step as a fraction of `1 / (eta lambda_max)`.
pub const LMC_STEP_FRACTION: f64 = 0.1;
/// Default number of Langevin steps per round.
pub const LMC_STEPS: usize = 50;

pub trait Agent: Send {
    fn name(&self) -> &'static str;

    /// Picks an arm for this round.
    fn select(&mut self, arms: &ArmSet, rng: &mut dyn RngCore) -> Result<usize>;

    /// Absorbs the reward of the arm it picked.
    fn observe(&mut self, phi: &Vector, reward: f64, rng: &mut dyn RngCore) -> Result<()>;
}

/// Thompson sampling from a Gaussian variational posterior refined by
/// [`update_posterior_observed`] after every observation.
pub struct VitsAgent {
    params: HyperParams,
    overrides: ScheduleOverrides,
    potential: Box<dyn Potential>,
    state: VariationalState,
    last_schedule: Option<Schedule>,
}

impl VitsAgent {
    pub fn new(
        params: HyperParams,
        mode: Mode,
        potential: Box<dyn Potential>,
        overrides: ScheduleOverrides,
        rng: &mut dyn RngCore,
    ) -> Result<Self> {
        params.validate()?;
        check_dim(params.d, potential.dim())?;
        let state = init_state(&params, mode, rng);
        Ok(Self {
            params,
            overrides,
            potential,
            state,
            last_schedule: None,
        })
    }

    pub fn linear(
        params: HyperParams,
        mode: Mode,
        overrides: ScheduleOverrides,
        rng: &mut dyn RngCore,
    ) -> Result<Self> {
        let stats = SufficientStats::new(params.d, params.lambda)?;
        let potential = LinearPotential::new(stats, params.eta);
        Self::new(params, mode, Box::new(potential), overrides, rng)
    }

    pub fn logistic(
        params: HyperParams,
        mode: Mode,
        overrides: ScheduleOverrides,
        rng: &mut dyn RngCore,
    ) -> Result<Self> {
        let potential = LogisticPotential::new(params.d, params.eta, params.lambda)?;
        Self::new(params, mode, Box::new(potential), overrides, rng)
    }

    pub fn state(&self) -> &VariationalState {
        &self.state
    }
    pub fn potential(&self) -> &dyn Potential {
        self.potential.as_ref()
    }
    pub fn params(&self) -> &HyperParams {
        &self.params
    }
    pub fn last_schedule(&self) -> Option<Schedule> {
        self.last_schedule
    }

    /// [`Agent::observe`] with a per-inner-iteration callback; returns the schedule used.
    pub fn observe_with(
        &mut self,
        phi: &Vector,
        reward: f64,
        rng: &mut dyn RngCore,
        observer: &mut dyn FnMut(usize, &VariationalState),
    ) -> Result<Schedule> {
        self.potential.observe(phi, reward)?;
        let schedule = compute_schedule_with(self.potential.gram(), &self.params, &self.overrides)?;
        update_posterior_observed(
            &mut self.state,
            self.potential.as_ref(),
            &schedule,
            rng,
            observer,
        )?;
        self.last_schedule = Some(schedule);
        Ok(schedule)
    }
}

impl Agent for VitsAgent {
    fn name(&self) -> &'static str {
        match self.state.mode() {
            Mode::Vits1 => "vits1",
            Mode::Vits2 => "vits2",
            Mode::ExactExpectation => "vits_exact",
        }
    }

    fn select(&mut self, arms: &ArmSet, rng: &mut dyn RngCore) -> Result<usize> {
        let theta = self.state.sample(rng);
        select_arm(&theta, arms)
    }

    fn observe(&mut self, phi: &Vector, reward: f64, rng: &mut dyn RngCore) -> Result<()> {
        self.observe_with(phi, reward, rng, &mut |_, _| {})
            .map(|_| ())
    }
}

/// Thompson sampling from the exact Gaussian posterior `N(V^{-1} b, (eta V)^{-1})`.
pub struct LinTsAgent {
    stats: SufficientStats,
    eta: f64,
}

impl LinTsAgent {
    pub fn new(params: &HyperParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            stats: SufficientStats::new(params.d, params.lambda)?,
            eta: params.eta,
        })
    }

    pub fn stats(&self) -> &SufficientStats {
        &self.stats
    }

    /// One posterior draw.
    pub fn sample_posterior<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vector> {
        let post = exact_posterior(&self.stats, self.eta);
        let chol = Cholesky::new(symmetrize(&post.sigma_hat))
            .ok_or(VitsError::NotPositiveDefinite("posterior covariance"))?;
        let eps = standard_normal(self.stats.dim(), rng);
        Ok(post.mu_hat + chol.l() * eps)
    }
}

impl Agent for LinTsAgent {
    fn name(&self) -> &'static str {
        "lints"
    }

    fn select(&mut self, arms: &ArmSet, rng: &mut dyn RngCore) -> Result<usize> {
        let theta = self.sample_posterior(rng)?;
        select_arm(&theta, arms)
    }

    fn observe(&mut self, phi: &Vector, reward: f64, _rng: &mut dyn RngCore) -> Result<()> {
        self.stats.update(phi, reward)
    }
}

/// `theta - h grad + sqrt(2 h) xi`.
pub fn langevin_step(theta: &Vector, grad: &Vector, h: f64, xi: &Vector) -> Vector {
    theta - grad * h + xi * (2.0 * h).sqrt()
}

/// Langevin Monte Carlo Thompson sampling: a warm-started unadjusted Langevin chain
/// on `U_t`, acting greedily on its current iterate.
pub struct LmcTsAgent {
    potential: Box<dyn Potential>,
    theta: Vector,
    step: Option<f64>,
    steps: usize,
}

impl LmcTsAgent {
    /// The chain starts from a prior draw `N(0, I / (eta lambda))`. `step = None`
    /// uses `0.1 / (eta lambda_max(V_t))` each round.
    pub fn new(
        params: &HyperParams,
        potential: Box<dyn Potential>,
        step: Option<f64>,
        steps: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Self> {
        params.validate()?;
        check_dim(params.d, potential.dim())?;
        if let Some(h) = step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(invalid("h_lmc", format!("{h} is not a positive step size")));
            }
        }
        if steps == 0 {
            return Err(invalid("K_lmc", "at least one Langevin step is required"));
        }
        let theta = standard_normal(params.d, rng) / (params.eta * params.lambda).sqrt();
        Ok(Self {
            potential,
            theta,
            step,
            steps,
        })
    }

    pub fn theta(&self) -> &Vector {
        &self.theta
    }

    pub fn step_size(&self) -> f64 {
        self.step.unwrap_or_else(|| {
            LMC_STEP_FRACTION / (self.potential.eta() * self.potential.gram().lambda_max())
        })
    }

    /// Runs the configured number of Langevin steps on the current potential.
    pub fn advance<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let h = self.step_size();
        let d = self.theta.len();
        for _ in 0..self.steps {
            let grad = self.potential.grad(&self.theta)?;
            let xi = standard_normal(d, rng);
            self.theta = langevin_step(&self.theta, &grad, h, &xi);
            if !all_finite_vec(&self.theta) {
                return Err(VitsError::Diverged("Langevin iterate is not finite".into()));
            }
        }
        Ok(())
    }
}

impl Agent for LmcTsAgent {
    fn name(&self) -> &'static str {
        "lmcts"
    }

    fn select(&mut self, arms: &ArmSet, _rng: &mut dyn RngCore) -> Result<usize> {
        select_arm(&self.theta, arms)
    }

    fn observe(&mut self, phi: &Vector, reward: f64, rng: &mut dyn RngCore) -> Result<()> {
        self.potential.observe(phi, reward)?;
        self.advance(rng)
    }
}

/// Picks an arm uniformly at random.
#[derive(Debug, Default, Clone, Copy)]
pub struct UniformAgent;

impl Agent for UniformAgent {
    fn name(&self) -> &'static str {
        "uniform"
    }

    fn select(&mut self, arms: &ArmSet, rng: &mut dyn RngCore) -> Result<usize> {
        if arms.n_arms() == 0 {
            return Err(VitsError::EmptyArmSet);
        }
        Ok(rng.random_range(0..arms.n_arms()))
    }

    fn observe(&mut self, _phi: &Vector, _reward: f64, _rng: &mut dyn RngCore) -> Result<()> {
        Ok(())
    }
}
