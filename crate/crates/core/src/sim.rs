//! The bandit loop: context generation, agent decision, reward draw, regret.
//!
//! Every simulation derives three independent ChaCha streams from one seed, for the
//! environment (theta* and arm sets), reward noise and the agent. Two agents run
//! with the same seed therefore face the same arms and the same noise realisations.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agents::Agent;
use crate::bandit::{build_synthetic_arms, ArmSet, EnvKind, Environment};
use crate::error::{invalid, Result};

const ENV_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;
const AGENT_STREAM: u64 = 2;

/// One round of output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based round index.
    pub t: usize,
    pub arm: usize,
    pub reward: f64,
    pub inst_regret: f64,
    pub cum_regret: f64,
    /// Wall time of the agent's decision and update, zero when timing is off.
    pub elapsed_ns: u64,
}

/// Shape of a synthetic problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub kind: EnvKind,
    pub d: usize,
    pub n_arms: usize,
    pub noise_std: f64,
    /// Draw a fresh arm set every round instead of keeping the first one.
    pub resample_contexts: bool,
}

pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub struct Simulation {
    env: Environment,
    arms: ArmSet,
    resample_contexts: bool,
    env_rng: ChaCha8Rng,
    noise_rng: ChaCha8Rng,
    agent_rng: ChaCha8Rng,
    record_timing: bool,
    t: usize,
    cum_regret: f64,
}

impl Simulation {
    pub fn new(spec: &ProblemSpec, seed: u64) -> Result<Self> {
        if spec.d == 0 {
            return Err(invalid("d", "must be positive"));
        }
        let mut env_rng = stream(seed, ENV_STREAM);
        let env = Environment::random(spec.d, spec.kind, spec.noise_std, &mut env_rng)?;
        let arms = build_synthetic_arms(env.theta_star(), spec.n_arms, &mut env_rng)?;
        Ok(Self::from_parts(
            env,
            arms,
            spec.resample_contexts,
            seed,
            env_rng,
        ))
    }

    /// A simulation over a caller-supplied environment and fixed arm set.
    pub fn with_arms(env: Environment, arms: ArmSet, seed: u64) -> Self {
        let env_rng = stream(seed, ENV_STREAM);
        Self::from_parts(env, arms, false, seed, env_rng)
    }

    fn from_parts(
        env: Environment,
        arms: ArmSet,
        resample_contexts: bool,
        seed: u64,
        env_rng: ChaCha8Rng,
    ) -> Self {
        Self {
            env,
            arms,
            resample_contexts,
            env_rng,
            noise_rng: stream(seed, NOISE_STREAM),
            agent_rng: stream(seed, AGENT_STREAM),
            record_timing: false,
            t: 0,
            cum_regret: 0.0,
        }
    }

    pub fn record_timing(mut self, on: bool) -> Self {
        self.record_timing = on;
        self
    }

    pub fn environment(&self) -> &Environment {
        &self.env
    }
    pub fn arms(&self) -> &ArmSet {
        &self.arms
    }

    /// The agent's random stream, also used to construct the agent.
    pub fn agent_rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.agent_rng
    }

    pub fn step(&mut self, agent: &mut dyn Agent) -> Result<RoundRecord> {
        if self.resample_contexts && self.t > 0 {
            self.arms =
                build_synthetic_arms(self.env.theta_star(), self.arms.n_arms(), &mut self.env_rng)?;
        }
        let start = self.record_timing.then(Instant::now);
        let arm = agent.select(&self.arms, &mut self.agent_rng)?;
        let mut elapsed = start.map(|s| s.elapsed().as_nanos() as u64).unwrap_or(0);

        let phi = self.arms.arm(arm);
        let reward = self.env.pull(&phi, &mut self.noise_rng);

        let start = self.record_timing.then(Instant::now);
        agent.observe(&phi, reward, &mut self.agent_rng)?;
        elapsed += start.map(|s| s.elapsed().as_nanos() as u64).unwrap_or(0);

        let inst_regret = self.env.regret(&self.arms, arm);
        self.t += 1;
        self.cum_regret += inst_regret;
        Ok(RoundRecord {
            t: self.t,
            arm,
            reward,
            inst_regret,
            cum_regret: self.cum_regret,
            elapsed_ns: elapsed,
        })
    }

    pub fn run(&mut self, agent: &mut dyn Agent, horizon: usize) -> Result<Vec<RoundRecord>> {
        (0..horizon).map(|_| self.step(agent)).collect()
    }
}
