//! Uniform policy interface for the evaluation harness: PID baseline,
//! trained checkpoints, scripted and random agents all answer the same
//! `act` call.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dynamics::DEFAULT_DT;
use crate::pidctl::{mix, MixerTable, PidConfig, PidController};
use crate::ppo::ActorCritic;
use crate::seed;
use crate::sensors::StackedState;

/// An attitude-control policy under evaluation. `act` is the deterministic
/// evaluation head; `act_stochastic` is the exploration head where one
/// exists. Agents are cloned per episode, and `reset` is called with the
/// episode seed before each run.
pub trait Agent: Send {
    fn reset(&mut self, episode_seed: u64);
    fn act(&mut self, state: &StackedState) -> [f64; 4];
    fn act_stochastic(&mut self, state: &StackedState) -> [f64; 4] {
        self.act(state)
    }
    fn name(&self) -> &str;
}

/// The PID baseline: newest observation error through the per-axis PID and
/// the (already wired) mixer, mapped back into the agent action range.
#[derive(Debug, Clone)]
pub struct PidAgent {
    controller: PidController,
    mixer: MixerTable,
    dt: f64,
}

impl PidAgent {
    pub fn new(pid: PidConfig, mixer: MixerTable, dt: f64) -> crate::error::Result<Self> {
        mixer.validate()?;
        Ok(PidAgent { controller: PidController::new(pid)?, mixer, dt })
    }

    /// Baseline gains and mixer at the default tick.
    pub fn baseline() -> Self {
        Self::new(PidConfig::baseline(), MixerTable::baseline_wired(), DEFAULT_DT).unwrap()
    }
}

impl Agent for PidAgent {
    fn reset(&mut self, _episode_seed: u64) {
        self.controller.reset();
    }

    fn act(&mut self, state: &StackedState) -> [f64; 4] {
        let error = state.latest().error;
        // a faulted controller (non-finite error) pins the motors mid-range
        let u = self.controller.step(error, self.dt).unwrap_or([0.0; 3]);
        let y = mix(u, &self.mixer);
        y.map(|v| 2.0 * v - 1.0)
    }

    fn name(&self) -> &str {
        "pid"
    }
}

/// Uniform random actions in [-1, 1]^4; the floor any trained policy must beat.
#[derive(Debug, Clone)]
pub struct RandomAgent {
    rng: ChaCha8Rng,
}

impl RandomAgent {
    pub fn new(seed: u64) -> Self {
        RandomAgent { rng: seed::rng(seed) }
    }
}

impl Agent for RandomAgent {
    fn reset(&mut self, episode_seed: u64) {
        self.rng = seed::rng(episode_seed);
    }

    fn act(&mut self, _state: &StackedState) -> [f64; 4] {
        std::array::from_fn(|_| self.rng.random_range(-1.0..=1.0))
    }

    fn name(&self) -> &str {
        "random"
    }
}

/// A trained (or freshly initialized) policy network in evaluation mode.
#[derive(Debug, Clone)]
pub struct PpoAgent {
    ac: ActorCritic,
    rng: ChaCha8Rng,
}

impl PpoAgent {
    pub fn new(ac: ActorCritic) -> Self {
        PpoAgent { ac, rng: seed::rng(0) }
    }

    pub fn network(&self) -> &ActorCritic {
        &self.ac
    }
}

impl Agent for PpoAgent {
    fn reset(&mut self, episode_seed: u64) {
        self.rng = seed::rng(episode_seed);
    }

    fn act(&mut self, state: &StackedState) -> [f64; 4] {
        let (mean, _) = self
            .ac
            .forward(&state.flat())
            .expect("policy input length must match the task's memory setting");
        std::array::from_fn(|j| mean[j])
    }

    fn act_stochastic(&mut self, state: &StackedState) -> [f64; 4] {
        let mu = self
            .ac
            .policy_pre_squash(&state.flat())
            .expect("policy input length must match the task's memory setting");
        let stds = self.ac.stds();
        std::array::from_fn(|j| {
            (mu[j] + stds[j] * self.rng.sample::<f64, _>(StandardNormal)).tanh()
        })
    }

    fn name(&self) -> &str {
        "ppo"
    }
}
