//! Agent-facing environment: reset/step lifecycle, setpoint sampling,
//! reward, episodic and continuous tasks.
//!
//! Actions are normalized to [-1, 1] per motor and mapped affinely onto
//! [0, 1] motor commands (-1 -> 0, 0 -> 0.5, +1 -> 1). The plant behind the
//! environment is pluggable: [`LocalPlant`] steps the dynamics in process,
//! while the link module provides a remote plant speaking the wire protocol.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, AircraftConfig, SimState, DEFAULT_DT};
use crate::error::{Error, Result};
use crate::seed;
use crate::sensors::{observe_sample, StackedState};

/// Episode structure: one step response per episode, or an ongoing stream
/// of random setpoint pulses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskMode {
    Episodic,
    Continuous,
}

/// Reward shaping selector. `SumAbsError` is the default; the others exist
/// for experimentation and are not used by the shipped tasks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardKind {
    /// r = -clip(Σ|e| / (3·Ω_max), 0, 1)
    SumAbsError,
    /// r = 0 if Σ|e| < threshold·Ω_max else -1
    SparseBinary,
    /// r = -clip(‖e‖₂ / (3·Ω_max), 0, 1)
    EuclideanNorm,
    /// r = -clip(Σe² / (3·Ω_max)², 0, 1)
    Quadratic,
}

impl Default for RewardKind {
    fn default() -> Self {
        RewardKind::SumAbsError
    }
}

fn default_omega_min() -> f64 {
    -5.24
}
fn default_omega_max() -> f64 {
    5.24
}
fn default_episode_max() -> f64 {
    1.0
}
fn default_memory() -> usize {
    1
}
fn default_pulse_interval() -> [f64; 2] {
    [0.1, 1.0]
}
fn default_dt() -> f64 {
    DEFAULT_DT
}
fn default_axis_mask() -> [bool; 3] {
    [true; 3]
}
fn default_sparse_threshold() -> f64 {
    0.1
}

/// Task parameters for the environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub mode: TaskMode,
    /// Setpoint bounds, rad/s.
    #[serde(default = "default_omega_min")]
    pub omega_min: f64,
    #[serde(default = "default_omega_max")]
    pub omega_max: f64,
    /// Episode length, simulated seconds (episodic mode).
    #[serde(default = "default_episode_max")]
    pub episode_max: f64,
    /// History stack depth m.
    #[serde(default = "default_memory")]
    pub memory: usize,
    /// Bounds for continuous-mode pulse widths and rest gaps, s.
    #[serde(default = "default_pulse_interval")]
    pub pulse_interval: [f64; 2],
    /// Master seed for the setpoint stream.
    #[serde(default)]
    pub seed: u64,
    /// Physics tick, s.
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub reward: RewardKind,
    /// Threshold fraction of Ω_max for the sparse-binary reward.
    #[serde(default = "default_sparse_threshold")]
    pub sparse_threshold: f64,
    /// Axes that receive nonzero setpoints; masked axes are commanded to 0.
    #[serde(default = "default_axis_mask")]
    pub axis_mask: [bool; 3],
    /// Optional |Ω| kill switch, rad/s: ends the episode early when any axis
    /// exceeds it. Off by default; episodic runs normally play out in full.
    #[serde(default)]
    pub kill_switch: Option<f64>,
}

impl TaskConfig {
    pub fn episodic() -> Self {
        TaskConfig {
            mode: TaskMode::Episodic,
            omega_min: default_omega_min(),
            omega_max: default_omega_max(),
            episode_max: default_episode_max(),
            memory: default_memory(),
            pulse_interval: default_pulse_interval(),
            seed: 0,
            dt: default_dt(),
            reward: RewardKind::default(),
            sparse_threshold: default_sparse_threshold(),
            axis_mask: default_axis_mask(),
            kill_switch: None,
        }
    }

    pub fn continuous() -> Self {
        TaskConfig { mode: TaskMode::Continuous, ..Self::episodic() }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        TaskConfig { seed, ..self.clone() }
    }

    /// Steps per episodic episode: ⌈episode_max / dt⌉, guarded against
    /// floating-point slop in the quotient.
    pub fn episode_steps(&self) -> u64 {
        (self.episode_max / self.dt - 1e-9).ceil() as u64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_min < self.omega_max) {
            return Err(Error::Config(format!(
                "omega_min must be < omega_max, got [{}, {}]",
                self.omega_min, self.omega_max
            )));
        }
        if !(self.episode_max > 0.0) {
            return Err(Error::Config(format!("episode_max must be > 0, got {}", self.episode_max)));
        }
        if self.memory < 1 {
            return Err(Error::Config("memory must be >= 1".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.pulse_interval[0] > 0.0 && self.pulse_interval[0] <= self.pulse_interval[1]) {
            return Err(Error::Config(format!(
                "pulse_interval must satisfy 0 < lo <= hi, got {:?}",
                self.pulse_interval
            )));
        }
        if !(self.omega_max > 0.0) {
            return Err(Error::Config("omega_max must be > 0".into()));
        }
        Ok(())
    }
}

/// Eq-style tracking reward: r = -clip(Σ|Ω* − Ω| / (3·Ω_max), 0, 1).
pub fn compute_reward(setpoint: [f64; 3], omega: [f64; 3], omega_max: f64) -> f64 {
    let sum: f64 = (0..3).map(|a| (setpoint[a] - omega[a]).abs()).sum();
    -(sum / (3.0 * omega_max)).clamp(0.0, 1.0)
}

/// Reward under the selected shaping; all variants stay in [-1, 0].
pub fn compute_reward_kind(
    kind: RewardKind,
    sparse_threshold: f64,
    setpoint: [f64; 3],
    omega: [f64; 3],
    omega_max: f64,
) -> f64 {
    let e: Vec<f64> = (0..3).map(|a| setpoint[a] - omega[a]).collect();
    match kind {
        RewardKind::SumAbsError => compute_reward(setpoint, omega, omega_max),
        RewardKind::SparseBinary => {
            let sum: f64 = e.iter().map(|v| v.abs()).sum();
            if sum < sparse_threshold * omega_max {
                0.0
            } else {
                -1.0
            }
        }
        RewardKind::EuclideanNorm => {
            let norm = e.iter().map(|v| v * v).sum::<f64>().sqrt();
            -(norm / (3.0 * omega_max)).clamp(0.0, 1.0)
        }
        RewardKind::Quadratic => {
            let sq: f64 = e.iter().map(|v| v * v).sum();
            let denom = 3.0 * omega_max;
            -(sq / (denom * denom)).clamp(0.0, 1.0)
        }
    }
}

/// One plant sample as the environment sees it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantSample {
    pub time: f64,
    pub gyro: [f64; 3],
    pub rotor_omega: [f64; 4],
}

/// The simulation behind the environment: in-process dynamics or a remote
/// server behind the lock-step link.
pub trait Plant: Send {
    fn reset(&mut self) -> Result<PlantSample>;
    fn step(&mut self, motor_cmd: [f64; 4]) -> Result<PlantSample>;
}

/// In-process plant stepping the dynamics directly.
#[derive(Debug, Clone)]
pub struct LocalPlant {
    cfg: AircraftConfig,
    dt: f64,
    state: SimState,
    /// Quantize commands and sensor values through f32 exactly as the wire
    /// format does, so local and link-driven runs agree bit for bit.
    pub wire_precision: bool,
}

impl LocalPlant {
    pub fn new(cfg: AircraftConfig, dt: f64) -> Result<Self> {
        cfg.validate()?;
        let state = dynamics::reset_state(&cfg);
        Ok(LocalPlant { cfg, dt, state, wire_precision: false })
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    fn sample(&self) -> PlantSample {
        let om = self.state.omega_body;
        let mut gyro = [om.x, om.y, om.z];
        let mut rotor = self.state.rotor_omega;
        if self.wire_precision {
            gyro = gyro.map(|v| v as f32 as f64);
            rotor = rotor.map(|v| v as f32 as f64);
        }
        PlantSample { time: self.state.time, gyro, rotor_omega: rotor }
    }
}

impl Plant for LocalPlant {
    fn reset(&mut self) -> Result<PlantSample> {
        self.state = dynamics::reset_state(&self.cfg);
        Ok(self.sample())
    }

    fn step(&mut self, motor_cmd: [f64; 4]) -> Result<PlantSample> {
        let cmd = if self.wire_precision {
            motor_cmd.map(|v| v as f32 as f64)
        } else {
            motor_cmd
        };
        self.state = dynamics::step(&self.state, cmd, &self.cfg, self.dt)?;
        Ok(self.sample())
    }
}

/// Step outcome: stacked state, reward, termination flag and diagnostics.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub state: StackedState,
    /// In [-1, 0].
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// Raw quantities behind the observation, for tracing and metrics.
#[derive(Debug, Clone, Copy)]
pub struct StepInfo {
    pub setpoint: [f64; 3],
    pub omega: [f64; 3],
    pub time: f64,
}

enum PulsePhase {
    Active,
    Resting,
}

/// The environment: owns the plant, setpoint schedule and history stack.
pub struct Env<P: Plant = LocalPlant> {
    task: TaskConfig,
    plant: P,
    rng: ChaCha8Rng,
    setpoint: [f64; 3],
    stack: StackedState,
    steps_done: u64,
    episode_steps: u64,
    started: bool,
    done: bool,
    // continuous mode schedule
    phase: PulsePhase,
    phase_steps_left: u64,
}

impl Env<LocalPlant> {
    /// Environment over an in-process plant.
    pub fn local(task: &TaskConfig, aircraft: &AircraftConfig) -> Result<Self> {
        let plant = LocalPlant::new(aircraft.clone(), task.dt)?;
        Self::with_plant(task, plant)
    }
}

impl<P: Plant> Env<P> {
    pub fn with_plant(task: &TaskConfig, plant: P) -> Result<Self> {
        task.validate()?;
        let episode_steps = task.episode_steps();
        Ok(Env {
            rng: seed::rng(task.seed),
            setpoint: [0.0; 3],
            stack: StackedState::new(task.memory),
            steps_done: 0,
            episode_steps,
            started: false,
            done: false,
            phase: PulsePhase::Active,
            phase_steps_left: 0,
            task: task.clone(),
            plant,
        })
    }

    pub fn task(&self) -> &TaskConfig {
        &self.task
    }

    pub fn setpoint(&self) -> [f64; 3] {
        self.setpoint
    }

    pub fn plant(&self) -> &P {
        &self.plant
    }

    fn draw_setpoint(&mut self) -> [f64; 3] {
        // Always draw all three axes so masked tasks consume the same stream.
        let mut sp = [0.0; 3];
        for a in 0..3 {
            let v = self.rng.random_range(self.task.omega_min..=self.task.omega_max);
            sp[a] = if self.task.axis_mask[a] { v } else { 0.0 };
        }
        sp
    }

    fn draw_phase_steps(&mut self) -> u64 {
        let [lo, hi] = self.task.pulse_interval;
        let dur = self.rng.random_range(lo..=hi);
        ((dur / self.task.dt).round() as u64).max(1)
    }

    /// Reset the plant to rest and draw a fresh setpoint (and, in continuous
    /// mode, the first pulse duration).
    pub fn reset(&mut self) -> Result<StepResult> {
        let sample = self.plant.reset()?;
        self.setpoint = self.draw_setpoint();
        if self.task.mode == TaskMode::Continuous {
            self.phase = PulsePhase::Active;
            self.phase_steps_left = self.draw_phase_steps();
        }
        self.stack = StackedState::new(self.task.memory);
        self.stack.push(observe_sample(sample.gyro, sample.rotor_omega, self.setpoint));
        self.steps_done = 0;
        self.started = true;
        self.done = false;
        Ok(StepResult {
            state: self.stack.clone(),
            reward: 0.0,
            done: false,
            info: StepInfo { setpoint: self.setpoint, omega: sample.gyro, time: sample.time },
        })
    }

    /// Map a normalized action onto motor commands: -1 -> 0, 0 -> 0.5, +1 -> 1.
    pub fn action_to_command(action: [f64; 4]) -> [f64; 4] {
        action.map(|a| ((a + 1.0) / 2.0).clamp(0.0, 1.0))
    }

    /// Advance one tick under the given action.
    pub fn step(&mut self, action: [f64; 4]) -> Result<StepResult> {
        if !self.started {
            return Err(Error::Env("step before reset".into()));
        }
        if self.done && self.task.mode == TaskMode::Episodic {
            return Err(Error::Env("step after episode end".into()));
        }
        if action.iter().any(|a| !a.is_finite()) {
            return Err(Error::Env(format!("non-finite action {action:?}")));
        }
        let cmd = Self::action_to_command(action);
        let sample = self.plant.step(cmd)?;
        self.steps_done += 1;

        // Reward reflects tracking of the setpoint that was active during
        // this step; the schedule only advances afterwards.
        let reward = compute_reward_kind(
            self.task.reward,
            self.task.sparse_threshold,
            self.setpoint,
            sample.gyro,
            self.task.omega_max,
        );

        match self.task.mode {
            TaskMode::Episodic => {
                if self.steps_done >= self.episode_steps {
                    self.done = true;
                }
            }
            TaskMode::Continuous => {
                self.phase_steps_left = self.phase_steps_left.saturating_sub(1);
                if self.phase_steps_left == 0 {
                    match self.phase {
                        PulsePhase::Active => {
                            // pulse expired: rest at zero for a random gap
                            self.setpoint = [0.0; 3];
                            self.phase = PulsePhase::Resting;
                        }
                        PulsePhase::Resting => {
                            self.setpoint = self.draw_setpoint();
                            self.phase = PulsePhase::Active;
                        }
                    }
                    self.phase_steps_left = self.draw_phase_steps();
                }
            }
        }
        if let Some(limit) = self.task.kill_switch {
            if sample.gyro.iter().any(|w| w.abs() > limit) {
                self.done = true;
            }
        }

        self.stack.push(observe_sample(sample.gyro, sample.rotor_omega, self.setpoint));
        Ok(StepResult {
            state: self.stack.clone(),
            reward,
            done: self.done,
            info: StepInfo { setpoint: self.setpoint, omega: sample.gyro, time: sample.time },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(seed: u64) -> Env<LocalPlant> {
        let task = TaskConfig { seed, ..TaskConfig::episodic() };
        Env::local(&task, &AircraftConfig::iris()).unwrap()
    }

    #[test]
    fn reward_zero_at_setpoint() {
        assert_eq!(compute_reward([1.0, -2.0, 0.5], [1.0, -2.0, 0.5], 5.24), 0.0);
    }

    #[test]
    fn reward_saturates_at_minus_one() {
        assert_eq!(compute_reward([5.24, 5.24, 5.24], [-5.24, -5.24, -5.24], 5.24), -1.0);
        assert_eq!(compute_reward([100.0, 0.0, 0.0], [0.0; 3], 5.24), -1.0);
    }

    #[test]
    fn reward_derived_one_third() {
        let r = compute_reward([5.24, 0.0, 0.0], [0.0; 3], 5.24);
        assert!((r - (-1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn reward_bounds_and_monotonicity() {
        let mut rng = seed::rng(42);
        for _ in 0..10_000 {
            let sp: [f64; 3] = std::array::from_fn(|_| rng.random_range(-6.0..6.0));
            let om: [f64; 3] = std::array::from_fn(|_| rng.random_range(-6.0..6.0));
            let r = compute_reward(sp, om, 5.24);
            assert!((-1.0..=0.0).contains(&r));
            // growing any one |e| below the clip strictly decreases r
            let base = compute_reward(sp, [sp[0] - 1.0, sp[1], sp[2]], 5.24);
            let worse = compute_reward(sp, [sp[0] - 1.5, sp[1], sp[2]], 5.24);
            if base > -1.0 {
                assert!(worse < base);
            }
        }
    }

    #[test]
    fn reward_variants_stay_normalized() {
        let mut rng = seed::rng(7);
        for kind in [
            RewardKind::SumAbsError,
            RewardKind::SparseBinary,
            RewardKind::EuclideanNorm,
            RewardKind::Quadratic,
        ] {
            for _ in 0..1000 {
                let sp: [f64; 3] = std::array::from_fn(|_| rng.random_range(-20.0..20.0));
                let om: [f64; 3] = std::array::from_fn(|_| rng.random_range(-20.0..20.0));
                let r = compute_reward_kind(kind, 0.1, sp, om, 5.24);
                assert!((-1.0..=0.0).contains(&r));
            }
        }
    }

    #[test]
    fn seeded_reset_reproduces_setpoints() {
        let draws = |seed| {
            let mut e = env(seed);
            (0..10).map(|_| { e.reset().unwrap(); e.setpoint() }).collect::<Vec<_>>()
        };
        assert_eq!(draws(3), draws(3));
        assert_ne!(draws(3), draws(4));
    }

    #[test]
    fn setpoint_distribution_is_uniform_in_bounds() {
        let mut e = env(11);
        let n = 10_000;
        let mut sums = [0.0; 3];
        let mut mins = [f64::INFINITY; 3];
        let mut maxs = [f64::NEG_INFINITY; 3];
        for _ in 0..n {
            e.reset().unwrap();
            let sp = e.setpoint();
            for a in 0..3 {
                sums[a] += sp[a];
                mins[a] = mins[a].min(sp[a]);
                maxs[a] = maxs[a].max(sp[a]);
            }
        }
        // U[-5.24, 5.24]: sd of the mean = 5.24/sqrt(3n)
        let three_sigma = 3.0 * 5.24 / (3.0 * n as f64).sqrt();
        for a in 0..3 {
            assert!(mins[a] >= -5.24 && maxs[a] <= 5.24);
            assert!(sums[a].abs() / n as f64 <= three_sigma, "axis {a} mean off");
            assert!(maxs[a] > 4.5 && mins[a] < -4.5, "axis {a} range unexplored");
        }
    }

    #[test]
    fn episode_ends_exactly_at_step_1000() {
        let mut e = env(1);
        e.reset().unwrap();
        for k in 1..=1000u64 {
            let r = e.step([0.0; 4]).unwrap();
            assert_eq!(r.done, k == 1000, "step {k}");
        }
        assert!(matches!(e.step([0.0; 4]), Err(Error::Env(_))));
    }

    #[test]
    fn episode_steps_is_ceiling() {
        let mut t = TaskConfig::episodic();
        t.episode_max = 1.0;
        assert_eq!(t.episode_steps(), 1000);
        t.episode_max = 0.0105;
        t.dt = 0.001;
        assert_eq!(t.episode_steps(), 11);
    }

    #[test]
    fn idle_action_at_zero_setpoint_gives_zero_reward() {
        let task = TaskConfig { axis_mask: [false; 3], ..TaskConfig::episodic() };
        let mut e = Env::local(&task, &AircraftConfig::iris()).unwrap();
        e.reset().unwrap();
        let r = e.step([-1.0; 4]).unwrap();
        assert_eq!(r.reward, 0.0);
    }

    #[test]
    fn rewards_stay_in_unit_band() {
        let mut e = env(5);
        e.reset().unwrap();
        let mut rng = seed::rng(99);
        for _ in 0..1000 {
            let a: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let r = e.step(a).unwrap();
            assert!((-1.0..=0.0).contains(&r.reward));
            if r.done {
                e.reset().unwrap();
            }
        }
    }

    #[test]
    fn replay_is_bit_identical() {
        let run = || {
            let mut e = env(21);
            e.reset().unwrap();
            let mut rng = seed::rng(77);
            let mut rewards = Vec::new();
            for _ in 0..500 {
                let a: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
                rewards.push(e.step(a).unwrap().reward);
            }
            rewards
        };
        let (a, b) = (run(), run());
        assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn action_map_endpoints() {
        let c = Env::<LocalPlant>::action_to_command([-1.0, 0.0, 1.0, 2.0]);
        assert_eq!(c, [0.0, 0.5, 1.0, 1.0]);
    }

    #[test]
    fn continuous_pulse_durations_in_bounds() {
        let task = TaskConfig { seed: 9, ..TaskConfig::continuous() };
        let mut e = Env::local(&task, &AircraftConfig::iris()).unwrap();
        e.reset().unwrap();
        let mut current = e.setpoint();
        let mut span = 0u64;
        let mut spans = Vec::new();
        for _ in 0..60_000 {
            let r = e.step([0.0; 4]).unwrap();
            span += 1;
            if r.info.setpoint != current {
                spans.push(span);
                current = r.info.setpoint;
                span = 0;
            }
            assert!(!r.done);
        }
        assert!(spans.len() > 20, "setpoint never changed");
        for s in spans {
            let dur = s as f64 * task.dt;
            assert!((0.1 - 1e-9..=1.0 + 1e-9).contains(&dur), "span {dur}s out of bounds");
        }
    }

    #[test]
    fn continuous_rests_at_zero_between_pulses() {
        let task = TaskConfig { seed: 13, ..TaskConfig::continuous() };
        let mut e = Env::local(&task, &AircraftConfig::iris()).unwrap();
        e.reset().unwrap();
        let mut saw_rest = false;
        let mut saw_pulse = false;
        for _ in 0..20_000 {
            let r = e.step([0.0; 4]).unwrap();
            if r.info.setpoint == [0.0; 3] {
                saw_rest = true;
            } else {
                saw_pulse = true;
            }
        }
        assert!(saw_rest && saw_pulse);
    }

    #[test]
    fn kill_switch_ends_episode() {
        let task = TaskConfig { kill_switch: Some(0.5), seed: 2, ..TaskConfig::episodic() };
        let mut e = Env::local(&task, &AircraftConfig::iris()).unwrap();
        e.reset().unwrap();
        let mut done_at = None;
        for k in 1..=1000 {
            // full differential roll command spins the plant up fast
            let r = e.step([1.0, 1.0, -1.0, -1.0]).unwrap();
            if r.done {
                done_at = Some(k);
                break;
            }
        }
        assert!(done_at.unwrap() < 1000);
    }

    #[test]
    fn step_before_reset_faults() {
        let mut e = env(0);
        assert!(matches!(e.step([0.0; 4]), Err(Error::Env(_))));
    }
}
