//! atfg: a self-contained quadrotor attitude-control laboratory.
//!
//! The crate bundles everything needed to study rate control on a desk:
//!
//! - [`dynamics`]: ball-joint rotational plant with a first-order rotor model
//! - [`sensors`]: gyro/ESC observations with an m-deep history stack
//! - [`pidctl`]: per-axis discrete PID and the motor-mixing stage
//! - [`env`]: the agent-facing reset/step environment and reward
//! - [`link`]: lock-step UDP protocol where motor commands drive the clock
//! - [`ppo`]: from-scratch PPO-clip trainer with manual backpropagation
//! - [`eval`]: step-response metric suite with confidence intervals
//!
//! Everything is seeded and deterministic: a run is reproducible from its
//! config files and one master seed, whether or not the `parallel` feature
//! (rayon data-parallel evaluation and rollouts) is enabled.

pub mod agent;
pub mod config;
pub mod dynamics;
pub mod env;
pub mod error;
pub mod eval;
pub mod exec;
pub mod link;
pub mod pidctl;
pub mod ppo;
pub mod seed;
pub mod sensors;

pub use agent::{Agent, PidAgent, PpoAgent, RandomAgent};
pub use dynamics::{AircraftConfig, SimState, DEFAULT_DT};
pub use env::{compute_reward, Env, LocalPlant, Plant, StepResult, TaskConfig, TaskMode};
pub use error::{Error, Result};
pub use eval::{evaluate, EvalOptions, EvalOutcome, MetricsReport};
pub use pidctl::{MixerTable, PidConfig, PidController};
pub use ppo::{train, ActorCritic, TrainConfig, TrainResult};
pub use sensors::{Observation, StackedState, OBS_DIM};
