//! From-scratch PPO-clip trainer for the attitude task.
//!
//! Rollouts fan out over independent environment instances (each with its
//! own setpoint and exploration streams derived from the master seed), so
//! collection parallelism never changes the numbers. Updates run on a
//! single owner.

pub mod gae;
pub mod net;
pub mod update;

pub use gae::{gae, normalize_advantages};
pub use net::{ActorCritic, Mlp};
pub use update::{
    clip_global_norm, gaussian_logp, loss_and_grads, ppo_update, Adam, Batch, LossBreakdown,
    PpoHypers, UpdateStats,
};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::AircraftConfig;
use crate::env::{Env, LocalPlant, TaskConfig};
use crate::error::{Error, Result};
use crate::exec;
use crate::seed;

fn default_total_steps() -> u64 {
    1_000_000
}
fn default_horizon() -> usize {
    2048
}
fn default_minibatch() -> usize {
    64
}
fn default_epochs() -> usize {
    10
}
fn default_clip_ratio() -> f64 {
    0.2
}
fn default_gamma() -> f64 {
    0.99
}
fn default_gae_lambda() -> f64 {
    0.95
}
fn default_learning_rate() -> f64 {
    3e-4
}
fn default_seed_count() -> usize {
    3
}
fn default_num_envs() -> usize {
    4
}
fn default_hidden() -> Vec<usize> {
    vec![32, 32]
}
fn default_log_std_init() -> f64 {
    -0.5
}
fn default_value_coef() -> f64 {
    0.5
}
fn default_max_grad_norm() -> f64 {
    0.5
}
fn default_eval_interval() -> usize {
    10
}
fn default_eval_episodes() -> usize {
    8
}

/// Trainer hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    /// Total environment steps collected, desk scale.
    #[serde(default = "default_total_steps")]
    pub total_steps: u64,
    /// Steps per update batch, summed over the parallel environments.
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_minibatch")]
    pub minibatch: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    /// Surrogate clip ε.
    #[serde(default = "default_clip_ratio")]
    pub clip_ratio: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_gae_lambda")]
    pub gae_lambda: f64,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    /// Independently trained agents per configuration.
    #[serde(default = "default_seed_count")]
    pub seed_count: usize,
    #[serde(default = "default_num_envs")]
    pub num_envs: usize,
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    #[serde(default = "default_log_std_init")]
    pub log_std_init: f64,
    #[serde(default)]
    pub entropy_coef: f64,
    #[serde(default = "default_value_coef")]
    pub value_coef: f64,
    #[serde(default = "default_max_grad_norm")]
    pub max_grad_norm: f64,
    /// Updates between checkpoint evaluations.
    #[serde(default = "default_eval_interval")]
    pub eval_interval: usize,
    #[serde(default = "default_eval_episodes")]
    pub eval_episodes: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults are complete")
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.clip_ratio > 0.0 && self.clip_ratio < 1.0) {
            return Err(Error::Config(format!("clip_ratio must be in (0,1), got {}", self.clip_ratio)));
        }
        for (name, v) in [("gamma", self.gamma), ("gae_lambda", self.gae_lambda)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("{name} must be in (0,1], got {v}")));
            }
        }
        if self.total_steps == 0 || self.horizon == 0 || self.minibatch == 0 || self.epochs == 0 {
            return Err(Error::Config("total_steps, horizon, minibatch and epochs must be positive".into()));
        }
        if self.num_envs == 0 || self.horizon % self.num_envs != 0 {
            return Err(Error::Config(format!(
                "horizon ({}) must be a positive multiple of num_envs ({})",
                self.horizon, self.num_envs
            )));
        }
        if self.minibatch > self.horizon {
            return Err(Error::Config("minibatch must not exceed horizon".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        if self.seed_count == 0 || self.eval_interval == 0 || self.eval_episodes == 0 {
            return Err(Error::Config("seed_count, eval_interval and eval_episodes must be positive".into()));
        }
        Ok(())
    }
}

/// One completed training episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpisodePoint {
    pub episode: u64,
    /// Mean per-step reward over the episode, in [-1, 0].
    pub reward: f64,
}

/// Outcome of one seeded training run.
pub struct TrainResult {
    /// Best policy by held-out evaluation reward.
    pub policy: ActorCritic,
    /// Policy at the end of training.
    pub final_policy: ActorCritic,
    /// Per-episode learning curve.
    pub curve: Vec<EpisodePoint>,
    /// Evaluation reward of `policy`.
    pub best_eval_reward: f64,
    /// Environment steps actually collected.
    pub steps: u64,
    pub updates: u64,
}

struct EnvSlot {
    env: Env<LocalPlant>,
    explore: ChaCha8Rng,
    obs: Vec<f64>,
    ep_reward_sum: f64,
    ep_len: u64,
}

struct Segment {
    obs: Vec<Vec<f64>>,
    actions: Vec<Vec<f64>>,
    logp: Vec<f64>,
    rewards: Vec<f64>,
    dones: Vec<bool>,
    values: Vec<f64>,
    bootstrap: f64,
    /// Mean rewards of episodes completed inside this segment, in order.
    episodes: Vec<f64>,
}

fn collect_segment(slot: &mut EnvSlot, ac: &ActorCritic, steps: usize) -> Result<Segment> {
    let mut seg = Segment {
        obs: Vec::with_capacity(steps),
        actions: Vec::with_capacity(steps),
        logp: Vec::with_capacity(steps),
        rewards: Vec::with_capacity(steps),
        dones: Vec::with_capacity(steps),
        values: Vec::with_capacity(steps),
        bootstrap: 0.0,
        episodes: Vec::new(),
    };
    let stds = ac.stds();
    for _ in 0..steps {
        let mu = ac.policy_pre_squash(&slot.obs)?;
        let value = ac.state_value(&slot.obs)?;
        let z: Vec<f64> = (0..ac.act_dim())
            .map(|j| mu[j] + stds[j] * slot.explore.sample::<f64, _>(StandardNormal))
            .collect();
        let action: [f64; 4] = std::array::from_fn(|j| z[j].tanh());
        let logp = gaussian_logp(&z, &mu, &ac.log_std);
        let res = slot.env.step(action)?;

        seg.obs.push(std::mem::take(&mut slot.obs));
        seg.actions.push(z);
        seg.logp.push(logp);
        seg.rewards.push(res.reward);
        seg.dones.push(res.done);
        seg.values.push(value);

        slot.ep_reward_sum += res.reward;
        slot.ep_len += 1;
        if res.done {
            seg.episodes.push(slot.ep_reward_sum / slot.ep_len as f64);
            slot.ep_reward_sum = 0.0;
            slot.ep_len = 0;
            let fresh = slot.env.reset()?;
            slot.obs = fresh.state.flat();
        } else {
            slot.obs = res.state.flat();
        }
    }
    seg.bootstrap = ac.state_value(&slot.obs)?;
    Ok(seg)
}

/// Per-input divisors for one stacked observation: error axes in units of
/// the setpoint bound, rotor speeds in units of the top rotor speed.
pub fn observation_scale(task: &TaskConfig, aircraft: &AircraftConfig) -> Vec<f64> {
    let mut block = vec![task.omega_max; 3];
    block.extend(vec![aircraft.rotor_omega_max; 4]);
    block.repeat(task.memory)
}

/// Deterministic-policy evaluation used for checkpoint selection:
/// mean per-step reward over `episodes` fresh episodes.
pub fn evaluate_policy_reward(
    ac: &ActorCritic,
    task: &TaskConfig,
    aircraft: &AircraftConfig,
    episodes: usize,
    eval_seed: u64,
) -> Result<f64> {
    let rewards = exec::map_indexed(episodes, |i| -> Result<f64> {
        let t = task.with_seed(seed::derive(eval_seed, i as u64));
        let mut env = Env::local(&t, aircraft)?;
        let mut res = env.reset()?;
        let mut sum = 0.0;
        let steps = t.episode_steps();
        for _ in 0..steps {
            let (mean, _) = ac.forward(&res.state.flat())?;
            let action: [f64; 4] = std::array::from_fn(|j| mean[j]);
            res = env.step(action)?;
            sum += res.reward;
            if res.done {
                break;
            }
        }
        Ok(sum / steps as f64)
    });
    let mut total = 0.0;
    for r in rewards {
        total += r?;
    }
    Ok(total / episodes as f64)
}

/// Train one agent on the task. All randomness derives from `master_seed`;
/// repeated calls give bit-identical results.
pub fn train(
    task: &TaskConfig,
    aircraft: &AircraftConfig,
    cfg: &TrainConfig,
    master_seed: u64,
) -> Result<TrainResult> {
    cfg.validate()?;
    task.validate()?;
    aircraft.validate()?;

    let obs_dim = task.memory * crate::sensors::OBS_DIM;
    let mut ac = ActorCritic::new(
        obs_dim,
        4,
        &cfg.hidden,
        task.memory,
        cfg.log_std_init,
        &mut seed::rng(seed::derive(master_seed, 1)),
    );
    ac.obs_scale = observation_scale(task, aircraft);
    let mut adam = Adam::new(ac.param_count(), cfg.learning_rate);
    let mut shuffle_rng = seed::rng(seed::derive(master_seed, 2));
    let eval_seed = seed::derive(master_seed, 3);

    let mut slots = Vec::with_capacity(cfg.num_envs);
    for k in 0..cfg.num_envs {
        let t = task.with_seed(seed::derive(master_seed, 100 + k as u64));
        let mut env = Env::local(&t, aircraft)?;
        let obs = env.reset()?.state.flat();
        slots.push(EnvSlot {
            env,
            explore: seed::rng(seed::derive(master_seed, 200 + k as u64)),
            obs,
            ep_reward_sum: 0.0,
            ep_len: 0,
        });
    }

    let hypers = PpoHypers {
        clip_ratio: cfg.clip_ratio,
        value_coef: cfg.value_coef,
        entropy_coef: cfg.entropy_coef,
    };
    let per_env = cfg.horizon / cfg.num_envs;
    let mut curve: Vec<EpisodePoint> = Vec::new();
    let mut steps_collected = 0u64;
    let mut updates = 0u64;
    let mut best_params = ac.flat_params();
    let mut best_eval = f64::NEG_INFINITY;

    while steps_collected < cfg.total_steps {
        let segments = exec::map_mut(&mut slots, |slot| collect_segment(slot, &ac, per_env));

        let mut batch = Batch::default();
        for seg in segments {
            let seg = seg?;
            let mut values = seg.values;
            values.push(seg.bootstrap);
            let (adv, ret) = gae(&seg.rewards, &values, &seg.dones, cfg.gamma, cfg.gae_lambda)?;
            batch.obs.extend(seg.obs);
            batch.actions.extend(seg.actions);
            batch.logp_old.extend(seg.logp);
            batch.advantages.extend(adv);
            batch.returns.extend(ret);
            for reward in seg.episodes {
                curve.push(EpisodePoint { episode: curve.len() as u64, reward });
            }
        }
        normalize_advantages(&mut batch.advantages);
        steps_collected += batch.len() as u64;

        let stats = ppo_update(
            &mut ac,
            &batch,
            cfg.epochs,
            cfg.minibatch,
            &hypers,
            cfg.max_grad_norm,
            &mut adam,
            &mut shuffle_rng,
        )?;
        updates += 1;
        log::debug!(
            "update {updates}: loss {:.4} policy {:.4} value {:.3} kl {:.4} clip {:.2} gnorm {:.2} logstd {:.2}",
            stats.loss.total,
            stats.loss.policy,
            stats.loss.value,
            stats.loss.approx_kl,
            stats.loss.clip_fraction,
            stats.grad_norm,
            ac.log_std.iter().sum::<f64>() / ac.log_std.len() as f64
        );

        if updates % cfg.eval_interval as u64 == 0 || steps_collected >= cfg.total_steps {
            let r = evaluate_policy_reward(&ac, task, aircraft, cfg.eval_episodes, eval_seed)?;
            if r > best_eval {
                best_eval = r;
                best_params = ac.flat_params();
            }
            log::info!(
                "update {updates}: steps {steps_collected}, eval reward {r:.4}, best {best_eval:.4}"
            );
        }
    }

    let mut best = ac.clone();
    best.set_flat_params(&best_params)?;
    Ok(TrainResult {
        policy: best,
        final_policy: ac,
        curve,
        best_eval_reward: best_eval,
        steps: steps_collected,
        updates,
    })
}
