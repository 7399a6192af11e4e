//! Agent spec strings: "pid", "pid:<controller cfg>", "ppo:<checkpoint>",
//! "random".

use std::path::Path;

use anyhow::{anyhow, Context};
use atfg_core::agent::{Agent, PidAgent, PpoAgent, RandomAgent};
use atfg_core::config;
use atfg_core::env::TaskConfig;
use atfg_core::pidctl::MixerTable;
use atfg_core::ppo::ActorCritic;
use atfg_core::sensors::OBS_DIM;
use atfg_core::StackedState;

use crate::{fail, CliError, EXIT_CONFIG, EXIT_MISSING};

/// Enum dispatch over the supported agent kinds.
#[derive(Clone)]
pub enum AnyAgent {
    Pid(PidAgent),
    Ppo(PpoAgent),
    Random(RandomAgent),
}

impl Agent for AnyAgent {
    fn reset(&mut self, episode_seed: u64) {
        match self {
            AnyAgent::Pid(a) => a.reset(episode_seed),
            AnyAgent::Ppo(a) => a.reset(episode_seed),
            AnyAgent::Random(a) => a.reset(episode_seed),
        }
    }

    fn act(&mut self, state: &StackedState) -> [f64; 4] {
        match self {
            AnyAgent::Pid(a) => a.act(state),
            AnyAgent::Ppo(a) => a.act(state),
            AnyAgent::Random(a) => a.act(state),
        }
    }

    fn act_stochastic(&mut self, state: &StackedState) -> [f64; 4] {
        match self {
            AnyAgent::Pid(a) => a.act_stochastic(state),
            AnyAgent::Ppo(a) => a.act_stochastic(state),
            AnyAgent::Random(a) => a.act_stochastic(state),
        }
    }

    fn name(&self) -> &str {
        match self {
            AnyAgent::Pid(a) => a.name(),
            AnyAgent::Ppo(a) => a.name(),
            AnyAgent::Random(a) => a.name(),
        }
    }
}

/// Filesystem-safe label for per-agent output directories.
pub fn label(spec: &str) -> String {
    spec.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

pub fn parse(spec: &str, task: &TaskConfig) -> Result<AnyAgent, CliError> {
    let (kind, arg) = match spec.split_once(':') {
        Some((k, a)) => (k, Some(a)),
        None => (spec, None),
    };
    match kind {
        "pid" => {
            let (pid, mixer) = match arg {
                Some(path) => {
                    let path = Path::new(path);
                    if !path.exists() {
                        return Err(fail(
                            EXIT_MISSING,
                            anyhow!("controller config not found: {}", path.display()),
                        ));
                    }
                    let cfg = config::load_controller(path)
                        .map_err(|e| fail(EXIT_CONFIG, anyhow!(e)))?;
                    let mixer = cfg.mixer.table_wired().map_err(|e| fail(EXIT_CONFIG, anyhow!(e)))?;
                    (cfg.pid, mixer)
                }
                None => (atfg_core::PidConfig::baseline(), MixerTable::baseline_wired()),
            };
            let agent =
                PidAgent::new(pid, mixer, task.dt).map_err(|e| fail(EXIT_CONFIG, anyhow!(e)))?;
            Ok(AnyAgent::Pid(agent))
        }
        "ppo" => {
            let path = arg.ok_or_else(|| {
                fail(EXIT_CONFIG, anyhow!("ppo agent needs a checkpoint: ppo:<path>"))
            })?;
            let path = Path::new(path);
            if !path.exists() {
                return Err(fail(EXIT_MISSING, anyhow!("checkpoint not found: {}", path.display())));
            }
            let ac = ActorCritic::load(path)
                .with_context(|| format!("loading checkpoint {}", path.display()))
                .map_err(|e| fail(EXIT_CONFIG, e))?;
            if ac.obs_dim() != task.memory * OBS_DIM {
                return Err(fail(
                    EXIT_CONFIG,
                    anyhow!(
                        "checkpoint expects memory {} (observation size {}), task has memory {}",
                        ac.memory,
                        ac.obs_dim(),
                        task.memory
                    ),
                ));
            }
            Ok(AnyAgent::Ppo(PpoAgent::new(ac)))
        }
        "random" => Ok(AnyAgent::Random(RandomAgent::new(0))),
        other => Err(fail(
            EXIT_CONFIG,
            anyhow!("unknown agent spec '{other}' (expected pid, pid:<cfg>, ppo:<ckpt> or random)"),
        )),
    }
}
