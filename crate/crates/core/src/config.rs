//! Config file loading and the shipped defaults.
//!
//! All config files are TOML-style `key = value` text with documented keys;
//! the canonical copies live in `configs/` at the repository root and can be
//! re-emitted anywhere with `scaffold`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::AircraftConfig;
use crate::env::TaskConfig;
use crate::error::{Error, Result};
use crate::pidctl::{MixerTable, PidConfig};
use crate::ppo::TrainConfig;

pub const DEFAULT_AIRCRAFT_CFG: &str = include_str!("../../../configs/iris.cfg");
pub const DEFAULT_CONTROLLER_CFG: &str = include_str!("../../../configs/betaflight_port.cfg");
pub const TUNED_CONTROLLER_CFG: &str = include_str!("../../../configs/pid_tuned.cfg");
pub const DEFAULT_TASK_EPISODIC_CFG: &str = include_str!("../../../configs/task_episodic.cfg");
pub const DEFAULT_TASK_CONTINUOUS_CFG: &str = include_str!("../../../configs/task_continuous.cfg");
pub const DEFAULT_TRAIN_CFG: &str = include_str!("../../../configs/train_desk.cfg");

fn parse<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Config(format!("{what}: {e}")))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

/// Mixer section of a controller file: verbatim rows plus the wiring of
/// firmware outputs onto plant motor channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixerConfig {
    pub throttle_coeff: f64,
    pub m1: [f64; 3],
    pub m2: [f64; 3],
    pub m3: [f64; 3],
    pub m4: [f64; 3],
    /// Plant motor i is driven by firmware output `motor_order[i]` (1-based).
    #[serde(default = "default_motor_order")]
    pub motor_order: [usize; 4],
}

fn default_motor_order() -> [usize; 4] {
    MixerTable::BASELINE_MOTOR_ORDER
}

impl MixerConfig {
    /// The rows exactly as configured, in firmware motor order.
    pub fn table_verbatim(&self) -> MixerTable {
        MixerTable {
            rows: [self.m1, self.m2, self.m3, self.m4],
            throttle_coeff: self.throttle_coeff,
        }
    }

    /// The table wired onto plant motor channels.
    pub fn table_wired(&self) -> Result<MixerTable> {
        let t = self.table_verbatim();
        t.validate()?;
        t.reordered(self.motor_order)
    }
}

/// A controller config file: per-axis PID gains plus the mixer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    pub pid: PidConfig,
    pub mixer: MixerConfig,
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        self.pid.validate()?;
        self.mixer.table_wired()?;
        Ok(())
    }
}

pub fn load_aircraft(path: &Path) -> Result<AircraftConfig> {
    let cfg: AircraftConfig = parse(&read(path)?, "aircraft config")?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_controller(path: &Path) -> Result<ControllerConfig> {
    let cfg: ControllerConfig = parse(&read(path)?, "controller config")?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_task(path: &Path) -> Result<TaskConfig> {
    let cfg: TaskConfig = parse(&read(path)?, "task config")?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_train(path: &Path) -> Result<TrainConfig> {
    let cfg: TrainConfig = parse(&read(path)?, "train config")?;
    cfg.validate()?;
    Ok(cfg)
}

/// Write the shipped default config files into `dir`; returns the paths.
pub fn scaffold(dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let files = [
        ("iris.cfg", DEFAULT_AIRCRAFT_CFG),
        ("betaflight_port.cfg", DEFAULT_CONTROLLER_CFG),
        ("pid_tuned.cfg", TUNED_CONTROLLER_CFG),
        ("task_episodic.cfg", DEFAULT_TASK_EPISODIC_CFG),
        ("task_continuous.cfg", DEFAULT_TASK_CONTINUOUS_CFG),
        ("train_desk.cfg", DEFAULT_TRAIN_CFG),
    ];
    let mut out = Vec::new();
    for (name, text) in files {
        let path = dir.join(name);
        std::fs::write(&path, text)?;
        out.push(path);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_aircraft_parses_and_matches_builtin_default() {
        let cfg: AircraftConfig = parse(DEFAULT_AIRCRAFT_CFG, "aircraft").unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg, AircraftConfig::iris());
        let derived = AircraftConfig::point_arm_inertia(1.5, 0.55);
        for a in 0..3 {
            assert!((cfg.inertia_diag[a] - derived[a]).abs() < 1e-15);
        }
        assert!((cfg.drag_factor_d / cfg.thrust_factor_b - 0.2).abs() < 1e-12);
    }

    #[test]
    fn shipped_controller_carries_the_baseline_verbatim() {
        let cfg: ControllerConfig = parse(DEFAULT_CONTROLLER_CFG, "controller").unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.pid.kp, [2.0, 10.0, 4.0]);
        assert_eq!(cfg.pid.ki, [10.0, 10.0, 50.0]);
        assert_eq!(cfg.pid.kd, [0.005, 0.005, 0.0]);
        assert_eq!(cfg.mixer.m1, [-1.0, 0.598, -1.0]);
        assert_eq!(cfg.mixer.m2, [-0.927, -0.598, 1.0]);
        assert_eq!(cfg.mixer.m3, [1.0, 0.598, 1.0]);
        assert_eq!(cfg.mixer.m4, [0.927, -0.598, -1.0]);
        assert_eq!(cfg.mixer.throttle_coeff, 1.0);
        assert_eq!(cfg.mixer.table_verbatim().rows, MixerTable::baseline_rows());
        assert_eq!(cfg.mixer.table_wired().unwrap(), MixerTable::baseline_wired());
    }

    #[test]
    fn tuned_controller_parses_and_keeps_the_baseline_mixer() {
        let cfg: ControllerConfig = parse(TUNED_CONTROLLER_CFG, "controller").unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.mixer.table_verbatim().rows, MixerTable::baseline_rows());
        assert_eq!(cfg.mixer.motor_order, MixerTable::BASELINE_MOTOR_ORDER);
    }

    #[test]
    fn shipped_tasks_parse() {
        let t: TaskConfig = parse(DEFAULT_TASK_EPISODIC_CFG, "task").unwrap();
        t.validate().unwrap();
        assert_eq!(t.omega_max, 5.24);
        assert_eq!(t.episode_steps(), 1000);
        let c: TaskConfig = parse(DEFAULT_TASK_CONTINUOUS_CFG, "task").unwrap();
        c.validate().unwrap();
        assert_eq!(c.mode, crate::env::TaskMode::Continuous);
    }

    #[test]
    fn shipped_train_cfg_parses_to_the_defaults() {
        let t: TrainConfig = parse(DEFAULT_TRAIN_CFG, "train").unwrap();
        t.validate().unwrap();
        assert_eq!(t, TrainConfig::default());
    }

    #[test]
    fn bad_config_errors_name_the_key() {
        let err = parse::<AircraftConfig>("mass = \"heavy\"", "aircraft").unwrap_err();
        assert!(err.to_string().contains("mass"), "{err}");
        let err = parse::<TaskConfig>("mode = \"episodic\"\nomega_max = \"x\"", "task").unwrap_err();
        assert!(err.to_string().contains("omega_max"), "{err}");
    }

    #[test]
    fn scaffold_writes_all_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let files = scaffold(dir.path()).unwrap();
        assert_eq!(files.len(), 6);
        for f in files {
            assert!(f.exists());
        }
        load_aircraft(&dir.path().join("iris.cfg")).unwrap();
        load_controller(&dir.path().join("betaflight_port.cfg")).unwrap();
        load_task(&dir.path().join("task_episodic.cfg")).unwrap();
        load_train(&dir.path().join("train_desk.cfg")).unwrap();
    }
}
