//! Per-axis discrete PID attitude controller and the motor-mixing stage.
//!
//! The discrete form is the textbook one: rectangle-rule integral with the
//! integral term clamped, derivative on the error. Mixing sums the axis
//! outputs through per-motor geometry coefficients and shifts the result
//! around a mid-range hover bias before clipping into [0, 1].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mid-range motor bias added before clipping; keeps all motors
/// bidirectionally authoritative on the attitude-only task.
pub const HOVER_BIAS: f64 = 0.5;

/// Per-axis PID gains and limits. Axis order is (roll, pitch, yaw).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidConfig {
    pub kp: [f64; 3],
    pub ki: [f64; 3],
    pub kd: [f64; 3],
    /// Clamp on the accumulated integral term, output units.
    pub integrator_limit: f64,
    /// Clamp on each axis output, normalized units.
    pub output_limit: f64,
    /// Controller period, s.
    pub dt: f64,
}

impl PidConfig {
    /// The ported baseline gain set:
    /// K_roll = [2, 10, 0.005], K_pitch = [10, 10, 0.005], K_yaw = [4, 50, 0].
    pub fn baseline() -> Self {
        PidConfig {
            kp: [2.0, 10.0, 4.0],
            ki: [10.0, 10.0, 50.0],
            kd: [0.005, 0.005, 0.0],
            integrator_limit: 1.0,
            output_limit: 1.0,
            dt: 1e-3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for axis in 0..3 {
            for (name, g) in [("kp", self.kp[axis]), ("ki", self.ki[axis]), ("kd", self.kd[axis])] {
                if !(g >= 0.0) || !g.is_finite() {
                    return Err(Error::Config(format!("{name}[{axis}] must be >= 0, got {g}")));
                }
            }
        }
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("pid dt must be > 0, got {}", self.dt)));
        }
        for (name, l) in [("integrator_limit", self.integrator_limit), ("output_limit", self.output_limit)] {
            if !(l > 0.0) {
                return Err(Error::Config(format!("{name} must be > 0, got {l}")));
            }
        }
        Ok(())
    }
}

impl Default for PidConfig {
    fn default() -> Self {
        Self::baseline()
    }
}

/// Controller state: accumulated integral term and previous error per axis.
#[derive(Debug, Clone)]
pub struct PidController {
    cfg: PidConfig,
    integral_term: [f64; 3],
    prev_error: [f64; 3],
}

impl PidController {
    pub fn new(cfg: PidConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(PidController { cfg, integral_term: [0.0; 3], prev_error: [0.0; 3] })
    }

    pub fn config(&self) -> &PidConfig {
        &self.cfg
    }

    pub fn reset(&mut self) {
        self.integral_term = [0.0; 3];
        self.prev_error = [0.0; 3];
    }

    /// One controller step: u = Kp·e + clamp(Ki·Σe·dt) + Kd·(e−e_prev)/dt
    /// per axis, with the final output clamped to ±output_limit.
    pub fn step(&mut self, error: [f64; 3], dt: f64) -> Result<[f64; 3]> {
        if !(dt > 0.0) {
            return Err(Error::Config(format!("pid step dt must be > 0, got {dt}")));
        }
        if error.iter().any(|e| !e.is_finite()) {
            return Err(Error::Env(format!("non-finite PID error {error:?}")));
        }
        let mut out = [0.0; 3];
        let lim = self.cfg.integrator_limit;
        for a in 0..3 {
            self.integral_term[a] =
                (self.integral_term[a] + self.cfg.ki[a] * error[a] * dt).clamp(-lim, lim);
            let deriv = (error[a] - self.prev_error[a]) / dt;
            self.prev_error[a] = error[a];
            out[a] = (self.cfg.kp[a] * error[a] + self.integral_term[a] + self.cfg.kd[a] * deriv)
                .clamp(-self.cfg.output_limit, self.cfg.output_limit);
        }
        Ok(out)
    }
}

/// Per-motor mixing coefficients: row i holds [m_roll, m_pitch, m_yaw] for
/// motor i, plus the throttle coefficient f.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixerTable {
    pub rows: [[f64; 3]; 4],
    pub throttle_coeff: f64,
}

impl MixerTable {
    /// The ported baseline mixer rows, in firmware motor order.
    pub fn baseline_rows() -> [[f64; 3]; 4] {
        [
            [-1.0, 0.598, -1.0],
            [-0.927, -0.598, 1.0],
            [1.0, 0.598, 1.0],
            [0.927, -0.598, -1.0],
        ]
    }

    /// Firmware-to-plant motor wiring for the baseline table: plant motor i
    /// is driven by firmware output `BASELINE_MOTOR_ORDER[i]` (1-based).
    /// The firmware numbers its motors rear-right, front-right, rear-left,
    /// front-left; the plant numbers them front-right, rear-right,
    /// front-left, rear-left, so the pairs swap.
    pub const BASELINE_MOTOR_ORDER: [usize; 4] = [2, 1, 4, 3];

    /// Baseline mixer with rows already wired to plant motor channels.
    pub fn baseline_wired() -> Self {
        MixerTable { rows: Self::baseline_rows(), throttle_coeff: 1.0 }
            .reordered(Self::BASELINE_MOTOR_ORDER)
            .unwrap()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() || v.abs() > 1.0 + 1e-9 {
                    return Err(Error::Config(format!(
                        "mixer entry m{}[{j}] out of normalized range: {v}",
                        i + 1
                    )));
                }
            }
        }
        if !(self.throttle_coeff >= 0.0) || !self.throttle_coeff.is_finite() {
            return Err(Error::Config(format!(
                "throttle_coeff must be >= 0, got {}",
                self.throttle_coeff
            )));
        }
        Ok(())
    }

    /// Re-wire rows onto plant motor channels: output row i of the result is
    /// row `order[i]` (1-based) of this table.
    pub fn reordered(&self, order: [usize; 4]) -> Result<Self> {
        let mut seen = [false; 4];
        for &o in &order {
            if !(1..=4).contains(&o) || seen[o - 1] {
                return Err(Error::Config(format!("motor_order must be a permutation of 1..4, got {order:?}")));
            }
            seen[o - 1] = true;
        }
        let mut rows = [[0.0; 3]; 4];
        for i in 0..4 {
            rows[i] = self.rows[order[i] - 1];
        }
        Ok(MixerTable { rows, throttle_coeff: self.throttle_coeff })
    }
}

impl Default for MixerTable {
    fn default() -> Self {
        Self::baseline_wired()
    }
}

/// Pre-bias motor contributions: y_i = f·(m_roll·u_roll + m_pitch·u_pitch + m_yaw·u_yaw).
pub fn mix_contributions(axis_outputs: [f64; 3], table: &MixerTable) -> [f64; 4] {
    let mut y = [0.0; 4];
    for i in 0..4 {
        y[i] = table.throttle_coeff
            * (table.rows[i][0] * axis_outputs[0]
                + table.rows[i][1] * axis_outputs[1]
                + table.rows[i][2] * axis_outputs[2]);
    }
    y
}

/// Motor signals in [0, 1]: contributions shifted around the hover bias and clipped.
pub fn mix(axis_outputs: [f64; 3], table: &MixerTable) -> [f64; 4] {
    mix_contributions(axis_outputs, table).map(|y| (HOVER_BIAS + y).clamp(0.0, 1.0))
}

/// Classic Ziegler-Nichols PID row from the ultimate gain and period:
/// Kp = 0.6·Ku, Ki = 1.2·Ku/Tu, Kd = 0.075·Ku·Tu, applied to every axis.
/// Manual per-axis refinement is left to the operator.
pub fn ziegler_nichols(ku: f64, tu: f64) -> Result<PidConfig> {
    if !(ku > 0.0) || !(tu > 0.0) {
        return Err(Error::Config(format!("ziegler_nichols requires ku > 0 and tu > 0, got ku={ku}, tu={tu}")));
    }
    let kp = 0.6 * ku;
    let ki = 1.2 * ku / tu;
    let kd = 0.075 * ku * tu;
    Ok(PidConfig {
        kp: [kp; 3],
        ki: [ki; 3],
        kd: [kd; 3],
        ..PidConfig::baseline()
    })
}
