//! Fixed-pivot rigid-body rotational dynamics of a quadrotor with a
//! first-order rotor model.
//!
//! The airframe's center of mass is pinned to the world (ball-joint world),
//! so only the three rotational degrees of freedom evolve. Each rotor relaxes
//! toward its commanded speed through a first-order lag; thrust and the
//! per-axis effects are quadratic in rotor speed:
//!
//! ```text
//! u_f   = b (w1² + w2² + w3² + w4²)
//! u_phi = b (w1² + w2² - w3² - w4²)
//! u_the = b (w1² - w2² + w3² - w4²)
//! u_psi = b (w1² - w2² - w3² + w4²)
//! ```
//!
//! Motor layout (top view, nose up), with spin directions chosen so the
//! u_psi pattern above is the reaction-torque pair split:
//!
//! ```text
//!   3 (front-left, CW)    1 (front-right, CCW)
//!                    \    /
//!                     \  /
//!                     /  \
//!                    /    \
//!   4 (rear-left, CCW)     2 (rear-right, CW)
//! ```
//!
//! Body rate axes are oriented so that raising motors 3 and 4 produces a
//! positive roll rate, raising motors 2 and 4 a positive pitch rate, and
//! raising motors 1 and 4 a positive yaw rate. With the index patterns
//! above this fixes the axis orientation signs to (-1, -1, +1); see
//! [`AXIS_SIGN`].

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default physics tick, seconds.
pub const DEFAULT_DT: f64 = 1e-3;

/// Orientation of the body rate axes relative to the raw quadratic effects.
/// Frozen by the motor-pair sign convention in the module docs; tests pin it.
pub const AXIS_SIGN: [f64; 3] = [-1.0, -1.0, 1.0];

/// Physical parameters of the simulated quadrotor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AircraftConfig {
    /// Airframe mass, kg.
    pub mass: f64,
    /// Diagonal motor-to-motor distance, m.
    pub motor_to_motor: f64,
    /// Principal moments of inertia about the body axes, kg·m².
    pub inertia_diag: [f64; 3],
    /// Thrust factor b, N·s²/rad²: thrust per squared rotor speed.
    pub thrust_factor_b: f64,
    /// Rotor drag factor d, N·m·s²/rad²: yaw reaction torque per squared rotor speed.
    pub drag_factor_d: f64,
    /// Rotor speed at full command, rad/s.
    pub rotor_omega_max: f64,
    /// First-order rotor lag time constant, s.
    pub motor_time_constant: f64,
    /// Rotational damping applied to each body axis, N·m·s/rad.
    pub rotational_damping: f64,
}

impl AircraftConfig {
    /// Point-mass-arms inertia model: the four motors are treated as point
    /// masses of m/6 each at arm length L = motor_to_motor/2, giving
    /// Jx = Jy = 4·(m/6)·L² and Jz = 2·Jx.
    pub fn point_arm_inertia(mass: f64, motor_to_motor: f64) -> [f64; 3] {
        let arm = motor_to_motor / 2.0;
        let jxy = 4.0 * (mass / 6.0) * arm * arm;
        [jxy, jxy, 2.0 * jxy]
    }

    /// Default desk-scale plant: Iris-class mass and geometry, point-arm
    /// inertia, and actuator factors sized so every axis can track the
    /// ±5.24 rad/s task envelope (see `configs/iris.cfg`).
    pub fn iris() -> Self {
        AircraftConfig {
            mass: 1.5,
            motor_to_motor: 0.55,
            inertia_diag: [0.075625, 0.075625, 0.15125],
            thrust_factor_b: 1.8e-5,
            drag_factor_d: 3.6e-6,
            rotor_omega_max: 1100.0,
            motor_time_constant: 0.05,
            rotational_damping: 0.002,
        }
    }

    /// Roll/pitch torque arm: the X-frame projection of the half
    /// motor-to-motor distance onto a body axis.
    pub fn arm_projection(&self) -> f64 {
        self.motor_to_motor / 2.0 * std::f64::consts::FRAC_1_SQRT_2
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("motor_to_motor", self.motor_to_motor),
            ("thrust_factor_b", self.thrust_factor_b),
            ("drag_factor_d", self.drag_factor_d),
            ("rotor_omega_max", self.rotor_omega_max),
            ("motor_time_constant", self.motor_time_constant),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        for (i, j) in self.inertia_diag.iter().enumerate() {
            if !(*j > 0.0) || !j.is_finite() {
                return Err(Error::Config(format!("inertia_diag[{i}] must be > 0, got {j}")));
            }
        }
        if !(self.rotational_damping >= 0.0) || !self.rotational_damping.is_finite() {
            return Err(Error::Config(format!(
                "rotational_damping must be >= 0, got {}",
                self.rotational_damping
            )));
        }
        Ok(())
    }
}

impl Default for AircraftConfig {
    fn default() -> Self {
        Self::iris()
    }
}

/// Rotational body state plus rotor speeds at one simulation instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    /// Physics steps taken since reset.
    pub steps: u64,
    /// Simulation time, s. Reconstructed as steps·dt so lock-step time is exact.
    pub time: f64,
    /// Body angular velocity (roll, pitch, yaw rates), rad/s.
    pub omega_body: Vector3<f64>,
    /// Body-to-world orientation.
    pub orientation: UnitQuaternion<f64>,
    /// Rotor angular velocities, rad/s.
    pub rotor_omega: [f64; 4],
    /// Last normalized motor command, after clipping to [0, 1].
    pub last_command: [f64; 4],
}

impl SimState {
    fn is_finite(&self) -> bool {
        self.time.is_finite()
            && self.omega_body.iter().all(|v| v.is_finite())
            && self.orientation.coords.iter().all(|v| v.is_finite())
            && self.rotor_omega.iter().all(|v| v.is_finite())
    }
}

/// The four quadratic rotor effects: total thrust and the per-axis sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotorEffects {
    /// Thrust effect, N.
    pub u_f: f64,
    /// Roll effect (index pattern +,+,-,-).
    pub u_phi: f64,
    /// Pitch effect (index pattern +,-,+,-).
    pub u_theta: f64,
    /// Yaw effect (index pattern +,-,-,+).
    pub u_psi: f64,
}

fn effects_from_squares(sq: &[f64; 4], b: f64) -> RotorEffects {
    RotorEffects {
        u_f: b * (sq[0] + sq[1] + sq[2] + sq[3]),
        u_phi: b * (sq[0] + sq[1] - sq[2] - sq[3]),
        u_theta: b * (sq[0] - sq[1] + sq[2] - sq[3]),
        u_psi: b * (sq[0] - sq[1] - sq[2] + sq[3]),
    }
}

/// Evaluate the four quadratic effect sums for the given rotor speeds.
pub fn rotor_effects(rotor_omega: [f64; 4], b: f64) -> RotorEffects {
    let sq = rotor_omega.map(|w| w * w);
    effects_from_squares(&sq, b)
}

/// Map effects to body torques: roll and pitch through the arm projection,
/// yaw through the drag-to-thrust ratio, each oriented by [`AXIS_SIGN`],
/// minus per-axis rotational damping.
pub fn body_torques(
    effects: &RotorEffects,
    cfg: &AircraftConfig,
    omega_body: &Vector3<f64>,
) -> Vector3<f64> {
    let arm = cfg.arm_projection();
    let yaw_ratio = cfg.drag_factor_d / cfg.thrust_factor_b;
    let c = cfg.rotational_damping;
    Vector3::new(
        AXIS_SIGN[0] * arm * effects.u_phi - c * omega_body.x,
        AXIS_SIGN[1] * arm * effects.u_theta - c * omega_body.y,
        AXIS_SIGN[2] * yaw_ratio * effects.u_psi - c * omega_body.z,
    )
}

/// State at rest: zero rates, identity orientation, rotors stopped.
pub fn reset_state(_cfg: &AircraftConfig) -> SimState {
    SimState {
        steps: 0,
        time: 0.0,
        omega_body: Vector3::zeros(),
        orientation: UnitQuaternion::identity(),
        rotor_omega: [0.0; 4],
        last_command: [0.0; 4],
    }
}

/// Advance the plant by one tick of `dt` seconds under the given normalized
/// motor command (clipped to [0, 1]).
///
/// Rotor speeds follow the exact solution of the first-order lag over the
/// step, and the torque uses the exact step average of the squared rotor
/// speeds, so the actuator transient adds no integration error. Body rates
/// take one semi-implicit Euler step of J·dΩ/dt = τ − Ω×(JΩ) with the
/// damping term folded in implicitly, and the orientation then advances
/// with the updated rate.
pub fn step(
    state: &SimState,
    motor_cmd: [f64; 4],
    cfg: &AircraftConfig,
    dt: f64,
) -> Result<SimState> {
    if !(dt > 0.0) {
        return Err(Error::Config(format!("dt must be > 0, got {dt}")));
    }
    if !state.is_finite() {
        return Err(Error::Diverged("non-finite simulation state".into()));
    }
    if motor_cmd.iter().any(|c| !c.is_finite()) {
        return Err(Error::Diverged(format!("non-finite motor command {motor_cmd:?}")));
    }
    let cmd = motor_cmd.map(|c| c.clamp(0.0, 1.0));

    let tau = cfg.motor_time_constant;
    let decay = (-dt / tau).exp();
    // Step average of w(s)² for w(s) = target + dev·e^(−s/τ).
    let k1 = tau / dt * (1.0 - decay);
    let k2 = tau / (2.0 * dt) * (1.0 - decay * decay);
    let mut rotor_next = [0.0; 4];
    let mut mean_sq = [0.0; 4];
    for i in 0..4 {
        let target = cmd[i] * cfg.rotor_omega_max;
        let dev = state.rotor_omega[i] - target;
        rotor_next[i] = target + dev * decay;
        mean_sq[i] = target * target + 2.0 * target * dev * k1 + dev * dev * k2;
    }

    let effects = effects_from_squares(&mean_sq, cfg.thrust_factor_b);
    let torque = body_torques(&effects, cfg, &Vector3::zeros());
    let inertia = Vector3::from(cfg.inertia_diag);
    let gyro_at = |omega: &Vector3<f64>| omega.cross(&inertia.component_mul(omega));

    // The gyroscopic term is evaluated at a half-step predictor; at 1 ms
    // ticks the plain explicit evaluation misses the RK4 oracle tolerance
    // on fast multi-axis profiles.
    let gyro0 = gyro_at(&state.omega_body);
    let mut omega_mid = state.omega_body;
    for a in 0..3 {
        omega_mid[a] += 0.5 * dt * (torque[a] - gyro0[a] - cfg.rotational_damping * state.omega_body[a])
            / inertia[a];
    }
    let gyro = gyro_at(&omega_mid);

    let mut omega_next = Vector3::zeros();
    for a in 0..3 {
        let accel = (torque[a] - gyro[a]) / inertia[a];
        // damping handled implicitly: (1 + dt·c/J) divisor
        omega_next[a] = (state.omega_body[a] + dt * accel)
            / (1.0 + dt * cfg.rotational_damping / inertia[a]);
    }

    let dq = UnitQuaternion::from_scaled_axis(omega_next * dt);
    let mut orientation = state.orientation * dq;
    orientation.renormalize();

    let steps = state.steps + 1;
    let next = SimState {
        steps,
        time: steps as f64 * dt,
        omega_body: omega_next,
        orientation,
        rotor_omega: rotor_next,
        last_command: cmd,
    };
    if !next.is_finite() {
        return Err(Error::Diverged(format!("state diverged at t={}", next.time)));
    }
    Ok(next)
}
