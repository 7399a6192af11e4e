//! Classic fixed-step RK4 integration of the full rotational model,
//! written independently of the production integrator (plain arrays, its
//! own effect sums and torque mapping).

use atfg_core::dynamics::AircraftConfig;

/// Continuous-time state: body rates then rotor speeds.
#[derive(Clone, Copy)]
struct State {
    omega: [f64; 3],
    rotor: [f64; 4],
}

fn derivative(s: &State, target: &[f64; 4], cfg: &AircraftConfig) -> State {
    // first-order rotor lag
    let mut rotor_dot = [0.0; 4];
    for i in 0..4 {
        rotor_dot[i] = (target[i] - s.rotor[i]) / cfg.motor_time_constant;
    }

    // quadratic effects, axis orientation (-1, -1, +1), arm/drag mapping
    let sq: Vec<f64> = s.rotor.iter().map(|w| w * w).collect();
    let b = cfg.thrust_factor_b;
    let u_phi = b * (sq[0] + sq[1] - sq[2] - sq[3]);
    let u_theta = b * (sq[0] - sq[1] + sq[2] - sq[3]);
    let u_psi = b * (sq[0] - sq[1] - sq[2] + sq[3]);
    let arm = cfg.motor_to_motor / 2.0 * (0.5f64).sqrt();
    let torque = [
        -arm * u_phi - cfg.rotational_damping * s.omega[0],
        -arm * u_theta - cfg.rotational_damping * s.omega[1],
        cfg.drag_factor_d / cfg.thrust_factor_b * u_psi - cfg.rotational_damping * s.omega[2],
    ];

    // Euler's equations with diagonal inertia: J·dw/dt = τ − w×(Jw)
    let j = cfg.inertia_diag;
    let gyro = [
        s.omega[1] * j[2] * s.omega[2] - s.omega[2] * j[1] * s.omega[1],
        s.omega[2] * j[0] * s.omega[0] - s.omega[0] * j[2] * s.omega[2],
        s.omega[0] * j[1] * s.omega[1] - s.omega[1] * j[0] * s.omega[0],
    ];
    let mut omega_dot = [0.0; 3];
    for a in 0..3 {
        omega_dot[a] = (torque[a] - gyro[a]) / j[a];
    }
    State { omega: omega_dot, rotor: rotor_dot }
}

fn add_scaled(s: &State, d: &State, h: f64) -> State {
    State {
        omega: std::array::from_fn(|a| s.omega[a] + h * d.omega[a]),
        rotor: std::array::from_fn(|i| s.rotor[i] + h * d.rotor[i]),
    }
}

/// Integrate the command schedule from rest. Each command is held for
/// `dt_command` seconds and integrated with `substeps` RK4 steps; the body
/// rates after each command interval are returned.
pub fn rk4_reference(
    cfg: &AircraftConfig,
    commands: &[[f64; 4]],
    dt_command: f64,
    substeps: usize,
) -> Vec<[f64; 3]> {
    let mut s = State { omega: [0.0; 3], rotor: [0.0; 4] };
    let h = dt_command / substeps as f64;
    let mut out = Vec::with_capacity(commands.len());
    for cmd in commands {
        let target: [f64; 4] = std::array::from_fn(|i| cmd[i].clamp(0.0, 1.0) * cfg.rotor_omega_max);
        for _ in 0..substeps {
            let k1 = derivative(&s, &target, cfg);
            let k2 = derivative(&add_scaled(&s, &k1, h / 2.0), &target, cfg);
            let k3 = derivative(&add_scaled(&s, &k2, h / 2.0), &target, cfg);
            let k4 = derivative(&add_scaled(&s, &k3, h), &target, cfg);
            s = State {
                omega: std::array::from_fn(|a| {
                    s.omega[a]
                        + h / 6.0
                            * (k1.omega[a] + 2.0 * k2.omega[a] + 2.0 * k3.omega[a] + k4.omega[a])
                }),
                rotor: std::array::from_fn(|i| {
                    s.rotor[i]
                        + h / 6.0
                            * (k1.rotor[i] + 2.0 * k2.rotor[i] + 2.0 * k3.rotor[i] + k4.rotor[i])
                }),
            };
        }
        out.push(s.omega);
    }
    out
}
