//! Analytically constructed episode traces whose metric values have closed
//! forms.

use atfg_core::env::compute_reward;
use atfg_core::eval::EpisodeTrace;

fn build(
    setpoint: [f64; 3],
    dt: f64,
    steps: usize,
    f: impl Fn(f64) -> [f64; 3],
) -> EpisodeTrace {
    let mut t = EpisodeTrace::new(dt);
    for k in 0..steps {
        let time = k as f64 * dt;
        let omega = f(time);
        t.push(setpoint, omega, [0.0; 4], compute_reward(setpoint, omega, 5.24));
    }
    t
}

/// First-order approach to the setpoint from rest: Ω(t) = Ω*·(1 − e^{−t/τ}).
pub fn first_order_trace(setpoint: [f64; 3], tau: f64, dt: f64, steps: usize) -> EpisodeTrace {
    build(setpoint, dt, steps, |t| {
        std::array::from_fn(|a| setpoint[a] * (1.0 - (-t / tau).exp()))
    })
}

/// Linear ramp from rest reaching the setpoint at `t_reach`, holding after.
pub fn ramp_trace(setpoint: [f64; 3], t_reach: f64, dt: f64, steps: usize) -> EpisodeTrace {
    build(setpoint, dt, steps, |t| {
        let frac = (t / t_reach).min(1.0);
        std::array::from_fn(|a| setpoint[a] * frac)
    })
}

/// Constant rates for the whole episode.
pub fn constant_trace(setpoint: [f64; 3], omega: [f64; 3], dt: f64, steps: usize) -> EpisodeTrace {
    build(setpoint, dt, steps, |_| omega)
}

/// Setpoint reached after one sample and held exactly: the ideal teleport.
pub fn teleport_trace(setpoint: [f64; 3], dt: f64, steps: usize) -> EpisodeTrace {
    build(setpoint, dt, steps, |t| if t > 0.0 { setpoint } else { [0.0; 3] })
}

/// Oscillation of amplitude `amp` and frequency `freq_hz` around the
/// setpoint, phased as a cosine about `center_s` so a window of whole
/// periods symmetric about that time has zero regression slope.
pub fn sinusoid_trace(
    setpoint: [f64; 3],
    amp: f64,
    freq_hz: f64,
    center_s: f64,
    dt: f64,
    steps: usize,
) -> EpisodeTrace {
    build(setpoint, dt, steps, |t| {
        let w = 2.0 * std::f64::consts::PI * freq_hz;
        std::array::from_fn(|a| setpoint[a] + amp * (w * (t - center_s)).cos())
    })
}
