//! Step-response metrics over episode traces.
//!
//! All relative metrics are expressed against the initial error — the
//! distance from the rest rate to the setpoint at episode start. Progress 0
//! means no motion toward the setpoint, 1 means the setpoint is reached.
//! Metrics needing a steady-state window use the samples after
//! [`STEADY_STATE_CUTOFF`].

use serde::Serialize;

use crate::error::{Error, Result};

/// Rise region is assumed over by here; the steady-state window starts.
pub const STEADY_STATE_CUTOFF: f64 = 0.5;

/// Half-width of the success band around the setpoint, as a fraction of the
/// initial error.
pub const SUCCESS_BAND: f64 = 0.10;

pub const RISE_LOW_DEFAULT: f64 = 0.10;
pub const RISE_HIGH_DEFAULT: f64 = 0.90;

/// Time series of one episode. Row k describes step k: the setpoint in
/// force, the body rates *before* the step, the action applied, and the
/// reward received for the transition. All series share one length.
#[derive(Debug, Clone, Serialize)]
pub struct EpisodeTrace {
    pub dt: f64,
    pub setpoint: Vec<[f64; 3]>,
    pub omega: Vec<[f64; 3]>,
    pub action: Vec<[f64; 4]>,
    pub reward: Vec<f64>,
}

impl EpisodeTrace {
    pub fn new(dt: f64) -> Self {
        EpisodeTrace { dt, setpoint: Vec::new(), omega: Vec::new(), action: Vec::new(), reward: Vec::new() }
    }

    pub fn push(&mut self, setpoint: [f64; 3], omega: [f64; 3], action: [f64; 4], reward: f64) {
        self.setpoint.push(setpoint);
        self.omega.push(omega);
        self.action.push(action);
        self.reward.push(reward);
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// Time of row k.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// Time spanned by the trace.
    pub fn duration(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.time(self.len() - 1)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::Eval("empty trace".into()));
        }
        if [self.setpoint.len(), self.action.len(), self.reward.len()]
            .iter()
            .any(|l| *l != self.omega.len())
        {
            return Err(Error::Eval("trace series lengths disagree".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Eval(format!("trace dt must be > 0, got {}", self.dt)));
        }
        Ok(())
    }

    fn require_steady_window(&self) -> Result<()> {
        self.validate()?;
        if self.duration() <= STEADY_STATE_CUTOFF {
            return Err(Error::Eval(format!(
                "trace spans {:.3}s; steady-state metrics need more than {STEADY_STATE_CUTOFF}s",
                self.duration()
            )));
        }
        Ok(())
    }

    fn steady_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|k| self.time(*k) > STEADY_STATE_CUTOFF)
    }
}

/// |Ω*₀ − Ω₀| per axis: the normalizer for all relative metrics.
pub fn initial_error(trace: &EpisodeTrace) -> Result<[f64; 3]> {
    trace.validate()?;
    Ok(std::array::from_fn(|a| (trace.setpoint[0][a] - trace.omega[0][a]).abs()))
}

/// Signed fraction of the initial error corrected at row k.
fn progress(trace: &EpisodeTrace, axis: usize, k: usize) -> f64 {
    let start = trace.omega[0][axis];
    let target = trace.setpoint[0][axis];
    (trace.omega[k][axis] - start) / (target - start)
}

/// Per-axis success/failure outcome; `None` when the initial error is zero
/// and the relative definition does not apply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisOutcome {
    pub success: bool,
    /// Mean |error| after the cutoff relative to the initial error, percent.
    /// Only populated for failed axes.
    pub failure_pct: Option<f64>,
}

/// Success: every sample after the cutoff stays within ±10% of the setpoint,
/// measured relative to the initial error. Failure: for axes that do not,
/// the mean relative error after the cutoff, in percent.
pub fn success_and_failure(trace: &EpisodeTrace) -> Result<[Option<AxisOutcome>; 3]> {
    trace.require_steady_window()?;
    let init = initial_error(trace)?;
    let mut out = [None; 3];
    for axis in 0..3 {
        if init[axis] == 0.0 {
            continue;
        }
        let mut worst_ok = true;
        let mut err_sum = 0.0;
        let mut count = 0usize;
        for k in trace.steady_indices() {
            let err = (trace.setpoint[0][axis] - trace.omega[k][axis]).abs();
            if err > SUCCESS_BAND * init[axis] {
                worst_ok = false;
            }
            err_sum += err;
            count += 1;
        }
        let failure_pct =
            if worst_ok { None } else { Some(err_sum / count as f64 / init[axis] * 100.0) };
        out[axis] = Some(AxisOutcome { success: worst_ok, failure_pct });
    }
    Ok(out)
}

/// First-crossing rise time between the two progress fractions, in
/// milliseconds, linearly interpolated between samples. `None` when the
/// high fraction is never reached or the initial error is zero.
pub fn rise_time_ms(trace: &EpisodeTrace, low_frac: f64, high_frac: f64) -> Result<[Option<f64>; 3]> {
    trace.validate()?;
    if !(low_frac < high_frac) {
        return Err(Error::Eval(format!(
            "rise thresholds must satisfy low < high, got {low_frac} >= {high_frac}"
        )));
    }
    let init = initial_error(trace)?;
    let mut out = [None; 3];
    for axis in 0..3 {
        if init[axis] == 0.0 {
            continue;
        }
        let crossing = |threshold: f64| -> Option<f64> {
            let mut prev = progress(trace, axis, 0);
            if prev >= threshold {
                return Some(0.0);
            }
            for k in 1..trace.len() {
                let cur = progress(trace, axis, k);
                if cur >= threshold {
                    let frac = (threshold - prev) / (cur - prev);
                    return Some(trace.time(k - 1) + frac * trace.dt);
                }
                prev = cur;
            }
            None
        };
        if let (Some(t_low), Some(t_high)) = (crossing(low_frac), crossing(high_frac)) {
            out[axis] = Some((t_high - t_low) * 1000.0);
        }
    }
    Ok(out)
}

/// Maximum signed progress toward the setpoint, in percent. Values above
/// 100 are overshoot, below 100 undershoot. `None` when the initial error
/// is zero.
pub fn peak_pct(trace: &EpisodeTrace) -> Result<[Option<f64>; 3]> {
    trace.validate()?;
    let init = initial_error(trace)?;
    let mut out = [None; 3];
    for axis in 0..3 {
        if init[axis] == 0.0 {
            continue;
        }
        let peak = (0..trace.len())
            .map(|k| progress(trace, axis, k))
            .fold(f64::NEG_INFINITY, f64::max);
        out[axis] = Some(peak * 100.0);
    }
    Ok(out)
}

/// Σ_t |Ω*_t − Ω_t| per axis over the whole episode, rad/s.
pub fn total_error(trace: &EpisodeTrace) -> Result<[f64; 3]> {
    trace.validate()?;
    let mut out = [0.0; 3];
    for k in 0..trace.len() {
        for axis in 0..3 {
            out[axis] += (trace.setpoint[k][axis] - trace.omega[k][axis]).abs();
        }
    }
    Ok(out)
}

/// Ordinary least-squares slope of Ω(t) over the steady-state window,
/// rad/s per s. Unstable responses have a nonzero slope.
pub fn stability_slope(trace: &EpisodeTrace) -> Result<[f64; 3]> {
    trace.require_steady_window()?;
    let idx: Vec<usize> = trace.steady_indices().collect();
    if idx.len() < 2 {
        return Err(Error::Eval("stability needs at least 2 samples after the cutoff".into()));
    }
    let n = idx.len() as f64;
    let t_mean = idx.iter().map(|&k| trace.time(k)).sum::<f64>() / n;
    let mut out = [0.0; 3];
    for axis in 0..3 {
        let w_mean = idx.iter().map(|&k| trace.omega[k][axis]).sum::<f64>() / n;
        let mut num = 0.0;
        let mut den = 0.0;
        for &k in &idx {
            let dt = trace.time(k) - t_mean;
            num += dt * (trace.omega[k][axis] - w_mean);
            den += dt * dt;
        }
        out[axis] = num / den;
    }
    Ok(out)
}
