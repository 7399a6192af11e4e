//! Episode runner and the metric analysis suite with confidence intervals.
//!
//! Episodes evaluate independently (in parallel by default); aggregation is
//! a single-owner reduce over the per-episode metrics, so results do not
//! depend on scheduling.

pub mod metrics;
pub mod report;
pub mod trace;

pub use metrics::{
    initial_error, peak_pct, rise_time_ms, stability_slope, success_and_failure, total_error,
    AxisOutcome, EpisodeTrace, RISE_HIGH_DEFAULT, RISE_LOW_DEFAULT, STEADY_STATE_CUTOFF,
    SUCCESS_BAND,
};
pub use report::{render_comparison, render_table, report_to_json};
pub use trace::{write_trace_csv, TRACE_HEADER};

use std::path::PathBuf;

use serde::Serialize;

use crate::agent::Agent;
use crate::dynamics::AircraftConfig;
use crate::env::{Env, TaskConfig};
use crate::error::{Error, Result};
use crate::exec;
use crate::seed;

/// Evaluation options. `seed` drives the per-episode setpoint streams.
#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub episodes: usize,
    pub seed: u64,
    /// Write one trace CSV per episode (plus a JSONL summary) here.
    pub trace_dir: Option<PathBuf>,
    /// Force the sequential path (used by benchmarks; results are identical).
    pub sequential: bool,
    pub rise_low: f64,
    pub rise_high: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            episodes: 1000,
            seed: 0,
            trace_dir: None,
            sequential: false,
            rise_low: RISE_LOW_DEFAULT,
            rise_high: RISE_HIGH_DEFAULT,
        }
    }
}

/// All metrics of one evaluated episode. `None` marks metrics whose
/// relative definition did not apply (zero initial error, threshold never
/// reached); they are excluded from averages and counted instead.
#[derive(Debug, Clone, Serialize)]
pub struct EpisodeMetrics {
    pub episode: usize,
    pub seed: u64,
    pub setpoint: [f64; 3],
    pub initial_error: [f64; 3],
    pub success: [Option<bool>; 3],
    pub failure_pct: [Option<f64>; 3],
    pub rise_ms: [Option<f64>; 3],
    pub peak_pct: [Option<f64>; 3],
    pub total_error: [f64; 3],
    pub stability: [f64; 3],
    pub mean_reward: f64,
}

/// Mean with a 95% normal-approximation half-width (1.96·s/√n) and the
/// number of episodes that defined the metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricStat {
    pub mean: f64,
    pub half_width: f64,
    pub defined: usize,
}

impl MetricStat {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return MetricStat { mean: 0.0, half_width: 0.0, defined: 0 };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return MetricStat { mean, half_width: 0.0, defined: 1 };
        }
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
        MetricStat { mean, half_width: 1.96 * (var / n as f64).sqrt(), defined: n }
    }
}

/// Aggregated per-axis metrics.
#[derive(Debug, Clone, Serialize)]
pub struct AxisReport {
    /// Success rate in percent over episodes where the metric is defined.
    pub success_pct: MetricStat,
    /// Mean relative error of failed episodes, percent.
    pub failure_pct: MetricStat,
    pub rise_ms: MetricStat,
    pub peak_pct: MetricStat,
    pub error_rad_s: MetricStat,
    pub stability: MetricStat,
}

/// Full evaluation report, machine-readable.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub agent: String,
    pub episodes: usize,
    /// Axis order: roll, pitch, yaw.
    pub axes: [AxisReport; 3],
    pub mean_reward: MetricStat,
}

/// Run one seeded episode and collect its trace. Row k of the trace holds
/// the setpoint and pre-step rates of step k together with the action taken
/// and the reward received.
pub fn run_episode<A: Agent>(
    agent: &mut A,
    task: &TaskConfig,
    aircraft: &AircraftConfig,
    episode_seed: u64,
) -> Result<EpisodeTrace> {
    let t = task.with_seed(episode_seed);
    let mut env = Env::local(&t, aircraft)?;
    let mut res = env.reset()?;
    agent.reset(episode_seed);
    let mut trace = EpisodeTrace::new(t.dt);
    let steps = t.episode_steps();
    for _ in 0..steps {
        let setpoint_before = env.setpoint();
        let omega_before = res.info.omega;
        let action = agent.act(&res.state);
        let next = env.step(action)?;
        trace.push(setpoint_before, omega_before, action, next.reward);
        let done = next.done;
        res = next;
        if done {
            break;
        }
    }
    Ok(trace)
}

/// Compute the full per-episode metric set from a trace.
pub fn trace_metrics(
    episode: usize,
    episode_seed: u64,
    trace: &EpisodeTrace,
    rise_low: f64,
    rise_high: f64,
) -> Result<EpisodeMetrics> {
    let outcome = success_and_failure(trace)?;
    Ok(EpisodeMetrics {
        episode,
        seed: episode_seed,
        setpoint: trace.setpoint[0],
        initial_error: initial_error(trace)?,
        success: outcome.map(|o| o.map(|x| x.success)),
        failure_pct: outcome.map(|o| o.and_then(|x| x.failure_pct)),
        rise_ms: rise_time_ms(trace, rise_low, rise_high)?,
        peak_pct: peak_pct(trace)?,
        total_error: total_error(trace)?,
        stability: stability_slope(trace)?,
        mean_reward: trace.reward.iter().sum::<f64>() / trace.len() as f64,
    })
}

/// Aggregate per-episode metrics into the report. Undefined episodes are
/// excluded from the affected averages; their counts show up through the
/// `defined` fields.
pub fn aggregate(agent: &str, episodes: &[EpisodeMetrics]) -> Result<MetricsReport> {
    if episodes.is_empty() {
        return Err(Error::Eval("no episodes to aggregate".into()));
    }
    let axes = std::array::from_fn(|a| {
        let collect = |f: &dyn Fn(&EpisodeMetrics) -> Option<f64>| -> Vec<f64> {
            episodes.iter().filter_map(f).collect()
        };
        AxisReport {
            success_pct: MetricStat::from_values(&collect(&|e| {
                e.success[a].map(|s| if s { 100.0 } else { 0.0 })
            })),
            failure_pct: MetricStat::from_values(&collect(&|e| e.failure_pct[a])),
            rise_ms: MetricStat::from_values(&collect(&|e| e.rise_ms[a])),
            peak_pct: MetricStat::from_values(&collect(&|e| e.peak_pct[a])),
            error_rad_s: MetricStat::from_values(&collect(&|e| Some(e.total_error[a]))),
            stability: MetricStat::from_values(&collect(&|e| Some(e.stability[a]))),
        }
    });
    let rewards: Vec<f64> = episodes.iter().map(|e| e.mean_reward).collect();
    Ok(MetricsReport {
        agent: agent.to_string(),
        episodes: episodes.len(),
        axes,
        mean_reward: MetricStat::from_values(&rewards),
    })
}

/// Everything `evaluate` produces.
pub struct EvalOutcome {
    pub report: MetricsReport,
    pub episodes: Vec<EpisodeMetrics>,
}

/// Evaluate an agent over seeded episodes and aggregate the metric suite.
/// Episode i runs with seed `derive(opts.seed, i)`, so any two agents
/// evaluated with the same options see identical setpoints.
pub fn evaluate<A>(
    agent: &A,
    task: &TaskConfig,
    aircraft: &AircraftConfig,
    opts: &EvalOptions,
) -> Result<EvalOutcome>
where
    A: Agent + Clone + Sync,
{
    if opts.episodes == 0 {
        return Err(Error::Eval("evaluation needs at least one episode".into()));
    }
    task.validate()?;
    let run_one = |i: usize| -> Result<EpisodeMetrics> {
        let episode_seed = seed::derive(opts.seed, i as u64);
        let mut a = agent.clone();
        let trace = run_episode(&mut a, task, aircraft, episode_seed)?;
        let m = trace_metrics(i, episode_seed, &trace, opts.rise_low, opts.rise_high)?;
        if let Some(dir) = &opts.trace_dir {
            write_trace_csv(&trace, &dir.join(format!("ep_{i:05}.csv")))?;
        }
        Ok(m)
    };
    let results = if opts.sequential {
        exec::map_indexed_seq(opts.episodes, run_one)
    } else {
        exec::map_indexed(opts.episodes, run_one)
    };
    let mut episodes = Vec::with_capacity(results.len());
    for r in results {
        episodes.push(r.map_err(|e| Error::Eval(format!("episode {}: {e}", episodes.len())))?);
    }
    if let Some(dir) = &opts.trace_dir {
        let mut f = std::fs::File::create(dir.join("summary.jsonl"))?;
        for m in &episodes {
            trace::append_summary_line(&mut f, m)?;
        }
    }
    let report = aggregate(agent_name(agent), &episodes)?;
    Ok(EvalOutcome { report, episodes })
}

fn agent_name<A: Agent>(agent: &A) -> &str {
    agent.name()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::PidAgent;

    /// Trace of an ideal agent that teleports the rates onto the setpoint
    /// after one step and holds them there.
    fn teleport_trace(sp: [f64; 3], steps: usize, dt: f64) -> EpisodeTrace {
        let mut t = EpisodeTrace::new(dt);
        for k in 0..steps {
            let omega = if k == 0 { [0.0; 3] } else { sp };
            t.push(sp, omega, [0.0; 4], 0.0);
        }
        t
    }

    #[test]
    fn oracle_agent_gets_perfect_metrics() {
        let mut eps = Vec::new();
        for i in 0..10 {
            let sp = [1.0 + i as f64 * 0.3, -2.0, 0.7];
            let trace = teleport_trace(sp, 1001, 1e-3);
            eps.push(trace_metrics(i, i as u64, &trace, 0.1, 0.9).unwrap());
        }
        let report = aggregate("oracle", &eps).unwrap();
        for axis in &report.axes {
            assert_eq!(axis.success_pct.mean, 100.0);
            assert_eq!(axis.success_pct.half_width, 0.0);
            assert_eq!(axis.failure_pct.defined, 0);
            assert!((axis.peak_pct.mean - 100.0).abs() < 1e-9);
            assert!(axis.stability.mean.abs() < 1e-12);
        }
    }

    #[test]
    fn aggregation_means_are_arithmetic_means_of_defined_episodes() {
        let mut eps = Vec::new();
        for (i, rise) in [Some(40.0), None, Some(60.0)].iter().enumerate() {
            let trace = teleport_trace([2.0, 2.0, 2.0], 1001, 1e-3);
            let mut m = trace_metrics(i, 0, &trace, 0.1, 0.9).unwrap();
            m.rise_ms[0] = *rise;
            eps.push(m);
        }
        let report = aggregate("x", &eps).unwrap();
        assert_eq!(report.axes[0].rise_ms.defined, 2);
        assert!((report.axes[0].rise_ms.mean - 50.0).abs() < 1e-12);
    }

    #[test]
    fn zero_episodes_is_an_error() {
        let opts = EvalOptions { episodes: 0, ..EvalOptions::default() };
        let r = evaluate(&PidAgent::baseline(), &TaskConfig::episodic(), &AircraftConfig::iris(), &opts);
        assert!(r.is_err());
    }

    #[test]
    fn parallel_and_sequential_evaluation_agree() {
        let task = TaskConfig { episode_max: 0.6, ..TaskConfig::episodic() };
        let aircraft = AircraftConfig::iris();
        let base = EvalOptions { episodes: 8, seed: 5, ..EvalOptions::default() };
        let seq = EvalOptions { sequential: true, ..base.clone() };
        let a = evaluate(&PidAgent::baseline(), &task, &aircraft, &base).unwrap();
        let b = evaluate(&PidAgent::baseline(), &task, &aircraft, &seq).unwrap();
        for (x, y) in a.episodes.iter().zip(b.episodes.iter()) {
            assert_eq!(x.setpoint, y.setpoint);
            assert_eq!(x.total_error, y.total_error);
            assert_eq!(x.mean_reward, y.mean_reward);
        }
    }

    #[test]
    fn identical_seeds_give_identical_setpoint_streams_across_agents() {
        let task = TaskConfig { episode_max: 0.6, ..TaskConfig::episodic() };
        let aircraft = AircraftConfig::iris();
        let opts = EvalOptions { episodes: 5, seed: 11, ..EvalOptions::default() };
        let pid = evaluate(&PidAgent::baseline(), &task, &aircraft, &opts).unwrap();
        let rnd = evaluate(&crate::agent::RandomAgent::new(0), &task, &aircraft, &opts).unwrap();
        for (x, y) in pid.episodes.iter().zip(rnd.episodes.iter()) {
            assert_eq!(x.setpoint, y.setpoint);
        }
    }
}
