//! Report rendering: aligned text tables and machine-readable JSON.

use super::{MetricStat, MetricsReport};

const AXIS_NAMES: [&str; 3] = ["roll", "pitch", "yaw"];

const METRICS: [(&str, fn(&super::AxisReport) -> &MetricStat); 6] = [
    ("success (%)", |a| &a.success_pct),
    ("failure (%)", |a| &a.failure_pct),
    ("rise (ms)", |a| &a.rise_ms),
    ("peak (%)", |a| &a.peak_pct),
    ("error (rad/s)", |a| &a.error_rad_s),
    ("stability", |a| &a.stability),
];

fn cell(stat: &MetricStat) -> String {
    if stat.defined == 0 {
        return "-".to_string();
    }
    format!("{:.1}±{:.1}", stat.mean, stat.half_width)
}

/// One agent's report as an aligned text table.
pub fn render_table(report: &MetricsReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "agent: {}    episodes: {}    mean step reward: {:.4}±{:.4}\n",
        report.agent, report.episodes, report.mean_reward.mean, report.mean_reward.half_width
    ));
    out.push_str(&format!(
        "{:<16}{:>16}{:>16}{:>16}\n",
        "metric", AXIS_NAMES[0], AXIS_NAMES[1], AXIS_NAMES[2]
    ));
    for (name, get) in METRICS {
        out.push_str(&format!(
            "{:<16}{:>16}{:>16}{:>16}\n",
            name,
            cell(get(&report.axes[0])),
            cell(get(&report.axes[1])),
            cell(get(&report.axes[2])),
        ));
    }
    let undefined: Vec<String> = (0..3)
        .flat_map(|a| {
            let rise = &report.axes[a].rise_ms;
            let succ = &report.axes[a].success_pct;
            let mut notes = Vec::new();
            if succ.defined < report.episodes {
                notes.push(format!(
                    "{} success undefined in {}",
                    AXIS_NAMES[a],
                    report.episodes - succ.defined
                ));
            }
            if rise.defined < succ.defined {
                notes.push(format!(
                    "{} rise undefined in {}",
                    AXIS_NAMES[a],
                    succ.defined - rise.defined
                ));
            }
            notes
        })
        .collect();
    if !undefined.is_empty() {
        out.push_str(&format!("undefined episodes: {}\n", undefined.join(", ")));
    }
    out
}

/// Pretty JSON with a trailing newline; field order is fixed by the structs,
/// so identical reports serialize to identical bytes.
pub fn report_to_json(report: &MetricsReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

fn winner_indices(values: &[Option<f64>], better: impl Fn(f64, f64) -> bool) -> Vec<bool> {
    let mut best: Option<f64> = None;
    for v in values.iter().flatten() {
        best = Some(match best {
            None => *v,
            Some(b) => {
                if better(*v, b) {
                    *v
                } else {
                    b
                }
            }
        });
    }
    values
        .iter()
        .map(|v| matches!((v, best), (Some(v), Some(b)) if *v == b))
        .collect()
}

/// Side-by-side comparison of several reports over the same setpoints; the
/// best mean per metric and axis is marked with `*`.
pub fn render_comparison(reports: &[MetricsReport]) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:<22}", "metric"));
    for r in reports {
        out.push_str(&format!("{:>20}", r.agent));
    }
    out.push('\n');

    for (name, get) in METRICS {
        for axis in 0..3 {
            let stats: Vec<&MetricStat> = reports.iter().map(|r| get(&r.axes[axis])).collect();
            let values: Vec<Option<f64>> = stats
                .iter()
                .map(|s| if s.defined == 0 { None } else { Some(s.mean) })
                .collect();
            let winners = match name {
                "success (%)" => winner_indices(&values, |a, b| a > b),
                "peak (%)" => winner_indices(&values, |a, b| (a - 100.0).abs() < (b - 100.0).abs()),
                "stability" => winner_indices(&values, |a, b| a.abs() < b.abs()),
                // failure, rise, error: lower is better
                _ => winner_indices(&values, |a, b| a < b),
            };
            out.push_str(&format!("{:<22}", format!("{} {}", AXIS_NAMES[axis], name)));
            for (k, s) in stats.iter().enumerate() {
                let mark = if winners[k] { "*" } else { " " };
                out.push_str(&format!("{:>19}{mark}", cell(s)));
            }
            out.push('\n');
        }
    }
    out.push_str(&format!("{:<22}", "mean step reward"));
    let rewards: Vec<Option<f64>> = reports.iter().map(|r| Some(r.mean_reward.mean)).collect();
    let winners = winner_indices(&rewards, |a, b| a > b);
    for (k, r) in reports.iter().enumerate() {
        let mark = if winners[k] { "*" } else { " " };
        out.push_str(&format!(
            "{:>19}{mark}",
            format!("{:.4}±{:.4}", r.mean_reward.mean, r.mean_reward.half_width)
        ));
    }
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::AxisReport;

    fn stat(mean: f64, hw: f64, defined: usize) -> MetricStat {
        MetricStat { mean, half_width: hw, defined }
    }

    fn dummy(agent: &str, rise: f64) -> MetricsReport {
        let axis = AxisReport {
            success_pct: stat(100.0, 0.0, 10),
            failure_pct: stat(0.0, 0.0, 0),
            rise_ms: stat(rise, 2.0, 10),
            peak_pct: stat(105.0, 1.0, 10),
            error_rad_s: stat(300.0, 5.0, 10),
            stability: stat(0.0, 0.0, 10),
        };
        MetricsReport {
            agent: agent.into(),
            episodes: 10,
            axes: [axis.clone(), axis.clone(), axis],
            mean_reward: stat(-0.05, 0.01, 10),
        }
    }

    #[test]
    fn table_contains_all_metrics() {
        let text = render_table(&dummy("pid", 80.0));
        for (name, _) in METRICS {
            assert!(text.contains(name), "missing {name}");
        }
        assert!(text.contains("pid"));
    }

    #[test]
    fn comparison_marks_the_faster_riser() {
        let text = render_comparison(&[dummy("slow", 90.0), dummy("fast", 60.0)]);
        let rise_line = text.lines().find(|l| l.starts_with("roll rise (ms)")).unwrap();
        assert!(rise_line.contains("60.0±2.0*"), "{rise_line}");
        assert!(!rise_line.contains("90.0±2.0*"), "{rise_line}");
    }

    #[test]
    fn json_is_stable() {
        let a = report_to_json(&dummy("pid", 80.0));
        let b = report_to_json(&dummy("pid", 80.0));
        assert_eq!(a, b);
        assert!(a.ends_with('\n'));
    }
}
