//! Trace export: one CSV per episode plus a JSON-lines summary.

use std::io::Write;
use std::path::Path;

use crate::error::Result;

use super::metrics::EpisodeTrace;
use super::EpisodeMetrics;

pub const TRACE_HEADER: &str =
    "t,target_x,target_y,target_z,omega_x,omega_y,omega_z,action_1,action_2,action_3,action_4,reward";

/// Write one episode trace as CSV.
pub fn write_trace_csv(trace: &EpisodeTrace, path: &Path) -> Result<()> {
    trace.validate()?;
    let mut out = String::with_capacity(trace.len() * 96);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for k in 0..trace.len() {
        let sp = trace.setpoint[k];
        let om = trace.omega[k];
        let ac = trace.action[k];
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            trace.time(k),
            sp[0],
            sp[1],
            sp[2],
            om[0],
            om[1],
            om[2],
            ac[0],
            ac[1],
            ac[2],
            ac[3],
            trace.reward[k],
        ));
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

/// Append one per-episode metrics record to a JSON-lines summary.
pub fn append_summary_line(file: &mut std::fs::File, metrics: &EpisodeMetrics) -> Result<()> {
    let line = serde_json::to_string(metrics)
        .map_err(|e| crate::error::Error::Eval(format!("summary serialization: {e}")))?;
    writeln!(file, "{line}")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_numbers_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ep.csv");
        let mut t = EpisodeTrace::new(1e-3);
        t.push([1.0, 2.0, 3.0], [0.1, 0.2, 0.3], [0.5, -0.5, 0.25, 1.0], -0.25);
        t.push([1.0, 2.0, 3.0], [0.15, 0.25, 0.35], [0.5, -0.5, 0.25, 1.0], -0.2);
        write_trace_csv(&t, &path).unwrap();
        let body = std::fs::read_to_string(&path).unwrap();
        let mut lines = body.lines();
        assert_eq!(lines.next().unwrap(), TRACE_HEADER);
        assert_eq!(lines.next().unwrap(), "0,1,2,3,0.1,0.2,0.3,0.5,-0.5,0.25,1,-0.25");
        assert_eq!(lines.clone().count(), 1);
    }
}
