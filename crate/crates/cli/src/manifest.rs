//! Run manifests: every command appends one record to `manifest.jsonl` in
//! its output directory, carrying everything needed to reproduce the run.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// Flag/argument values, sorted by key.
    pub args: BTreeMap<String, String>,
    pub seed: u64,
    pub build: String,
    pub started_unix: u64,
}

fn build_id() -> String {
    let version = env!("CARGO_PKG_VERSION");
    let git = std::process::Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string());
    match git {
        Some(g) if !g.is_empty() => format!("{version}+{g}"),
        _ => version.to_string(),
    }
}

pub fn append(out_dir: &Path, command: &str, seed: u64, args: &[(&str, String)]) -> anyhow::Result<()> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let manifest = RunManifest {
        command: command.to_string(),
        args: args.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        seed,
        build: build_id(),
        started_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let line = serde_json::to_string(&manifest)?;
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(out_dir.join("manifest.jsonl"))?;
    writeln!(f, "{line}")?;
    Ok(())
}
