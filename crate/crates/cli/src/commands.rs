//! Subcommand implementations.

use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};

use anyhow::{anyhow, Context};
use atfg_core::config;
use atfg_core::dynamics::{AircraftConfig, DEFAULT_DT};
use atfg_core::env::TaskConfig;
use atfg_core::eval::{self, EvalOptions, MetricsReport};
use atfg_core::link::LinkServer;
use atfg_core::ppo::{self, TrainConfig};
use atfg_core::seed::EVAL_STREAM_OFFSET;

use crate::agent_spec::{self, AnyAgent};
use crate::manifest;
use crate::{fail, Cli, CliResult, EvalArgs, EXIT_BIND, EXIT_CONFIG};

static INTERRUPTED: AtomicBool = AtomicBool::new(false);

extern "C" fn on_sigint(_: libc::c_int) {
    INTERRUPTED.store(true, Ordering::SeqCst);
}

fn load_aircraft(cli: &Cli) -> Result<AircraftConfig, crate::CliError> {
    match &cli.aircraft {
        Some(path) => config::load_aircraft(path).map_err(|e| fail(EXIT_CONFIG, anyhow!(e))),
        None => Ok(AircraftConfig::iris()),
    }
}

fn load_task(cli: &Cli) -> Result<TaskConfig, crate::CliError> {
    let mut task = match &cli.task {
        Some(path) => config::load_task(path).map_err(|e| fail(EXIT_CONFIG, anyhow!(e)))?,
        None => TaskConfig::episodic(),
    };
    if let Some(dt) = cli.dt {
        task.dt = dt;
    }
    task.seed = cli.seed;
    task.validate().map_err(|e| fail(EXIT_CONFIG, anyhow!(e)))?;
    Ok(task)
}

pub fn serve(cli: &Cli, bind: &str) -> CliResult {
    let aircraft = load_aircraft(cli)?;
    let dt = cli.dt.unwrap_or(DEFAULT_DT);
    let server = LinkServer::bind(aircraft, dt, bind)
        .map_err(|e| fail(EXIT_BIND, anyhow!("cannot bind {bind}: {e}")))?;
    let addr = server.local_addr().map_err(|e| fail(EXIT_BIND, anyhow!(e)))?;
    log::info!("lock-step server on {addr}, dt = {dt}s; ctrl-c to stop");

    unsafe {
        let handler = on_sigint as extern "C" fn(libc::c_int) as *const () as libc::sighandler_t;
        libc::signal(libc::SIGINT, handler);
        libc::signal(libc::SIGTERM, handler);
    }
    let handle = server.shutdown_handle();
    let watcher = std::thread::spawn(move || loop {
        if INTERRUPTED.load(Ordering::SeqCst) {
            handle.shutdown();
            break;
        }
        std::thread::sleep(std::time::Duration::from_millis(50));
    });
    let counters = server.run().map_err(|e| fail(crate::EXIT_GENERIC, anyhow!(e)))?;
    INTERRUPTED.store(true, Ordering::SeqCst);
    watcher.join().ok();
    println!(
        "frames: {}  steps: {}  resets: {}  retransmits: {}  drops: {}",
        counters.frames, counters.steps, counters.resets, counters.retransmits, counters.drops
    );
    Ok(())
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    let mut f = std::fs::File::create(path)
        .with_context(|| format!("creating {}", path.display()))?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

fn curve_csv(points: &[(u64, f64, f64)]) -> String {
    let mut out = String::from("episode,mean_reward,half_width\n");
    for (ep, mean, hw) in points {
        out.push_str(&format!("{ep},{mean},{hw}\n"));
    }
    out
}

pub fn train(cli: &Cli, train_path: Option<&Path>) -> CliResult {
    let aircraft = load_aircraft(cli)?;
    let task = load_task(cli)?;
    let cfg = match train_path {
        Some(path) => config::load_train(path).map_err(|e| fail(EXIT_CONFIG, anyhow!(e)))?,
        None => TrainConfig::default(),
    };
    cfg.validate().map_err(|e| fail(EXIT_CONFIG, anyhow!(e)))?;
    std::fs::create_dir_all(&cli.out).map_err(|e| anyhow!(e))?;
    manifest::append(
        &cli.out,
        "train",
        cli.seed,
        &[
            ("task", format!("{:?}", cli.task)),
            ("train", format!("{train_path:?}")),
            ("aircraft", format!("{:?}", cli.aircraft)),
            ("total_steps", cfg.total_steps.to_string()),
            ("seed_count", cfg.seed_count.to_string()),
        ],
    )?;

    let mut curves: Vec<Vec<f64>> = Vec::new();
    for k in 0..cfg.seed_count {
        let seed = atfg_core::seed::derive(cli.seed, k as u64);
        log::info!("training seed {k} (derived {seed})");
        let result = ppo::train(&task, &aircraft, &cfg, seed)
            .map_err(|e| fail(crate::EXIT_GENERIC, anyhow!(e)))?;
        let rows: Vec<(u64, f64, f64)> =
            result.curve.iter().map(|p| (p.episode, p.reward, 0.0)).collect();
        write_text(&cli.out.join(format!("curve_seed{k}.csv")), &curve_csv(&rows))?;
        result
            .policy
            .save(&cli.out.join(format!("best_seed{k}.ckpt")))
            .map_err(|e| anyhow!(e))?;
        result
            .final_policy
            .save(&cli.out.join(format!("final_seed{k}.ckpt")))
            .map_err(|e| anyhow!(e))?;
        println!(
            "seed {k}: {} episodes, best eval reward {:.4}",
            result.curve.len(),
            result.best_eval_reward
        );
        curves.push(result.curve.iter().map(|p| p.reward).collect());
    }

    // cross-seed aggregate, truncated to the shortest curve
    let min_len = curves.iter().map(Vec::len).min().unwrap_or(0);
    let mut rows = Vec::with_capacity(min_len);
    for ep in 0..min_len {
        let vals: Vec<f64> = curves.iter().map(|c| c[ep]).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let hw = if vals.len() < 2 {
            0.0
        } else {
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / (vals.len() as f64 - 1.0);
            1.96 * (var / vals.len() as f64).sqrt()
        };
        rows.push((ep as u64, mean, hw));
    }
    write_text(&cli.out.join("curve.csv"), &curve_csv(&rows))?;
    println!("wrote {} (averaged over {} seeds)", cli.out.join("curve.csv").display(), cfg.seed_count);
    Ok(())
}

fn eval_options(cli: &Cli, args: &EvalArgs, trace_dir: Option<&Path>) -> EvalOptions {
    EvalOptions {
        episodes: args.episodes,
        // evaluation setpoints are kept disjoint from training streams
        seed: cli.seed.wrapping_add(EVAL_STREAM_OFFSET),
        trace_dir: trace_dir.map(Path::to_path_buf),
        sequential: false,
        rise_low: args.rise_low,
        rise_high: args.rise_high,
    }
}

fn run_eval(
    cli: &Cli,
    spec: &str,
    args: &EvalArgs,
    task: &TaskConfig,
    aircraft: &AircraftConfig,
    out_dir: &Path,
    with_traces: bool,
) -> Result<MetricsReport, crate::CliError> {
    let agent: AnyAgent = agent_spec::parse(spec, task)?;
    let trace_dir = if with_traces { Some(out_dir.join("traces")) } else { None };
    if let Some(d) = &trace_dir {
        std::fs::create_dir_all(d).map_err(|e| anyhow!(e))?;
    }
    let opts = eval_options(cli, args, trace_dir.as_deref());
    let outcome = eval::evaluate(&agent, task, aircraft, &opts)
        .map_err(|e| fail(crate::EXIT_GENERIC, anyhow!(e)))?;
    let mut report = outcome.report;
    report.agent = spec.to_string();
    write_text(&out_dir.join("report.json"), &eval::report_to_json(&report))?;
    write_text(&out_dir.join("report.txt"), &eval::render_table(&report))?;
    Ok(report)
}

pub fn evaluate(cli: &Cli, spec: &str, args: &EvalArgs) -> CliResult {
    let aircraft = load_aircraft(cli)?;
    let task = load_task(cli)?;
    std::fs::create_dir_all(&cli.out).map_err(|e| anyhow!(e))?;
    manifest::append(
        &cli.out,
        "evaluate",
        cli.seed,
        &[
            ("agent", spec.to_string()),
            ("episodes", args.episodes.to_string()),
            ("task", format!("{:?}", cli.task)),
            ("aircraft", format!("{:?}", cli.aircraft)),
        ],
    )?;
    let report = run_eval(cli, spec, args, &task, &aircraft, &cli.out, args.traces)?;
    match args.metrics.as_str() {
        "json" => print!("{}", eval::report_to_json(&report)),
        _ => print!("{}", eval::render_table(&report)),
    }
    Ok(())
}

pub fn compare(cli: &Cli, specs: &[String], args: &EvalArgs) -> CliResult {
    let aircraft = load_aircraft(cli)?;
    let task = load_task(cli)?;
    std::fs::create_dir_all(&cli.out).map_err(|e| anyhow!(e))?;
    manifest::append(
        &cli.out,
        "compare",
        cli.seed,
        &[("agents", specs.join(" ")), ("episodes", args.episodes.to_string())],
    )?;
    let mut reports = Vec::new();
    for spec in specs {
        let dir = cli.out.join(agent_spec::label(spec));
        std::fs::create_dir_all(&dir).map_err(|e| anyhow!(e))?;
        // traces are the point of a comparison: step-response data per agent
        let report = run_eval(cli, spec, args, &task, &aircraft, &dir, true)?;
        reports.push(report);
    }
    let table = eval::render_comparison(&reports);
    write_text(&cli.out.join("comparison.txt"), &table)?;
    match args.metrics.as_str() {
        "json" => {
            let all: Vec<&MetricsReport> = reports.iter().collect();
            let mut s = serde_json::to_string_pretty(&all).map_err(|e| anyhow!(e))?;
            s.push('\n');
            print!("{s}");
        }
        _ => print!("{table}"),
    }
    Ok(())
}

pub fn scaffold(cli: &Cli) -> CliResult {
    let files = config::scaffold(&cli.out).map_err(|e| fail(crate::EXIT_GENERIC, anyhow!(e)))?;
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}
