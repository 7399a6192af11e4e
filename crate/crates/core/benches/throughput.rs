//! Criterion benches comparing the rayon-parallel evaluation path against
//! the sequential fallback, plus the hot single-item costs behind them.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use atfg_core::agent::PidAgent;
use atfg_core::dynamics::{self, AircraftConfig, DEFAULT_DT};
use atfg_core::env::TaskConfig;
use atfg_core::eval::{evaluate, EvalOptions};
use atfg_core::ppo::{gae, ActorCritic};
use atfg_core::seed;

fn bench_dynamics_step(c: &mut Criterion) {
    let cfg = AircraftConfig::iris();
    let mut state = dynamics::reset_state(&cfg);
    c.bench_function("dynamics_step", |b| {
        b.iter(|| {
            state = dynamics::step(black_box(&state), [0.6, 0.4, 0.55, 0.45], &cfg, DEFAULT_DT)
                .unwrap();
        })
    });
}

fn bench_policy_forward(c: &mut Criterion) {
    let ac = ActorCritic::new(7, 4, &[32, 32], 1, -0.5, &mut seed::rng(1));
    let obs = vec![0.25; 7];
    c.bench_function("policy_forward", |b| {
        b.iter(|| ac.forward(black_box(&obs)).unwrap())
    });
}

fn bench_gae(c: &mut Criterion) {
    let n = 2048;
    let rewards: Vec<f64> = (0..n).map(|i| -((i % 17) as f64) / 17.0).collect();
    let values: Vec<f64> = (0..=n).map(|i| -((i % 13) as f64) / 13.0).collect();
    let dones: Vec<bool> = (0..n).map(|i| i % 250 == 249).collect();
    c.bench_function("gae_2048", |b| {
        b.iter(|| gae(black_box(&rewards), &values, &dones, 0.99, 0.95).unwrap())
    });
}

fn bench_eval_batch(c: &mut Criterion) {
    let task = TaskConfig::episodic();
    let aircraft = AircraftConfig::iris();
    let agent = PidAgent::baseline();
    let mut group = c.benchmark_group("eval_batch_32");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| {
            let opts = EvalOptions { episodes: 32, seed: 7, ..EvalOptions::default() };
            evaluate(black_box(&agent), &task, &aircraft, &opts).unwrap()
        })
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            let opts =
                EvalOptions { episodes: 32, seed: 7, sequential: true, ..EvalOptions::default() };
            evaluate(black_box(&agent), &task, &aircraft, &opts).unwrap()
        })
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_dynamics_step,
    bench_policy_forward,
    bench_gae,
    bench_eval_batch
);
criterion_main!(benches);
