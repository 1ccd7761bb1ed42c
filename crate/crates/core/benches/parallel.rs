// SPDX-License-Identifier: Apache-2.0

//! One thread against all threads. Build with `--no-default-features` to
//! measure the sequential fallback, where both arms run on one thread.

use std::sync::Arc;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pitrec::eval::simulation_accuracy_jobs;
use pitrec::par::default_jobs;
use pitrec::{predict_circuit, AttackParams, OracleSource};
use pitrec_testkit::{interrupt_controller, random_circuit};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn jobs_arms() -> Vec<usize> {
    let n = default_jobs().max(2);
    vec![1, n]
}

fn predict(c: &mut Criterion) {
    let nl = random_circuit(&mut ChaCha8Rng::seed_from_u64(1), 12, 40, 8);
    let source = OracleSource::Netlist(Arc::new(nl));
    let params = AttackParams {
        seed: 1,
        time_limit: Duration::from_secs(10),
        ..AttackParams::default()
    };
    let mut g = c.benchmark_group("predict_circuit");
    g.sample_size(10);
    for jobs in jobs_arms() {
        g.bench_with_input(BenchmarkId::from_parameter(jobs), &jobs, |b, &jobs| {
            b.iter(|| predict_circuit(&source, &params, jobs).unwrap())
        });
    }
    g.finish();
}

fn accuracy(c: &mut Criterion) {
    let nl = interrupt_controller();
    let mut g = c.benchmark_group("simulation_accuracy");
    for jobs in jobs_arms() {
        g.bench_with_input(BenchmarkId::from_parameter(jobs), &jobs, |b, &jobs| {
            b.iter(|| simulation_accuracy_jobs(&nl, &nl, 1 << 20, 7, jobs).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, predict, accuracy);
criterion_main!(benches);
