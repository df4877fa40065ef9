use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use wfbs::exec::Execution;
use wfbs::field_sampler::{sample_field_with, GridSpec};
use wfbs::params::{validate_wfbs_params, ParticleParams};
use wfbs::particle_system::{run_ensemble_with, ParticleConfig, TestFunction};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn ensembles(c: &mut Criterion) {
    let f = TestFunction::gaussian(0.0, 0.1).unwrap();
    let pp = ParticleParams::new([2.0, 2.0], [0.5, 0.0]).unwrap();
    let cfg = ParticleConfig::new(pp, f, f, 16.0, vec![(1.0, 1.0), (0.5, 2.0)]).unwrap();
    let mut group = c.benchmark_group("occupation_ensemble");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, 64), |b| {
            b.iter(|| run_ensemble_with(black_box(&cfg), 64, 7, exec).unwrap())
        });
    }
    group.finish();
}

fn fields(c: &mut Criterion) {
    let p = validate_wfbs_params(-0.25, 0.5, 0.0, 0.25).unwrap();
    let g = GridSpec::dyadic(0.0, 1.0, 5).unwrap();
    let mut group = c.benchmark_group("field_samples");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, 256), |b| {
            b.iter(|| sample_field_with(black_box(&p), &g, 256, 7, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, ensembles, fields);
criterion_main!(benches);
