use std::sync::Arc;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ucp_trunc::exec::Exec;
use ucp_trunc::gh::{build_correspondence, empirical_distortion, Systems};
use ucp_trunc::truncation::{empirical_constant, TruncationPair, Variant};
use ucp_trunc::ucpmetric::MetricConfig;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn bench_empirical_constant(c: &mut Criterion) {
    let pair = TruncationPair::new(Variant::FejerRiesz { n: 16 }).unwrap();
    let mut group = c.benchmark_group("empirical_constant");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(name, "fejer_riesz(16)"), &exec, |b, &exec| {
            b.iter(|| empirical_constant(&pair, 64, 7, exec).unwrap())
        });
    }
    group.finish();
}

fn bench_distortion(c: &mut Criterion) {
    let pair = Arc::new(TruncationPair::new(Variant::ToeplitzCircle { n: 8 }).unwrap());
    let cfg = MetricConfig::default();
    let cs = build_correspondence(pair.clone(), 2, cfg.m, 11).unwrap();
    let systems = Systems::new(&pair, &cfg).unwrap();
    let mut group = c.benchmark_group("empirical_distortion");
    group.sample_size(10).measurement_time(Duration::from_secs(20));
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(name, "toeplitz_circle(8)"), &exec, |b, &exec| {
            b.iter(|| empirical_distortion(&cs, &systems, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_empirical_constant, bench_distortion);
criterion_main!(benches);
