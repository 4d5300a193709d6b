//! Parallel vs sequential sample sweeps on representative check workloads.
//!
//! `map_samples` uses rayon when the `parallel` feature (default) is on;
//! `map_samples_seq` is the always-available fallback. Benching both in one
//! build shows the speedup and verifies the outputs agree.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use nsr_core::connection::ConnectionSpec;
use nsr_core::curvature::curvature_direct;
use nsr_core::sample::{map_samples, map_samples_seq, sample_point, stream_rng};
use nsr_core::verify::{run_check, CheckConfig};
use nsr_core::{catalog, AdaptedManifold};

fn curvature_sweep(m: &AdaptedManifold, samples: usize, parallel: bool) -> f64 {
    let f = |s: usize| {
        let mut rng = stream_rng(42, s as u64);
        let (p, _) = sample_point(m, &mut rng).unwrap();
        curvature_direct(m, &ConnectionSpec::Horizontal, &p)
            .unwrap()
            .r_mixed
            .max_abs()
    };
    let out = if parallel {
        map_samples(samples, f)
    } else {
        map_samples_seq(samples, f)
    };
    out.into_iter().fold(0.0, f64::max)
}

fn bench_curvature_sweep(c: &mut Criterion) {
    let m = catalog::get("hyperbolic3").unwrap().manifold;
    let mut group = c.benchmark_group("curvature_sweep");
    for samples in [64usize, 256] {
        group.bench_with_input(BenchmarkId::new("seq", samples), &samples, |b, &s| {
            b.iter(|| black_box(curvature_sweep(&m, s, false)))
        });
        group.bench_with_input(BenchmarkId::new("par", samples), &samples, |b, &s| {
            b.iter(|| black_box(curvature_sweep(&m, s, true)))
        });
    }
    group.finish();
}

fn bench_check(c: &mut Criterion) {
    let m = catalog::get("hyperbolic3").unwrap().manifold;
    let cfg = CheckConfig {
        samples: 50,
        seed: 42,
        tol_override: None,
    };
    let mut group = c.benchmark_group("run_check");
    for id in ["sym26", "twopath_sns"] {
        group.bench_function(id, |b| {
            b.iter(|| black_box(run_check(id, &m, &cfg).unwrap().max_residual))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_curvature_sweep, bench_check);
criterion_main!(benches);
