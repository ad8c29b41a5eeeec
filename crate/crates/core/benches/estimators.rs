use std::f64::consts::PI;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use rhet_core::detect::CurrentTrace;
use rhet_core::spectra::{psd_filtered_tbar, psd_standard_with, EstimatorOptions, FilterSpec, Method};
use rhet_core::Exec;

fn trace(n: usize) -> CurrentTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let i = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    CurrentTrace { i, dt: 1.0, t0: 0.5, lo_omega: 2.0 * PI * 0.05, lo_theta: 0.0, seed: 3, realization: 0 }
}

fn estimators(c: &mut Criterion) {
    let tr = trace(1 << 17);
    let gate = FilterSpec::gate(tr.lo_omega, 0.0, PI / 3.0);
    let mut g = c.benchmark_group("estimators");
    g.sample_size(10);
    for exec in [Exec::Sequential, Exec::Parallel] {
        let name = format!("{exec:?}");
        for method in [Method::Direct, Method::Harmonic] {
            let opts = EstimatorOptions::new(2048).method(method).exec(exec);
            g.bench_with_input(BenchmarkId::new(format!("gate_tbar_{method:?}"), &name), &opts, |b, o| {
                b.iter(|| psd_filtered_tbar(&tr, &gate, o).unwrap())
            });
        }
        g.bench_with_input(BenchmarkId::new("standard", &name), &exec, |b, &e| b.iter(|| psd_standard_with(&tr, 4, e).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, estimators);
criterion_main!(benches);
