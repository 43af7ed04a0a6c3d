use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use majorana_core::decoherence::{dissipation_report, gamma_low_dissipation};
use majorana_core::jw::dissipative_matrix_elements;
use majorana_core::lindblad::{build_truncated_model, evolve};
use majorana_core::{
    solve_chain, BathSpec, ChainParams, DensityMatrix, EvolveOptions, RateOptions, SolverChoice, SpectrumOptions,
    Statistics,
};

fn params(n: usize) -> ChainParams {
    ChainParams::dimensionless(n, 5.0, 1.0, 8.0).unwrap()
}

fn spectra(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_chain");
    group.sample_size(10);
    for n in [6, 8, 10, 12] {
        let p = params(n);
        group.bench_with_input(BenchmarkId::new("auto", n), &p, |b, p| {
            b.iter(|| solve_chain(black_box(p), &SpectrumOptions::for_params(p)).unwrap())
        });
    }
    for n in [8, 10] {
        let p = params(n);
        let opts = SpectrumOptions::for_params(&p).with_solver(SolverChoice::Iterative);
        group.bench_with_input(BenchmarkId::new("iterative", n), &p, |b, p| {
            b.iter(|| solve_chain(black_box(p), &opts).unwrap())
        });
    }
    group.finish();
}

fn matrix_elements(c: &mut Criterion) {
    let mut group = c.benchmark_group("matrix_elements");
    for n in [8, 12] {
        let p = params(n);
        let s = solve_chain(&p, &SpectrumOptions::for_params(&p)).unwrap();
        group.bench_function(BenchmarkId::new("gamma_low", n), |b| {
            b.iter(|| {
                let t = dissipative_matrix_elements(&s.even, &s.odd, 1).unwrap();
                gamma_low_dissipation(&t, 1.0).unwrap()
            })
        });
        group.bench_function(BenchmarkId::new("table_n_max_5", n), |b| {
            b.iter(|| dissipative_matrix_elements(black_box(&s.even), &s.odd, 5).unwrap())
        });
    }
    group.finish();
}

fn dynamics(c: &mut Criterion) {
    let p = params(8);
    let s = solve_chain(&p, &SpectrumOptions::for_params(&p)).unwrap();
    let bath = BathSpec::new(Statistics::Fermionic, 0.3, 0.5, 1.0).unwrap();
    let report = dissipation_report(&s, &bath, 5, &RateOptions::default()).unwrap();
    let model = build_truncated_model(&[&report], &s, 10).unwrap();
    let rho0 = DensityMatrix::pure(10, 9).unwrap();
    let opts = EvolveOptions {
        record_every: usize::MAX,
        ..Default::default()
    };
    c.bench_function("evolve_10_levels_1000_steps", |b| {
        b.iter(|| evolve(&model, black_box(&rho0), 10.0, 0.01, &opts).unwrap())
    });
}

criterion_group!(benches, spectra, matrix_elements, dynamics);
criterion_main!(benches);
