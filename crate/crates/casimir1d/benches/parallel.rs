//! Parallel vs sequential execution of the data-parallel kernels.
//!
//! Build with `--no-default-features` to compare against a binary without
//! rayon at all; there both variants run sequentially.

use std::hint::black_box;

use casimir1d::bathsim::{self, BathDiscretization, EnsembleOptions};
use casimir1d::matsubara::{self, MatsubaraOptions};
use casimir1d::spectra;
use casimir1d::{Exec, Geometry, OscillatorParams, ThermalParams};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn matsubara_line(c: &mut Criterion) {
    let p = OscillatorParams::unit_mass(1.0, 0.1, 1.0).unwrap();
    let geom = Geometry::line(1.0).unwrap();
    // Low temperature: many terms before the tail bound is met.
    let th = ThermalParams::natural(1e-3).unwrap();
    let mut group = c.benchmark_group("matsubara_line");
    for (name, exec) in MODES {
        let opts = MatsubaraOptions {
            exec,
            ..MatsubaraOptions::default()
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| matsubara::free_energy_matsubara_line(&p, &geom, black_box(&th), &opts).unwrap())
        });
    }
    group.finish();
}

fn mode_search(c: &mut Criterion) {
    let p = OscillatorParams::unit_mass(1.0, 0.0, 0.5).unwrap();
    let geom = Geometry::boxed(1.0, 2.0).unwrap();
    let mut group = c.benchmark_group("box_modes");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| spectra::find_modes(&p, &geom, black_box(2000.0), exec).unwrap())
        });
    }
    group.finish();
}

fn bath_ensemble(c: &mut Criterion) {
    let p = OscillatorParams::new(1.0, 1.0, 0.2, 0.0).unwrap();
    let bath = BathDiscretization::standard(&p, 256, 10.0).unwrap();
    let dt = bathsim::SimOptions::for_bath(&bath, 10.0, 10).dt;
    let mut group = c.benchmark_group("bath_ensemble");
    group.sample_size(10);
    for (name, exec) in MODES {
        let opts = EnsembleOptions {
            members: 16,
            seed: 1,
            t_end: 10.0,
            average_from: 5.0,
            dt,
            sample_every: 10,
            exec,
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| bathsim::ensemble(&bath, &p, black_box(1.0), &opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, matsubara_line, mode_search, bath_ensemble);
criterion_main!(benches);
