use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use paramres_core::kg::{demodulate, kg_initialize, Grid, KgStepper};
use paramres_core::layer::layer_sweep;
use paramres_core::par::{on_threads, Exec};
use paramres_core::{ModelParams, QuadraticPhase};

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

/// Worker count for the parallel policy; at least two so the rayon path runs
/// even on a single-core machine.
fn threads() -> usize {
    std::thread::available_parallelism().map_or(2, |n| n.get().max(2))
}

fn kg_step(c: &mut Criterion) {
    let params = ModelParams::soliton_model(0.1, 0.5).unwrap();
    let phase = QuadraticPhase::model();
    let mut group = c.benchmark_group("kg_step");
    for nx in [8_000, 64_000] {
        let grid = Grid::symmetric(400.0, nx).unwrap();
        let dt = (0.5 * grid.dx).min(0.025);
        for (name, exec) in POLICIES {
            let mut state = kg_initialize(&params, &phase, grid, -900.0, 1.0).unwrap();
            let mut stepper = KgStepper::new(params, &phase, exec);
            group.bench_with_input(BenchmarkId::new(name, nx), &nx, |b, _| {
                on_threads(threads(), || b.iter(|| stepper.step(black_box(&mut state), dt).unwrap()))
            });
        }
    }
    group.finish();
}

fn demodulation(c: &mut Criterion) {
    let params = ModelParams::soliton_model(0.1, 0.5).unwrap();
    let phase = QuadraticPhase::model();
    let state = kg_initialize(&params, &phase, Grid::symmetric(400.0, 8_000).unwrap(), -900.0, 1.0).unwrap();
    c.bench_function("demodulate/8000", |b| b.iter(|| demodulate(black_box(&state), &params)));
}

fn layer(c: &mut Criterion) {
    let mut group = c.benchmark_group("layer_sweep");
    group.sample_size(10);
    let f_list = [0.25, 0.5, 1.0];
    for (name, exec) in POLICIES {
        group.bench_function(name, |b| {
            on_threads(threads(), || b.iter(|| layer_sweep(black_box(&f_list), 100.0, 1e-10, exec)))
        });
    }
    group.finish();
}

criterion_group!(benches, kg_step, demodulation, layer);
criterion_main!(benches);
