//! Sequential against rayon-parallel execution for single steps and for a
//! coupled fine/coarse run.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use mvsde::noise::LevyAreaConfig;
use mvsde::schemes::{simulate_coupled_pair, step_ensemble};
use mvsde::{
    make_builtin, BuiltinModelParams, EnsembleState, Example, Execution, NoiseSource, SchemeSpec, SimOptions,
    TamingVariant, TimeGrid,
};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn spread_state(model: &mvsde::BuiltinModel, grid: TimeGrid, n: usize) -> EnsembleState {
    let mut s = EnsembleState::initial(model, grid, n).unwrap();
    for (i, x) in s.positions.iter_mut().enumerate() {
        *x += (i as f64 / n as f64) - 0.5;
    }
    s
}

fn bench_step_without_lions(c: &mut Criterion) {
    let model = make_builtin(Example::Ex3, BuiltinModelParams::default()).unwrap();
    let spec = SchemeSpec::milstein(TamingVariant::Scheme1, false);
    let grid = TimeGrid::new(1.0, 64).unwrap();
    let mut group = c.benchmark_group("step/ex3-no-lions");
    for n in [1_000usize, 100_000] {
        let state = spread_state(&model, grid, n);
        let noise = NoiseSource::new(1).block(0, 0..n, grid.delta(), None, Execution::Parallel).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| step_ensemble(black_box(&state), &model, &spec, &noise, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_step_with_lions(c: &mut Criterion) {
    let model = make_builtin(Example::Ex4, BuiltinModelParams::default()).unwrap();
    let spec = SchemeSpec::milstein(TamingVariant::Scheme1, true);
    let grid = TimeGrid::new(1.0, 64).unwrap();
    let levy = LevyAreaConfig::for_steps(grid.steps());
    let mut group = c.benchmark_group("step/ex4-lions");
    for n in [64usize, 512] {
        let state = spread_state(&model, grid, n);
        let src = NoiseSource::new(1);
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| {
                    let noise = src.block(0, 0..n, grid.delta(), Some(levy), exec).unwrap();
                    step_ensemble(black_box(&state), &model, &spec, &noise, exec).unwrap()
                })
            });
        }
    }
    group.finish();
}

fn bench_coupled_pair(c: &mut Criterion) {
    let model = make_builtin(Example::Ex2, BuiltinModelParams::default()).unwrap();
    let spec = SchemeSpec::milstein(TamingVariant::Scheme1, false);
    let grid = TimeGrid::new(1.0, 256).unwrap();
    let mut group = c.benchmark_group("coupled-pair/ex2-M256");
    group.sample_size(10);
    let n = 10_000;
    for (name, exec) in MODES {
        let opts = SimOptions {
            execution: exec,
            ..SimOptions::default()
        };
        group.bench_function(BenchmarkId::new(name, n), |b| {
            b.iter(|| simulate_coupled_pair(&model, &spec, grid, n, 7, &opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_step_without_lions, bench_step_with_lions, bench_coupled_pair);
criterion_main!(benches);
