//! Benchmarks for the dense operator pipeline: matrix assembly, the
//! least-energy fixed point, and the linearized eigenproblem.

use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};

use fracground::{
    assemble_linearized, build_grid, default_init, eigen_solve, solve_least_energy, Domain,
    OperatorSystem, ProblemParams, SolveConfig,
};

fn params_1d() -> ProblemParams {
    ProblemParams::new(1, 0.5, 1.0, 2.0).unwrap()
}

fn params_2d() -> ProblemParams {
    ProblemParams::new(2, 0.5, 1.0, 3.0).unwrap()
}

fn bench_assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble");
    group.sample_size(10);

    let p1 = params_1d();
    let g1 = Arc::new(build_grid(&Domain::interval(), 1.0 / 400.0).unwrap());
    group.bench_function("interval-n799", |b| {
        b.iter(|| OperatorSystem::assemble(g1.clone(), p1.kernel().unwrap(), p1.lambda))
    });

    let p2 = params_2d();
    let g2 = Arc::new(build_grid(&Domain::disc(), 0.05).unwrap());
    group.bench_function("disc-n1257", |b| {
        b.iter(|| OperatorSystem::assemble(g2.clone(), p2.kernel().unwrap(), p2.lambda))
    });

    group.finish();
}

fn bench_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("ground-state");
    group.sample_size(10);

    let params = params_2d();
    let grid = Arc::new(build_grid(&Domain::disc(), 0.05).unwrap());
    let sys = OperatorSystem::assemble(grid.clone(), params.kernel().unwrap(), params.lambda);
    let cfg = SolveConfig::default();
    let init = default_init(grid.clone());

    group.bench_function("disc-n1257", |b| {
        b.iter(|| solve_least_energy(&sys, &params, &cfg, &init).unwrap())
    });

    group.finish();
}

fn bench_spectrum(c: &mut Criterion) {
    let mut group = c.benchmark_group("linearized-spectrum");
    group.sample_size(10);

    let params = params_2d();
    let grid = Arc::new(build_grid(&Domain::disc(), 0.05).unwrap());
    let sys = OperatorSystem::assemble(grid.clone(), params.kernel().unwrap(), params.lambda);
    let cfg = SolveConfig::default();
    let init = default_init(grid.clone());
    let sol = solve_least_energy(&sys, &params, &cfg, &init).unwrap();
    let lin = assemble_linearized(&sys, &sol.u, &params).unwrap();

    group.bench_function("disc-n1257-k4", |b| b.iter(|| eigen_solve(&lin, 4).unwrap()));

    group.finish();
}

criterion_group!(benches, bench_assembly, bench_solve, bench_spectrum);
criterion_main!(benches);
