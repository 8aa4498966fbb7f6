use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use zonal_opf::desk::{north_sea_inputs, DESK_SEED};
use zonal_opf::nlp::ldl::{NodeRole, SymbolicLdl};
use zonal_opf::nlp::{solve, warm_start, SolverOptions, StartPoint};
use zonal_opf::opf::build_problem;
use zonal_opf::scenario::{fit_step_costs, run_loaded};
use zonal_opf::{RunOptions, ScenarioKind};

const STEP: i64 = 5868;

fn desk_step(c: &mut Criterion) {
    let inputs = north_sea_inputs(STEP..STEP + 24, DESK_SEED).unwrap();
    let opts = SolverOptions::default();
    let mut group = c.benchmark_group("desk_step");
    for scenario in [ScenarioKind::SI, ScenarioKind::SII, ScenarioKind::SIII] {
        let costs = fit_step_costs(&inputs.model, &inputs.curves, STEP, 50.0).unwrap();
        let problem = build_problem(&inputs.model, &costs, &inputs.profiles.step_inputs(STEP), scenario).unwrap();
        let flat = solve(&problem, &StartPoint::flat(&problem), &opts);
        assert!(flat.converged());
        group.bench_function(format!("{scenario}/flat"), |b| {
            b.iter(|| solve(&problem, &StartPoint::flat(&problem), &opts))
        });
        group.bench_function(format!("{scenario}/warm"), |b| {
            b.iter_batched(|| warm_start(&flat, &problem), |s| solve(&problem, &s, &opts), BatchSize::SmallInput)
        });
    }
    group.finish();
}

fn desk_day(c: &mut Criterion) {
    let inputs = north_sea_inputs(STEP..STEP + 24, DESK_SEED).unwrap();
    let opts = RunOptions::new(ScenarioKind::SII);
    let mut group = c.benchmark_group("desk_day");
    group.sample_size(10);
    group.bench_function("SII", |b| b.iter(|| run_loaded(&inputs, STEP..STEP + 24, &opts).unwrap()));
    group.finish();
}

fn fit(c: &mut Criterion) {
    let inputs = north_sea_inputs(STEP..STEP + 1, DESK_SEED).unwrap();
    c.bench_function("fit_step_costs", |b| {
        b.iter(|| fit_step_costs(&inputs.model, &inputs.curves, black_box(STEP), 50.0).unwrap())
    });
}

// saddle-point system on a k x k grid: Laplacian block plus one row per grid line
type Pattern = (usize, Vec<(usize, usize)>, Vec<f64>, Vec<NodeRole>);

fn saddle(k: usize) -> Pattern {
    let n = k * k;
    let mut entries = Vec::new();
    let mut values = Vec::new();
    for i in 0..k {
        for j in 0..k {
            let v = i * k + j;
            entries.push((v, v));
            values.push(4.0);
            if j + 1 < k {
                entries.push((v, v + 1));
                values.push(-1.0);
            }
            if i + 1 < k {
                entries.push((v, v + k));
                values.push(-1.0);
            }
            entries.push((n + i, v));
            values.push(1.0);
        }
    }
    let mut roles = vec![NodeRole::Primal; n];
    roles.extend(std::iter::repeat_n(NodeRole::Constraint, k));
    (n + k, entries, values, roles)
}

fn ldl(c: &mut Criterion) {
    let (n, entries, values, roles) = saddle(40);
    let mut group = c.benchmark_group("ldl");
    group.bench_function("symbolic", |b| b.iter(|| SymbolicLdl::new(n, &entries, &roles)));
    let sym = SymbolicLdl::new(n, &entries, &roles);
    group.bench_function("factor", |b| b.iter(|| sym.factor(black_box(&values), 1e-12).unwrap()));
    let f = sym.factor(&values, 1e-12).unwrap();
    let rhs = vec![1.0; n];
    group.bench_function("solve", |b| b.iter(|| f.solve(black_box(&rhs), 1)));
    group.finish();
}

criterion_group!(benches, desk_step, desk_day, fit, ldl);
criterion_main!(benches);
