use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use zoneopt::problems::Problem;
use zoneopt::szo::{self, EstimatorKey, OracleSpec};
use zoneopt::zone_m::{self, MnetConfig, MnetState, PenaltySchedule, StepMode};
use zoneopt::zone_s::{self, SnetConfig};
use zoneopt::{prox, GraphOperators};
use zoneopt_bench::{iterate, mesh, quadratic};

fn estimator(c: &mut Criterion) {
    let problem = quadratic(1, 100);
    let x = vec![0.01; 100];
    let mut group = c.benchmark_group("estimate");
    for batch in [10, 100] {
        let spec = OracleSpec::new(0.01, 0.03, batch);
        group.bench_with_input(BenchmarkId::from_parameter(batch), &spec, |b, spec| {
            b.iter(|| szo::estimate(&problem.locals[0], black_box(&x), spec, EstimatorKey::new(1, 0, 0)))
        });
    }
    group.finish();
}

fn projection(c: &mut Criterion) {
    let u: Vec<f64> = iterate(1, 1000).iter().map(|v| 3.0 * v).collect();
    c.bench_function("project_l1_ball/1000", |b| {
        b.iter(|| prox::project_l1_ball(black_box(&u), 5.0))
    });
}

fn graph_operators(c: &mut Criterion) {
    let topo = mesh(80);
    c.bench_function("graph_operators/80", |b| {
        b.iter(|| GraphOperators::derive(black_box(&topo)))
    });
    let z = iterate(80, 1);
    let dense = GraphOperators::derive(&topo).signed_laplacian;
    c.bench_function("laplacian_blockwise/80", |b| {
        b.iter(|| topo.incidence_transpose_apply(&topo.incidence_apply(black_box(&z))))
    });
    c.bench_function("laplacian_dense/80", |b| b.iter(|| &dense * black_box(&z)));
}

fn mesh_round(c: &mut Criterion) {
    let topo = mesh(20);
    let problem = Problem::make_sigmoid_log(20, 1);
    let mut group = c.benchmark_group("zone_m_round");
    for mode in [StepMode::Matrix, StepMode::Distributed] {
        let cfg = MnetConfig {
            schedule: PenaltySchedule::Constant(10.0),
            oracle: OracleSpec::new(0.01, 0.03, 100),
            horizon: 1,
            stride: 1,
            mode,
            potential: None,
            seed: 1,
        };
        group.bench_function(format!("{mode:?}"), |b| {
            b.iter_batched(
                || MnetState::initialize(&topo, mode, 1),
                |mut state| zone_m::step(&mut state, &problem, &topo, &cfg),
                criterion::BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

fn star_round(c: &mut Criterion) {
    let problem = quadratic(10, 100);
    let cfg = SnetConfig::theoretical(&problem, OracleSpec::new(0.01, 0.03, 100), 1, 1).unwrap();
    let state = zone_s::SnetState::initialize(&problem, zone_s::initial_point(&problem, 1), &cfg).unwrap();
    c.bench_function("zone_s_round", |b| {
        b.iter_batched(
            || state.clone(),
            |mut s| zone_s::step(&mut s, &problem, &cfg),
            criterion::BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, estimator, projection, graph_operators, mesh_round, star_round);
criterion_main!(benches);
