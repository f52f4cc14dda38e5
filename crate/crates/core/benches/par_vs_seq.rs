use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use qconsensus::density::monte_carlo_density;
use qconsensus::graph::NetworkGraph;
use qconsensus::par::Exec;
use qconsensus::planner::{solve_finite, solve_infinite, GridSpec, Power, SolveOptions};
use qconsensus::pqp::NetworkState;

fn density(c: &mut Criterion) {
    let g = NetworkGraph::complete(6).unwrap();
    let init = NetworkState::from_pi_units(&[0.0, 0.0, 0.0, 0.5, 0.5, 0.5]).unwrap();
    let mut group = c.benchmark_group("monte_carlo_density");
    group.sample_size(10);
    for &exec in Exec::available() {
        group.bench_with_input(BenchmarkId::from_parameter(exec.name()), &exec, |b, &exec| {
            b.iter(|| monte_carlo_density(&g, &init, 20, 20_000, 7, exec).unwrap())
        });
    }
    group.finish();
}

fn planner(c: &mut Criterion) {
    let spec = GridSpec::new(4).unwrap();
    let mut group = c.benchmark_group("planner");
    group.sample_size(10);
    for &exec in Exec::available() {
        let opts = SolveOptions { exec, ..Default::default() };
        group.bench_with_input(BenchmarkId::new("finite_n3_k4_t3", exec.name()), &opts, |b, opts| {
            b.iter(|| solve_finite(3, spec, 3, Power::Two, *opts).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("infinite_n2_k4", exec.name()), &opts, |b, opts| {
            b.iter(|| solve_infinite(2, spec, 1e-10, 100_000, *opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, density, planner);
criterion_main!(benches);
