use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use efosnet::metrics::reach_profiles;
use efosnet::network::{build_yearly_efos_network, strongly_connected_components, YearlyOptions};
use efosnet_bench::{cyclic_digraph, small_economy};
use std::hint::black_box;

fn scc(c: &mut Criterion) {
    let mut group = c.benchmark_group("scc");
    for n in [1_000, 10_000, 100_000] {
        let g = cyclic_digraph(n, 3, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &g, |b, g| b.iter(|| strongly_connected_components(black_box(g))));
    }
    group.finish();
}

fn reach(c: &mut Criterion) {
    let mut group = c.benchmark_group("reach_d10");
    group.sample_size(20);
    for n in [500, 2_000] {
        let g = cyclic_digraph(n, 2, 2);
        let nodes = g.taxpayers().to_vec();
        group.bench_with_input(BenchmarkId::from_parameter(n), &g, |b, g| b.iter(|| reach_profiles(g, &nodes, 10).unwrap()));
    }
    group.finish();
}

fn yearly_network(c: &mut Criterion) {
    let (ds, _) = small_economy(3);
    c.bench_function("yearly_efos_network", |b| b.iter(|| build_yearly_efos_network(&ds, 2017, &YearlyOptions::default())));
}

criterion_group!(benches, scc, reach, yearly_network);
criterion_main!(benches);
