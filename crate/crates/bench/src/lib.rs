//! Shared fixtures for the benchmarks.

use efosnet::ingest::Dataset;
use efosnet::network::TemporalGraph;
use efosnet::seed;
use efosnet::synthgen::{generate, GroundTruth, SynthConfig};
use rand::Rng;

/// Random digraph on `n` nodes with a Hamiltonian cycle, so it is one SCC.
pub fn cyclic_digraph(n: usize, extra_per_node: usize, s: u64) -> TemporalGraph {
    let mut rng = seed::rng(s);
    let mut edges: Vec<(usize, usize)> = (0..n).map(|u| (u, (u + 1) % n)).collect();
    for u in 0..n {
        for _ in 0..extra_per_node {
            edges.push((u, rng.random_range(0..n)));
        }
    }
    TemporalGraph::from_adjacency(n, &edges)
}

pub fn small_economy(s: u64) -> (Dataset, GroundTruth) {
    generate(&SynthConfig { n_honest: 2000, n_efos: 60, n_rings: 10, seed: s, ..Default::default() })
        .expect("bench economy generates")
}
