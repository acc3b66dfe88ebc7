use std::collections::VecDeque;

use rayon::prelude::*;

use super::MetricsError;
use crate::network::TemporalGraph;
use crate::types::TaxpayerIdx;

pub const DEFAULT_MAX_DISTANCE: usize = 10;

/// Fraction of the component within directed distance `d` of one node,
/// for `d = 1..=d_max` (`values[d - 1]`). The node itself counts (`d_ii = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct ReachProfile {
    pub node: TaxpayerIdx,
    pub values: Vec<f64>,
    pub scc_size: usize,
}

impl ReachProfile {
    pub fn at(&self, d: usize) -> f64 {
        self.values[d - 1]
    }
}

/// Counts of nodes at exact distance `0..=d_max` from `src` along out-edges.
fn bfs_level_counts(g: &TemporalGraph, src: usize, d_max: usize, dist: &mut Vec<u32>, queue: &mut VecDeque<usize>) -> Vec<usize> {
    const UNSEEN: u32 = u32::MAX;
    dist.clear();
    dist.resize(g.node_count(), UNSEEN);
    queue.clear();
    let mut levels = vec![0usize; d_max + 1];
    dist[src] = 0;
    levels[0] = 1;
    queue.push_back(src);
    while let Some(u) = queue.pop_front() {
        let du = dist[u] as usize;
        if du == d_max {
            continue;
        }
        for &v in g.out_neighbors(u) {
            let v = v as usize;
            if dist[v] == UNSEEN {
                dist[v] = du as u32 + 1;
                levels[du + 1] += 1;
                queue.push_back(v);
            }
        }
    }
    levels
}

fn profile_from_levels(node: TaxpayerIdx, levels: &[usize], n: usize) -> ReachProfile {
    let mut acc = levels[0];
    let values = levels[1..]
        .iter()
        .map(|&c| {
            acc += c;
            acc as f64 / n as f64
        })
        .collect();
    ReachProfile { node, values, scc_size: n }
}

/// Reach profile of `node` inside `g_scc` (normally the largest-SCC subgraph).
pub fn reach(g_scc: &TemporalGraph, node: TaxpayerIdx, d_max: usize) -> Result<ReachProfile, MetricsError> {
    if d_max == 0 {
        return Err(MetricsError::ZeroDistance);
    }
    let local = g_scc.node_of(node).ok_or(MetricsError::NodeNotInScc(node))?;
    let levels = bfs_level_counts(g_scc, local, d_max, &mut Vec::new(), &mut VecDeque::new());
    Ok(profile_from_levels(node, &levels, g_scc.node_count()))
}

/// Reach profiles of many nodes, computed in parallel, returned in input order.
pub fn reach_profiles(g_scc: &TemporalGraph, nodes: &[TaxpayerIdx], d_max: usize) -> Result<Vec<ReachProfile>, MetricsError> {
    if d_max == 0 {
        return Err(MetricsError::ZeroDistance);
    }
    let locals: Vec<usize> = nodes
        .iter()
        .map(|&t| g_scc.node_of(t).ok_or(MetricsError::NodeNotInScc(t)))
        .collect::<Result<_, _>>()?;
    let n = g_scc.node_count();
    Ok(locals
        .par_iter()
        .zip(nodes.par_iter())
        .map_init(
            || (Vec::new(), VecDeque::new()),
            |(dist, queue), (&local, &t)| profile_from_levels(t, &bfs_level_counts(g_scc, local, d_max, dist, queue), n),
        )
        .collect())
}

/// Mean reach of a node set at each distance `1..=d_max`.
pub fn mean_reach(g_scc: &TemporalGraph, nodes: &[TaxpayerIdx], d_max: usize) -> Result<Vec<f64>, MetricsError> {
    if nodes.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let profiles = reach_profiles(g_scc, nodes, d_max)?;
    let mut sums = vec![0.0; d_max];
    // Sequential reduction in input order keeps the result thread-count independent.
    for p in &profiles {
        for (s, v) in sums.iter_mut().zip(&p.values) {
            *s += v;
        }
    }
    Ok(sums.into_iter().map(|s| s / nodes.len() as f64).collect())
}
