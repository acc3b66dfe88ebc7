use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::network::TemporalGraph;
use crate::stats::percentile;
use crate::types::TaxpayerIdx;

/// Nodes at directed distance at most this are "close" (`d < 3`).
pub const CLOSE_DISTANCE: usize = 2;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CloseMetric {
    /// `min(d(i -> j), d(j -> i)) <= 2`.
    #[default]
    EitherDirection,
    /// `d(i -> j) <= 2`.
    OutOnly,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaNumerator {
    /// Sum over months of the number of close EFOS in that month.
    #[default]
    MonthlyMultiplicity,
    /// Number of distinct EFOS close in at least one month of the year.
    DistinctYearly,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProximityOptions {
    pub metric: CloseMetric,
    pub numerator: SigmaNumerator,
}

/// Yearly EFOS proximity index of one taxpayer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProximityIndex {
    pub node: TaxpayerIdx,
    pub year: i32,
    pub total_close_efos: usize,
    pub months_close: usize,
    pub sigma: f64,
    /// `sigma / max sigma of the year`; zero until [`normalize_and_select`] runs.
    pub sigma_hat: f64,
}

/// Local nodes within [`CLOSE_DISTANCE`] of `node` along out-edges (and
/// in-edges for [`CloseMetric::EitherDirection`]), excluding `node`.
fn neighborhood(g: &TemporalGraph, node: usize, metric: CloseMetric) -> Vec<u32> {
    let mut out: Vec<u32> = Vec::new();
    for &v in g.out_neighbors(node) {
        out.push(v);
        out.extend_from_slice(g.out_neighbors(v as usize));
    }
    if metric == CloseMetric::EitherDirection {
        for &v in g.in_neighbors(node) {
            out.push(v);
            out.extend_from_slice(g.in_neighbors(v as usize));
        }
    }
    out.sort_unstable();
    out.dedup();
    out.retain(|&v| v as usize != node);
    out
}

/// Close EFOS of `node` as local indices, ascending.
pub fn close_efos_set(g: &TemporalGraph, node: usize, efos: &[bool], metric: CloseMetric) -> Vec<u32> {
    let mut set = neighborhood(g, node, metric);
    set.retain(|&v| efos[v as usize]);
    set
}

/// Number of EFOS (per `efos` mask, excluding `node` itself) close to `node`.
pub fn close_efos_count(g: &TemporalGraph, node: usize, efos: &[bool], metric: CloseMetric) -> usize {
    close_efos_set(g, node, efos, metric).len()
}

/// [`close_efos_count`] for every node, in node order.
pub fn close_efos_counts(g: &TemporalGraph, efos: &[bool], metric: CloseMetric) -> Vec<usize> {
    (0..g.node_count()).into_par_iter().map(|u| close_efos_count(g, u, efos, metric)).collect()
}

fn monthly_close_sets(
    g: &TemporalGraph,
    efos: &(dyn Fn(TaxpayerIdx) -> bool + Sync),
    metric: CloseMetric,
) -> Vec<(TaxpayerIdx, Vec<TaxpayerIdx>)> {
    let mask = g.mask_where(efos);
    (0..g.node_count())
        .into_par_iter()
        .filter_map(|u| {
            let set = close_efos_set(g, u, &mask, metric);
            if set.is_empty() {
                None
            } else {
                Some((g.taxpayer(u), set.into_iter().map(|v| g.taxpayer(v as usize)).collect()))
            }
        })
        .collect()
}

#[derive(Default)]
struct Accum {
    total: usize,
    months: usize,
    distinct: BTreeSet<TaxpayerIdx>,
}

fn finish(node: TaxpayerIdx, year: i32, acc: Accum, numerator: SigmaNumerator) -> Option<ProximityIndex> {
    if acc.months == 0 {
        return None;
    }
    let total = match numerator {
        SigmaNumerator::MonthlyMultiplicity => acc.total,
        SigmaNumerator::DistinctYearly => acc.distinct.len(),
    };
    Some(ProximityIndex {
        node,
        year,
        total_close_efos: total,
        months_close: acc.months,
        sigma: total as f64 / acc.months as f64,
        sigma_hat: 0.0,
    })
}

/// Proximity index of one taxpayer over the monthly graphs of `year`.
/// `None` when the taxpayer was never close to an EFOS.
pub fn proximity_index(
    monthly: &[TemporalGraph],
    year: i32,
    node: TaxpayerIdx,
    efos: &(dyn Fn(TaxpayerIdx) -> bool + Sync),
    options: ProximityOptions,
) -> Option<ProximityIndex> {
    let mut acc = Accum::default();
    for g in monthly {
        let Some(local) = g.node_of(node) else { continue };
        let mask = g.mask_where(efos);
        let set = close_efos_set(g, local, &mask, options.metric);
        if !set.is_empty() {
            acc.months += 1;
            acc.total += set.len();
            acc.distinct.extend(set.iter().map(|&v| g.taxpayer(v as usize)));
        }
    }
    finish(node, year, acc, options.numerator)
}

/// Proximity indices of every taxpayer with a defined index, ascending by taxpayer.
pub fn proximity_indices(
    monthly: &[TemporalGraph],
    year: i32,
    efos: &(dyn Fn(TaxpayerIdx) -> bool + Sync),
    options: ProximityOptions,
) -> Vec<ProximityIndex> {
    let per_month: Vec<Vec<(TaxpayerIdx, Vec<TaxpayerIdx>)>> =
        monthly.par_iter().map(|g| monthly_close_sets(g, efos, options.metric)).collect();
    let mut acc: BTreeMap<TaxpayerIdx, Accum> = BTreeMap::new();
    for month in per_month {
        for (node, set) in month {
            let a = acc.entry(node).or_default();
            a.months += 1;
            a.total += set.len();
            if options.numerator == SigmaNumerator::DistinctYearly {
                a.distinct.extend(set);
            }
        }
    }
    acc.into_iter().filter_map(|(node, a)| finish(node, year, a, options.numerator)).collect()
}

fn check_threshold(theta: f64) -> Result<(), MetricsError> {
    if (0.0..=1.0).contains(&theta) {
        Ok(())
    } else {
        Err(MetricsError::ThresholdRange(theta.to_string()))
    }
}

/// Fills `sigma_hat = sigma / max sigma` and returns `{i : sigma_hat_i >= theta}`.
pub fn normalize_and_select(indices: &mut [ProximityIndex], theta: f64) -> Result<BTreeSet<TaxpayerIdx>, MetricsError> {
    check_threshold(theta)?;
    let max = indices.iter().map(|p| p.sigma).fold(f64::NEG_INFINITY, f64::max);
    if indices.is_empty() {
        return Err(MetricsError::EmptyIndices);
    }
    for p in indices.iter_mut() {
        p.sigma_hat = if max > 0.0 { p.sigma / max } else { 0.0 };
    }
    Ok(indices.iter().filter(|p| p.sigma_hat >= theta).map(|p| p.node).collect())
}

/// Taxpayers whose sigma is at or above the type-7 `q`-quantile of sigma.
pub fn quartile_cut(indices: &[ProximityIndex], q: f64) -> Result<BTreeSet<TaxpayerIdx>, MetricsError> {
    check_threshold(q)?;
    let sigmas: Vec<f64> = indices.iter().map(|p| p.sigma).collect();
    let cut = percentile(&sigmas, q).ok_or(MetricsError::EmptyIndices)?;
    Ok(indices.iter().filter(|p| p.sigma >= cut).map(|p| p.node).collect())
}

#[cfg(test)]
mod tests {
    use std::collections::VecDeque;

    use proptest::prelude::*;

    use super::*;
    use crate::network::NodeClass;

    fn pi(node: u32, sigma: f64) -> ProximityIndex {
        ProximityIndex { node: TaxpayerIdx(node), year: 2015, total_close_efos: 0, months_close: 1, sigma, sigma_hat: 0.0 }
    }

    fn mask(n: usize, efos: &[usize]) -> Vec<bool> {
        let mut m = vec![false; n];
        for &e in efos {
            m[e] = true;
        }
        m
    }

    #[test]
    fn out_distance_two_counts() {
        let g = TemporalGraph::from_adjacency(3, &[(0, 1), (1, 2)]);
        assert_eq!(close_efos_count(&g, 0, &mask(3, &[2]), CloseMetric::EitherDirection), 1);
    }

    #[test]
    fn distance_three_both_ways_is_not_close() {
        // 0 -> 1 -> 2 -> 3 -> 4 -> 5 -> 0: node 0 and EFOS 3 are 3 apart each way.
        let g = TemporalGraph::from_adjacency(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]);
        assert_eq!(close_efos_count(&g, 0, &mask(6, &[3]), CloseMetric::EitherDirection), 0);
    }

    #[test]
    fn single_edge_is_close_both_ways() {
        let g = TemporalGraph::from_adjacency(2, &[(0, 1)]);
        let both = mask(2, &[0, 1]);
        assert_eq!(close_efos_count(&g, 0, &both, CloseMetric::EitherDirection), 1);
        assert_eq!(close_efos_count(&g, 1, &both, CloseMetric::EitherDirection), 1);
        assert_eq!(close_efos_count(&g, 1, &both, CloseMetric::OutOnly), 0);
    }

    #[test]
    fn self_is_excluded() {
        let g = TemporalGraph::from_adjacency(2, &[(0, 1), (1, 0)]);
        assert_eq!(close_efos_count(&g, 0, &mask(2, &[0]), CloseMetric::EitherDirection), 0);
    }

    /// Three monthly graphs where node 0 reaches two EFOS, plus nine empty months.
    fn months_with_two_close() -> Vec<TemporalGraph> {
        let efos = |t: TaxpayerIdx| if t.0 >= 10 { NodeClass::DefinitiveEfos } else { NodeClass::Unclassified };
        let mut out = Vec::new();
        for m in 0..12 {
            let edges: Vec<(usize, usize)> = if m < 3 { vec![(0, 10), (11, 0), (5, 6)] } else { vec![(5, 6)] };
            let g = TemporalGraph::from_adjacency(12, &edges).with_classes(efos);
            out.push(g);
        }
        out
    }

    #[test]
    fn sigma_formula() {
        let months = months_with_two_close();
        let is_efos = |t: TaxpayerIdx| t.0 >= 10;
        let p = proximity_index(&months, 2015, TaxpayerIdx(0), &is_efos, ProximityOptions::default()).unwrap();
        assert_eq!((p.total_close_efos, p.months_close), (6, 3));
        assert_eq!(p.sigma, 2.0);
        let distinct = ProximityOptions { numerator: SigmaNumerator::DistinctYearly, ..Default::default() };
        let p = proximity_index(&months, 2015, TaxpayerIdx(0), &is_efos, distinct).unwrap();
        assert_eq!(p.sigma, 2.0 / 3.0);
        assert!(proximity_index(&months, 2015, TaxpayerIdx(5), &is_efos, ProximityOptions::default()).is_none());
        let all = proximity_indices(&months, 2015, &is_efos, ProximityOptions::default());
        assert!(all.iter().all(|p| p.node != TaxpayerIdx(5)));
        assert_eq!(all.iter().find(|p| p.node == TaxpayerIdx(0)).unwrap().sigma, 2.0);
    }

    #[test]
    fn normalize_examples() {
        let mut v = vec![pi(0, 4.0), pi(1, 2.0), pi(2, 1.0)];
        assert_eq!(normalize_and_select(&mut v, 1.0).unwrap(), BTreeSet::from([TaxpayerIdx(0)]));
        assert_eq!(normalize_and_select(&mut v, 0.0).unwrap().len(), 3);
        assert_eq!(
            normalize_and_select(&mut v, 0.5).unwrap(),
            BTreeSet::from([TaxpayerIdx(0), TaxpayerIdx(1)])
        );
        assert_eq!(v[1].sigma_hat, 0.5);
        assert_eq!(normalize_and_select(&mut [], 0.5), Err(MetricsError::EmptyIndices));
        assert!(normalize_and_select(&mut v, 1.5).is_err());
    }

    #[test]
    fn quartile_examples() {
        let v = vec![pi(0, 1.0), pi(1, 2.0), pi(2, 3.0), pi(3, 4.0)];
        assert_eq!(quartile_cut(&v, 0.75).unwrap(), BTreeSet::from([TaxpayerIdx(3)]));
        let flat = vec![pi(0, 2.0), pi(1, 2.0), pi(2, 2.0)];
        assert_eq!(quartile_cut(&flat, 0.75).unwrap().len(), 3);
        assert_eq!(quartile_cut(&[], 0.75), Err(MetricsError::EmptyIndices));
    }

    /// BFS distances from `src` along `adj`.
    fn bfs(adj: &[Vec<usize>], src: usize) -> Vec<usize> {
        let mut d = vec![usize::MAX; adj.len()];
        d[src] = 0;
        let mut q = VecDeque::from([src]);
        while let Some(u) = q.pop_front() {
            for &v in &adj[u] {
                if d[v] == usize::MAX {
                    d[v] = d[u] + 1;
                    q.push_back(v);
                }
            }
        }
        d
    }

    proptest! {
        #[test]
        fn counts_match_bfs_from_every_efos(
            edges in prop::collection::vec((0usize..60, 0usize..60), 0..180),
            efos_bits in prop::collection::vec(any::<bool>(), 60),
        ) {
            let n = 60;
            let g = TemporalGraph::from_adjacency(n, &edges);
            let m: Vec<bool> = efos_bits.to_vec();
            let mut fwd = vec![Vec::new(); n];
            let mut rev = vec![Vec::new(); n];
            for &(u, v) in &edges {
                if u != v { fwd[u].push(v); rev[v].push(u); }
            }
            let mut oracle = vec![0usize; n];
            for e in (0..n).filter(|&e| m[e]) {
                let from_e = bfs(&fwd, e); // d(e -> i)
                let to_e = bfs(&rev, e);   // d(i -> e)
                for i in 0..n {
                    if i != e && from_e[i].min(to_e[i]) <= CLOSE_DISTANCE {
                        oracle[i] += 1;
                    }
                }
            }
            prop_assert_eq!(close_efos_counts(&g, &m, CloseMetric::EitherDirection), oracle);
        }

        #[test]
        fn selection_invariant_under_scaling(sigmas in prop::collection::vec(1u32..50, 1..30), k in 1u32..20, theta in 0.0f64..=1.0) {
            let mut a: Vec<ProximityIndex> = sigmas.iter().enumerate().map(|(i, &s)| pi(i as u32, s as f64)).collect();
            let mut b: Vec<ProximityIndex> = sigmas.iter().enumerate().map(|(i, &s)| pi(i as u32, (s * k) as f64)).collect();
            prop_assert_eq!(normalize_and_select(&mut a, theta).unwrap(), normalize_and_select(&mut b, theta).unwrap());
        }
    }
}
