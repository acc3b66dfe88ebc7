use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{EdgePayload, NetworkError, NodeClass, Slice, TemporalGraph};
use crate::ingest::{Dataset, TxKind};
use crate::stats::percentile_sorted;
use crate::types::{MonthKey, TaxpayerIdx};

/// Which record kinds become network edges.
///
/// `IncomeOnly` assumes each invoice is present once as the emitter's income
/// (an outcome row, if any, mirrors it). `All` is for corpora where income
/// and outcome rows are distinct flows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKinds {
    #[default]
    IncomeOnly,
    All,
}

impl EdgeKinds {
    #[inline]
    pub fn admits(self, kind: TxKind) -> bool {
        match self {
            EdgeKinds::IncomeOnly => kind == TxKind::Income,
            EdgeKinds::All => true,
        }
    }
}

/// What the yearly transaction threshold applies to.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinTxScope {
    /// Per edge: the yearly tx count on the edge itself.
    #[default]
    Edge,
    /// Per node: the labeled endpoint's yearly tx count over all its edges.
    Node,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearlyOptions {
    pub min_tx: u64,
    pub scope: MinTxScope,
    pub kinds: EdgeKinds,
}

impl Default for YearlyOptions {
    fn default() -> Self {
        YearlyOptions { min_tx: 10, scope: MinTxScope::Edge, kinds: EdgeKinds::IncomeOnly }
    }
}

fn class_of(ds: &Dataset) -> impl Fn(TaxpayerIdx) -> NodeClass + '_ {
    move |t| NodeClass::from_label(ds.label(t))
}

/// Yearly aggregated edges of `year` (self-loops excluded).
fn yearly_edges(ds: &Dataset, year: i32, kinds: EdgeKinds) -> HashMap<(TaxpayerIdx, TaxpayerIdx), EdgePayload> {
    let mut edges: HashMap<(TaxpayerIdx, TaxpayerIdx), EdgePayload> = HashMap::new();
    for row in ds.rows_in_year(year) {
        let r = ds.record(row);
        if !kinds.admits(r.kind) || r.emitter == r.receiver {
            continue;
        }
        let e = edges.entry((r.emitter, r.receiver)).or_default();
        e.subtotal += r.subtotal;
        e.tx_count += r.tx_count;
    }
    edges
}

/// Network of `year` restricted to edges incident to a labeled taxpayer
/// that meets the yearly transaction threshold.
pub fn build_yearly_efos_network(ds: &Dataset, year: i32, options: &YearlyOptions) -> TemporalGraph {
    let edges = yearly_edges(ds, year, options.kinds);
    let node_tx: HashMap<TaxpayerIdx, u64> = match options.scope {
        MinTxScope::Edge => HashMap::new(),
        MinTxScope::Node => {
            let mut totals = HashMap::new();
            for (&(u, v), p) in &edges {
                for t in [u, v] {
                    if ds.is_efos(t) {
                        *totals.entry(t).or_insert(0) += p.tx_count;
                    }
                }
            }
            totals
        }
    };
    let qualifies = |t: TaxpayerIdx, p: &EdgePayload| {
        ds.is_efos(t)
            && match options.scope {
                MinTxScope::Edge => p.tx_count >= options.min_tx,
                MinTxScope::Node => node_tx.get(&t).copied().unwrap_or(0) >= options.min_tx,
            }
    };
    let kept = edges.into_iter().filter(|((u, v), p)| qualifies(*u, p) || qualifies(*v, p)).map(|((u, v), p)| (u, v, p));
    TemporalGraph::from_edges(Slice::Year(year), kept, class_of(ds))
}

/// Interquartile interval of the amounts labeled taxpayers invoiced in one month.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmountRegime {
    pub period: MonthKey,
    /// 25th percentile of subtotals, centavos (type-7, may be fractional).
    pub q1: f64,
    /// 75th percentile of subtotals, centavos.
    pub q3: f64,
    /// Number of records the quartiles were computed from.
    pub n_records: usize,
}

impl AmountRegime {
    /// Closed-interval membership.
    #[inline]
    pub fn contains(&self, subtotal: i64) -> bool {
        let s = subtotal as f64;
        self.q1 <= s && s <= self.q3
    }
}

/// Monthly regime from every record emitted by a definitive or alleged
/// taxpayer in `period`.
pub fn compute_activity_regime(ds: &Dataset, period: MonthKey, kinds: EdgeKinds) -> Result<AmountRegime, NetworkError> {
    let mut amounts: Vec<f64> = ds
        .rows_in(period)
        .map(|row| ds.record(row))
        .filter(|r| kinds.admits(r.kind) && r.emitter != r.receiver && ds.is_efos(r.emitter))
        .map(|r| r.subtotal as f64)
        .collect();
    if amounts.is_empty() {
        return Err(NetworkError::NoEfosActivity(period));
    }
    amounts.sort_by(f64::total_cmp);
    Ok(AmountRegime {
        period,
        q1: percentile_sorted(&amounts, 0.25).expect("non-empty"),
        q3: percentile_sorted(&amounts, 0.75).expect("non-empty"),
        n_records: amounts.len(),
    })
}

/// Monthly network over all taxpayers keeping only edges whose aggregated
/// subtotal lies in `[regime.q1, regime.q3]`.
pub fn build_monthly_network(
    ds: &Dataset,
    regime: &AmountRegime,
    period: MonthKey,
    kinds: EdgeKinds,
) -> Result<TemporalGraph, NetworkError> {
    if regime.period != period {
        return Err(NetworkError::PeriodMismatch { regime: regime.period, requested: period });
    }
    let mut edges: HashMap<(TaxpayerIdx, TaxpayerIdx), EdgePayload> = HashMap::new();
    for row in ds.rows_in(period) {
        let r = ds.record(row);
        if !kinds.admits(r.kind) || r.emitter == r.receiver {
            continue;
        }
        let e = edges.entry((r.emitter, r.receiver)).or_default();
        e.subtotal += r.subtotal;
        e.tx_count += r.tx_count;
    }
    let kept = edges.into_iter().filter(|(_, p)| regime.contains(p.subtotal)).map(|((u, v), p)| (u, v, p));
    Ok(TemporalGraph::from_edges(Slice::Month(period), kept, class_of(ds)))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use proptest::prelude::*;

    use super::*;
    use crate::ingest::{build_dataset, EfosLabel, LabelRecord, TransactionRecord};
    use crate::types::TaxpayerId;

    fn rec(e: &str, r: &str, m: u8, n: u64, sub: i64) -> TransactionRecord {
        TransactionRecord {
            emitter: TaxpayerId::new(e).unwrap(),
            receiver: TaxpayerId::new(r).unwrap(),
            period: MonthKey::new(2015, m).unwrap(),
            kind: TxKind::Income,
            tx_count: n,
            subtotal: sub,
            vat: 0,
            total: sub,
            cancelled_total: 0,
        }
    }

    fn labels(ids: &[&str]) -> BTreeMap<TaxpayerId, LabelRecord> {
        ids.iter()
            .map(|s| {
                let id = TaxpayerId::new(s).unwrap();
                (id.clone(), LabelRecord { id, label: EfosLabel::Definitive })
            })
            .collect()
    }

    fn ds(rows: &[TransactionRecord], efos: &[&str]) -> Dataset {
        build_dataset(rows, &BTreeMap::new(), &labels(efos), &BTreeMap::new())
    }

    #[test]
    fn yearly_threshold_on_edge_totals() {
        let rows: Vec<_> = (1..=12).map(|m| rec("e", "b", m, 1, 100)).collect();
        let g = build_yearly_efos_network(&ds(&rows, &["e"]), 2015, &YearlyOptions::default());
        assert_eq!(g.edge_count(), 1);

        let rows: Vec<_> = (1..=9).map(|m| rec("e", "b", m, 1, 100)).collect();
        let g = build_yearly_efos_network(&ds(&rows, &["e"]), 2015, &YearlyOptions::default());
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn yearly_requires_labeled_endpoint() {
        let rows = vec![rec("a", "b", 1, 50, 100), rec("b", "e", 1, 50, 100)];
        let g = build_yearly_efos_network(&ds(&rows, &["e"]), 2015, &YearlyOptions::default());
        assert_eq!(g.edge_count(), 1);
        assert!(g.is_efos(g.node_of(g.taxpayers()[1]).unwrap()));
    }

    #[test]
    fn node_scope_counts_all_incident_edges() {
        // 6 + 6 transactions over two edges: node-level passes, edge-level does not.
        let rows = vec![rec("e", "a", 1, 6, 100), rec("b", "e", 2, 6, 100)];
        let d = ds(&rows, &["e"]);
        let edge = build_yearly_efos_network(&d, 2015, &YearlyOptions::default());
        assert_eq!(edge.edge_count(), 0);
        let node =
            build_yearly_efos_network(&d, 2015, &YearlyOptions { scope: MinTxScope::Node, ..Default::default() });
        assert_eq!(node.edge_count(), 2);
    }

    #[test]
    fn regime_quartiles() {
        let rows = vec![rec("e", "a", 1, 1, 100), rec("e", "b", 1, 1, 200), rec("e", "c", 1, 1, 300), rec("e", "d", 1, 1, 400)];
        let r = compute_activity_regime(&ds(&rows, &["e"]), MonthKey::new(2015, 1).unwrap(), EdgeKinds::IncomeOnly).unwrap();
        assert_eq!((r.q1, r.q3), (175.0, 325.0));

        let rows = vec![rec("e", "a", 1, 1, 500)];
        let r = compute_activity_regime(&ds(&rows, &["e"]), MonthKey::new(2015, 1).unwrap(), EdgeKinds::IncomeOnly).unwrap();
        assert_eq!((r.q1, r.q3), (500.0, 500.0));

        let err = compute_activity_regime(&ds(&rows, &[]), MonthKey::new(2015, 1).unwrap(), EdgeKinds::IncomeOnly);
        assert_eq!(err, Err(NetworkError::NoEfosActivity(MonthKey::new(2015, 1).unwrap())));
    }

    #[test]
    fn monthly_filter_is_closed_interval() {
        let period = MonthKey::new(2015, 1).unwrap();
        let rows = vec![rec("a", "b", 1, 1, 175), rec("b", "c", 1, 1, 326), rec("c", "a", 1, 1, 325)];
        let d = ds(&rows, &[]);
        let regime = AmountRegime { period, q1: 175.0, q3: 325.0, n_records: 4 };
        let g = build_monthly_network(&d, &regime, period, EdgeKinds::IncomeOnly).unwrap();
        assert_eq!(g.edge_count(), 2);
        let other = AmountRegime { period: MonthKey::new(2015, 2).unwrap(), ..regime };
        assert!(build_monthly_network(&d, &other, period, EdgeKinds::IncomeOnly).is_err());
    }

    #[test]
    fn outcome_rows_only_with_all_kinds() {
        let mut r = rec("e", "b", 1, 20, 100);
        r.kind = TxKind::Outcome;
        let d = ds(&[r], &["e"]);
        assert_eq!(build_yearly_efos_network(&d, 2015, &YearlyOptions::default()).edge_count(), 0);
        let all = YearlyOptions { kinds: EdgeKinds::All, ..Default::default() };
        assert_eq!(build_yearly_efos_network(&d, 2015, &all).edge_count(), 1);
    }

    fn random_rows() -> impl Strategy<Value = Vec<TransactionRecord>> {
        prop::collection::vec((0u8..8, 0u8..8, 1u8..=3, 1u64..8, 1i64..1000), 1..80).prop_map(|raw| {
            raw.into_iter().map(|(e, r, m, n, s)| rec(&format!("n{e}"), &format!("n{r}"), m, n, s)).collect()
        })
    }

    proptest! {
        #[test]
        fn regime_filter_edges_inside_and_monotone(rows in random_rows(), lo in 0.0f64..500.0, w in 0.0f64..500.0, extra in 0.0f64..300.0) {
            let d = ds(&rows, &["n0", "n1"]);
            let period = MonthKey::new(2015, 1).unwrap();
            let narrow = AmountRegime { period, q1: lo, q3: lo + w, n_records: 1 };
            let wide = AmountRegime { period, q1: (lo - extra).max(0.0), q3: lo + w + extra, n_records: 1 };
            let gn = build_monthly_network(&d, &narrow, period, EdgeKinds::IncomeOnly).unwrap();
            let gw = build_monthly_network(&d, &wide, period, EdgeKinds::IncomeOnly).unwrap();
            for (u, v, p) in gn.edges() {
                prop_assert!(narrow.contains(p.subtotal));
                let (tu, tv) = (gn.taxpayer(u), gn.taxpayer(v));
                prop_assert!(gw.edge(gw.node_of(tu).unwrap(), gw.node_of(tv).unwrap()).is_some());
            }
        }

        #[test]
        fn raising_min_tx_only_removes_edges(rows in random_rows(), t in 1u64..30) {
            let d = ds(&rows, &["n0", "n3"]);
            let g1 = build_yearly_efos_network(&d, 2015, &YearlyOptions { min_tx: 1, ..Default::default() });
            let gt = build_yearly_efos_network(&d, 2015, &YearlyOptions { min_tx: t, ..Default::default() });
            // min_tx = 1 keeps every labeled-incident income edge
            let expected = yearly_edges(&d, 2015, EdgeKinds::IncomeOnly)
                .keys()
                .filter(|(u, v)| d.is_efos(*u) || d.is_efos(*v))
                .count();
            prop_assert_eq!(g1.edge_count(), expected);
            for (u, v, _) in gt.edges() {
                let (tu, tv) = (gt.taxpayer(u), gt.taxpayer(v));
                prop_assert!(g1.edge(g1.node_of(tu).unwrap(), g1.node_of(tv).unwrap()).is_some());
            }
        }
    }
}
