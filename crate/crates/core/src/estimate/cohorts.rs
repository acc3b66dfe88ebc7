use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::report::CohortKind;
use crate::ingest::{Dataset, TaxpayerStatus, TaxpayerType, TxKind};
use crate::stats::quartiles;
use crate::types::{to_pesos, Centavos, MonthKey, TaxpayerIdx};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    ActiveSubtotal,
    CancelledTotal,
}

impl Variable {
    pub fn as_str(self) -> &'static str {
        match self {
            Variable::ActiveSubtotal => "active_subtotal",
            Variable::CancelledTotal => "cancelled_total",
        }
    }
}

/// Quartiles of `log10(pesos)` over the cohort's per-taxpayer monthly
/// amounts. Quartiles are `None` when every amount was zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortQuartiles {
    pub cohort: CohortKind,
    pub period: MonthKey,
    pub variable: Variable,
    pub n: usize,
    pub excluded_zero: usize,
    pub q1: Option<f64>,
    pub median: Option<f64>,
    pub q3: Option<f64>,
}

/// Per-taxpayer monthly income emission totals: `(active subtotal, cancelled total)`.
fn monthly_amounts(ds: &Dataset, members: &BTreeSet<TaxpayerIdx>) -> BTreeMap<(MonthKey, TaxpayerIdx), (Centavos, Centavos)> {
    let mut acc = BTreeMap::new();
    for &t in members {
        for row in ds.rows_emitted_by(t) {
            let r = ds.record(row);
            if r.kind != TxKind::Income {
                continue;
            }
            let e = acc.entry((r.period, t)).or_insert((0, 0));
            e.0 += r.active_subtotal();
            e.1 += r.cancelled_total;
        }
    }
    acc
}

fn summarize(cohort: CohortKind, period: MonthKey, variable: Variable, amounts: &[Centavos]) -> CohortQuartiles {
    let logs: Vec<f64> = amounts.iter().filter(|&&a| a > 0).map(|&a| to_pesos(a).log10()).collect();
    let q = quartiles(&logs);
    CohortQuartiles {
        cohort,
        period,
        variable,
        n: logs.len(),
        excluded_zero: amounts.len() - logs.len(),
        q1: q.map(|q| q.0),
        median: q.map(|q| q.1),
        q3: q.map(|q| q.2),
    }
}

pub fn cohort_distribution_summary(
    ds: &Dataset,
    cohorts: &BTreeMap<CohortKind, BTreeSet<TaxpayerIdx>>,
) -> Vec<CohortQuartiles> {
    let mut out = Vec::new();
    for (&cohort, members) in cohorts {
        let mut by_month: BTreeMap<MonthKey, (Vec<Centavos>, Vec<Centavos>)> = BTreeMap::new();
        for ((m, _), (sub, canc)) in monthly_amounts(ds, members) {
            let e = by_month.entry(m).or_default();
            e.0.push(sub);
            e.1.push(canc);
        }
        for (m, (sub, canc)) in by_month {
            out.push(summarize(cohort, m, Variable::ActiveSubtotal, &sub));
            out.push(summarize(cohort, m, Variable::CancelledTotal, &canc));
        }
    }
    out
}

/// `log10` pesos of each member's yearly active income subtotal; zeros dropped.
pub fn cohort_log_amounts(ds: &Dataset, members: &BTreeSet<TaxpayerIdx>, year: i32) -> Vec<f64> {
    let mut per: BTreeMap<TaxpayerIdx, Centavos> = BTreeMap::new();
    for ((m, t), (sub, _)) in monthly_amounts(ds, members) {
        if m.year == year {
            *per.entry(t).or_default() += sub;
        }
    }
    per.values().filter(|&&a| a > 0).map(|&a| to_pesos(a).log10()).collect()
}

/// Percentages by taxpayer type and by registry status. Taxpayers missing
/// from the registry fall under `without_info`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub n: usize,
    pub by_type: Vec<(String, f64)>,
    pub by_status: Vec<(String, f64)>,
}

fn percentages<K: Ord>(counts: BTreeMap<K, usize>, n: usize, name: impl Fn(&K) -> String) -> Vec<(String, f64)> {
    counts.iter().map(|(k, &c)| (name(k), 100.0 * c as f64 / n as f64)).collect()
}

pub fn taxpayer_breakdown(ds: &Dataset, suspects: &BTreeSet<TaxpayerIdx>) -> Breakdown {
    let n = suspects.len();
    if n == 0 {
        return Breakdown::default();
    }
    let mut types = BTreeMap::new();
    let mut statuses = BTreeMap::new();
    for &t in suspects {
        let r = ds.registry(t);
        *types.entry(r.taxpayer_type).or_insert(0) += 1;
        *statuses.entry(r.status).or_insert(0) += 1;
    }
    Breakdown {
        n,
        by_type: percentages(types, n, |k: &TaxpayerType| match k {
            TaxpayerType::Unknown => "without_info".to_string(),
            k => k.as_str().to_string(),
        }),
        by_status: percentages(statuses, n, |k: &TaxpayerStatus| match k {
            TaxpayerStatus::Unknown => "without_info".to_string(),
            k => k.as_str().to_string(),
        }),
    }
}
