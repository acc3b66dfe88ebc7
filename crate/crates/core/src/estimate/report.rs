use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::gap::vat_gap;
use crate::ingest::{Dataset, EfosLabel};
use crate::metrics::ProximityIndex;
use crate::types::{Centavos, TaxpayerId, TaxpayerIdx};

pub fn intersect_suspects<T: Ord + Clone>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> BTreeSet<T> {
    a.intersection(b).cloned().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CohortKind {
    DefinitiveEfos,
    AllegedEfos,
    Suspect,
    Unclassified,
}

impl CohortKind {
    pub const ALL: [CohortKind; 4] =
        [CohortKind::DefinitiveEfos, CohortKind::AllegedEfos, CohortKind::Suspect, CohortKind::Unclassified];

    pub fn as_str(self) -> &'static str {
        match self {
            CohortKind::DefinitiveEfos => "definitive_efos",
            CohortKind::AllegedEfos => "alleged_efos",
            CohortKind::Suspect => "suspect",
            CohortKind::Unclassified => "unclassified",
        }
    }

    pub fn parse(token: &str) -> Option<Self> {
        CohortKind::ALL.into_iter().find(|c| c.as_str() == token)
    }

    /// Labels win over the suspect list.
    pub fn of(label: Option<EfosLabel>, suspicious: bool) -> Self {
        match (label, suspicious) {
            (Some(EfosLabel::Definitive), _) => CohortKind::DefinitiveEfos,
            (Some(EfosLabel::Alleged), _) => CohortKind::AllegedEfos,
            (None, true) => CohortKind::Suspect,
            (None, false) => CohortKind::Unclassified,
        }
    }
}

/// Evidence gathered by earlier stages, keyed by taxpayer and year.
#[derive(Debug, Clone, Default)]
pub struct ReportInputs {
    pub probas: BTreeMap<(TaxpayerIdx, i32), f64>,
    pub suspects: BTreeSet<TaxpayerIdx>,
    pub close_counts: BTreeMap<(TaxpayerIdx, i32), usize>,
    pub proximity: Vec<ProximityIndex>,
}

/// One taxpayer-year of the suspect report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuspectRecord {
    pub id: TaxpayerId,
    pub year: i32,
    pub proba: Option<f64>,
    pub suspicious: bool,
    pub close_efos: Option<usize>,
    pub sigma: Option<f64>,
    pub sigma_hat: Option<f64>,
    pub vat_gap: Option<Centavos>,
    pub cohort: CohortKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SuspectReport {
    /// Ascending by id, then year.
    pub rows: Vec<SuspectRecord>,
}

impl SuspectReport {
    pub fn cohort_members(&self, cohort: CohortKind) -> BTreeSet<TaxpayerId> {
        self.rows.iter().filter(|r| r.cohort == cohort).map(|r| r.id.clone()).collect()
    }
}

/// A taxpayer-year appears when any stage produced evidence for it or the
/// taxpayer emitted income that year.
pub fn build_suspect_report(ds: &Dataset, inputs: &ReportInputs) -> SuspectReport {
    let years = ds.years();
    let sigma: BTreeMap<(TaxpayerIdx, i32), &ProximityIndex> =
        inputs.proximity.iter().map(|p| ((p.node, p.year), p)).collect();
    let mut keys: BTreeSet<(TaxpayerIdx, i32)> = BTreeSet::new();
    keys.extend(inputs.probas.keys());
    keys.extend(inputs.close_counts.keys());
    keys.extend(sigma.keys());
    let mut gaps: BTreeMap<(TaxpayerIdx, i32), Centavos> = BTreeMap::new();
    for t in ds.taxpayers() {
        for &y in &years {
            if let Ok(g) = vat_gap(ds, t, y) {
                gaps.insert((t, y), g.gap);
                keys.insert((t, y));
            }
        }
    }
    let mut rows: Vec<SuspectRecord> = keys
        .into_iter()
        .map(|(t, y)| {
            let suspicious = inputs.suspects.contains(&t);
            let p = sigma.get(&(t, y));
            SuspectRecord {
                id: ds.id(t).clone(),
                year: y,
                proba: inputs.probas.get(&(t, y)).copied(),
                suspicious,
                close_efos: inputs.close_counts.get(&(t, y)).copied(),
                sigma: p.map(|p| p.sigma),
                sigma_hat: p.map(|p| p.sigma_hat),
                vat_gap: gaps.get(&(t, y)).copied(),
                cohort: CohortKind::of(ds.label(t), suspicious),
            }
        })
        .collect();
    rows.sort_by(|a, b| a.id.cmp(&b.id).then(a.year.cmp(&b.year)));
    SuspectReport { rows }
}
