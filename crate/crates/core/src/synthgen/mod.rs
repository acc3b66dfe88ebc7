//! Seeded synthetic economies with planted invoice-mill rings.
//!
//! Internal node numbering: `0..n_efos` are EFOS (rings first, ring `r`
//! holding `r * ring_size..(r + 1) * ring_size` in cycle order), the rest
//! are honest taxpayers. Public ids are assigned through a seeded
//! permutation so id order carries no role information.

mod config;

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, LogNormal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{
    build_dataset, Dataset, EfosLabel, LabelRecord, TaxStatement, TaxpayerRecord, TaxpayerStatus, TaxpayerType,
    TransactionRecord, TxKind,
};
use crate::seed::{self, StageRng};
use crate::types::{Centavos, MonthKey, TaxpayerId};

pub use config::{AmountDist, SynthConfig};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SynthError {
    #[error("invalid generator config: {0}")]
    ConfigInvalid(String),
}

/// What the generator planted, for scoring downstream stages.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub efos_ids: BTreeSet<TaxpayerId>,
    pub ring_membership: BTreeMap<TaxpayerId, usize>,
    pub colluder_ids: BTreeSet<TaxpayerId>,
    /// Ring members in cycle order.
    pub rings: Vec<Vec<TaxpayerId>>,
    /// Months in which each ring fired.
    pub ring_active: Vec<Vec<MonthKey>>,
    /// Ring members each colluder invoices with.
    pub colluder_contacts: BTreeMap<TaxpayerId, Vec<TaxpayerId>>,
    /// Nominal VAT minus declared VAT, per evader and year.
    pub underreported_vat: BTreeMap<TaxpayerId, BTreeMap<i32, Centavos>>,
}

impl GroundTruth {
    pub fn underreported(&self, id: &TaxpayerId, year: i32) -> Centavos {
        self.underreported_vat.get(id).and_then(|y| y.get(&year)).copied().unwrap_or(0)
    }
}

/// Raw input tables as the four standard files would hold them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynthTables {
    pub transactions: Vec<TransactionRecord>,
    pub registry: BTreeMap<TaxpayerId, TaxpayerRecord>,
    pub labels: BTreeMap<TaxpayerId, LabelRecord>,
    pub statements: BTreeMap<(TaxpayerId, i32), TaxStatement>,
}

impl SynthTables {
    pub fn to_dataset(&self) -> Dataset {
        build_dataset(&self.transactions, &self.registry, &self.labels, &self.statements)
    }
}

pub fn generate(config: &SynthConfig) -> Result<(Dataset, GroundTruth), SynthError> {
    let (tables, truth) = generate_tables(config)?;
    Ok((tables.to_dataset(), truth))
}

/// Per-month edge accumulator keyed by `(month, emitter, receiver, kind)`.
type EdgeKey = (usize, u32, u32, TxKind);
type EdgeTotals = BTreeMap<EdgeKey, (u64, Centavos)>;

struct Roles {
    n: usize,
    n_efos: usize,
    rings: Vec<Vec<u32>>,
    large: Vec<u32>,
    is_large: Vec<bool>,
    /// `(colluder, ring, contacts)`.
    colluders: Vec<(u32, usize, Vec<u32>)>,
}

fn assign_roles(c: &SynthConfig, rng: &mut StageRng) -> Roles {
    let n = c.n_honest + c.n_efos;
    let rings: Vec<Vec<u32>> = (0..c.n_rings)
        .map(|r| ((r * c.ring_size) as u32..((r + 1) * c.ring_size) as u32).collect())
        .collect();
    let mut honest: Vec<u32> = (c.n_efos as u32..n as u32).collect();
    honest.shuffle(rng);
    let n_large = ((c.large_firm_share * c.n_honest as f64).round() as usize).min(c.n_honest);
    let mut is_large = vec![false; n];
    let mut large: Vec<u32> = honest[..n_large].to_vec();
    large.sort_unstable();
    for &u in &large {
        is_large[u as usize] = true;
    }
    // Colluders come from the large-firm pool first, then from the rest.
    let mut colluders = Vec::new();
    let mut pool = honest.iter().copied();
    for (r, ring) in rings.iter().enumerate() {
        for _ in 0..c.edos_per_ring {
            let who = pool.next().expect("validated: enough honest taxpayers");
            let mut contacts: Vec<u32> =
                index::sample(rng, ring.len(), c.colluder_contacts).into_iter().map(|i| ring[i]).collect();
            contacts.sort_unstable();
            colluders.push((who, r, contacts));
        }
    }
    Roles { n, n_efos: c.n_efos, rings, large, is_large, colluders }
}

/// EFOS left without a label. Ring positions are picked so that no two
/// unlabeled members are adjacent in the cycle while that is possible.
fn choose_unlabeled(c: &SynthConfig, rng: &mut StageRng) -> BTreeSet<u32> {
    let target = c.n_efos - (c.labeled_fraction * c.n_efos as f64).round() as usize;
    let ring_of = |u: u32| (u as usize) < c.n_rings * c.ring_size;
    let mut order: Vec<u32> = (0..c.n_efos as u32).collect();
    order.shuffle(rng);
    let mut out = BTreeSet::new();
    for &u in &order {
        if out.len() == target {
            break;
        }
        if ring_of(u) {
            let s = c.ring_size as u32;
            let base = u - u % s;
            let prev = base + (u % s + s - 1) % s;
            let next = base + (u % s + 1) % s;
            if out.contains(&prev) || out.contains(&next) {
                continue;
            }
        }
        out.insert(u);
    }
    for &u in &order {
        if out.len() == target {
            break;
        }
        out.insert(u);
    }
    out
}

fn pesos_to_centavos(pesos: f64) -> Centavos {
    ((pesos * 100.0).round() as Centavos).max(1)
}

struct Amounts {
    honest: LogNormal<f64>,
    large: LogNormal<f64>,
    efos: LogNormal<f64>,
}

impl Amounts {
    fn new(c: &SynthConfig) -> Self {
        let ln = |d: AmountDist| LogNormal::new(d.mu, d.sigma).expect("validated lognormal");
        Amounts { honest: ln(c.honest_amount), large: ln(c.large_firm_amount), efos: ln(c.efos_amount) }
    }
}

fn add_edge(edges: &mut EdgeTotals, key: EdgeKey, tx: u64, amount: Centavos) {
    let e = edges.entry(key).or_insert((0, 0));
    e.0 += tx;
    e.1 += amount;
}

fn random_other(rng: &mut StageRng, n: usize, not: u32) -> u32 {
    let v = rng.random_range(0..n as u32 - 1);
    if v >= not {
        v + 1
    } else {
        v
    }
}

fn plant_edges(c: &SynthConfig, roles: &Roles, rng: &mut StageRng) -> (EdgeTotals, Vec<Vec<MonthKey>>) {
    let amounts = Amounts::new(c);
    let degree = (c.honest_degree > 0.0).then(|| Poisson::new(c.honest_degree).expect("validated degree"));
    let mut edges = BTreeMap::new();
    let mut ring_active = vec![Vec::new(); c.n_rings];
    let income = TxKind::Income;

    for (m, &month) in c.months.iter().enumerate() {
        let uplift = if month.is_december() { c.december_uplift } else { 1.0 };
        let efos_amount = |rng: &mut StageRng| pesos_to_centavos(amounts.efos.sample(rng) * uplift);

        let mut active = vec![false; c.n_rings];
        for (r, ring) in roles.rings.iter().enumerate() {
            if !rng.random_bool(c.ring_activity) {
                continue;
            }
            active[r] = true;
            ring_active[r].push(month);
            for k in 0..ring.len() {
                let (u, v) = (ring[k], ring[(k + 1) % ring.len()]);
                let tx = rng.random_range(1..=12);
                let a = efos_amount(rng);
                add_edge(&mut edges, (m, u, v, income), tx, a);
            }
        }
        for b in 0..c.inter_ring_bridges {
            let (r, s) = (b % c.n_rings, (b + 1) % c.n_rings);
            if r == s || !(active[r] && active[s]) {
                continue;
            }
            let (u, v) = (roles.rings[r][0], roles.rings[s][0]);
            for (x, y) in [(u, v), (v, u)] {
                let tx = rng.random_range(1..=12);
                let a = efos_amount(rng);
                add_edge(&mut edges, (m, x, y, income), tx, a);
            }
        }
        for (who, r, contacts) in &roles.colluders {
            if !active[*r] {
                continue;
            }
            for &e in contacts {
                let tx = rng.random_range(1..=4);
                let a = efos_amount(rng);
                add_edge(&mut edges, (m, e, *who, income), tx, a);
            }
            if rng.random_bool(c.colluder_back_rate) {
                let e = contacts[rng.random_range(0..contacts.len())];
                let a = pesos_to_centavos(amounts.large.sample(rng) * uplift);
                add_edge(&mut edges, (m, *who, e, income), 1, a);
            }
        }
        for u in (c.n_rings * c.ring_size) as u32..roles.n_efos as u32 {
            let k = rng.random_range(1..=3);
            for _ in 0..k {
                let v = if roles.large.is_empty() {
                    random_other(rng, roles.n, u)
                } else {
                    roles.large[rng.random_range(0..roles.large.len())]
                };
                let tx = rng.random_range(1..=12);
                let a = efos_amount(rng);
                add_edge(&mut edges, (m, u, v, income), tx, a);
            }
        }
        for u in roles.n_efos as u32..roles.n as u32 {
            let d = degree.as_ref().map_or(0, |p| p.sample(rng) as usize);
            let large = roles.is_large[u as usize];
            for _ in 0..d {
                let v = if large && roles.large.len() > 1 && rng.random_bool(c.large_pool_preference) {
                    loop {
                        let v = roles.large[rng.random_range(0..roles.large.len())];
                        if v != u {
                            break v;
                        }
                    }
                } else {
                    random_other(rng, roles.n, u)
                };
                let dist = if large { &amounts.large } else { &amounts.honest };
                let a = pesos_to_centavos(dist.sample(rng) * uplift);
                let tx = rng.random_range(1..=3);
                let kind = if rng.random_bool(c.outcome_rate) { TxKind::Outcome } else { income };
                add_edge(&mut edges, (m, u, v, kind), tx, a);
            }
        }
    }
    (edges, ring_active)
}

const SECTORS: [&str; 6] = ["retail", "manufacturing", "services", "construction", "transport", "agriculture"];

fn registry_row(id: TaxpayerId, efos: bool, c: &SynthConfig, rng: &mut StageRng) -> TaxpayerRecord {
    let legal_share = if efos { c.efos_legal_share } else { c.honest_legal_share };
    let taxpayer_type = if rng.random_bool(legal_share) { TaxpayerType::Legal } else { TaxpayerType::Natural };
    let roll: f64 = rng.random();
    let status = match (efos, roll) {
        (true, x) if x < 0.6 => TaxpayerStatus::Active,
        (true, x) if x < 0.8 => TaxpayerStatus::Suspended,
        (true, _) => TaxpayerStatus::Cancelled,
        (false, x) if x < 0.95 => TaxpayerStatus::Active,
        (false, x) if x < 0.98 => TaxpayerStatus::Cancelled,
        (false, _) => TaxpayerStatus::Suspended,
    };
    let sector = if efos && rng.random_bool(0.7) { "services" } else { SECTORS[rng.random_range(0..SECTORS.len())] };
    let (from, span) = if efos { (2012, 5 * 365) } else { (1995, 20 * 365) };
    let registered = NaiveDate::from_ymd_opt(from, 1, 1)
        .and_then(|d| d.checked_add_days(chrono::Days::new(rng.random_range(0..span))));
    TaxpayerRecord {
        id,
        taxpayer_type,
        status,
        sector: sector.to_string(),
        location: format!("MX-{:02}", rng.random_range(1..=32)),
        registered,
    }
}

/// Generates the four input tables and the planted ground truth.
pub fn generate_tables(config: &SynthConfig) -> Result<(SynthTables, GroundTruth), SynthError> {
    config.validate()?;
    let c = config;
    let mut role_rng = seed::rng(seed::derive(c.seed, "synthgen/roles"));
    let mut edge_rng = seed::rng(seed::derive(c.seed, "synthgen/edges"));
    let mut meta_rng = seed::rng(seed::derive(c.seed, "synthgen/meta"));

    let roles = assign_roles(c, &mut role_rng);
    let unlabeled = choose_unlabeled(c, &mut role_rng);

    let width = roles.n.to_string().len().max(6);
    let mut numbers: Vec<usize> = (1..=roles.n).collect();
    numbers.shuffle(&mut role_rng);
    let ids: Vec<TaxpayerId> = numbers
        .iter()
        .map(|k| TaxpayerId::new(&format!("T{k:0width$}")).expect("non-empty id"))
        .collect();
    let is_efos = |u: u32| (u as usize) < roles.n_efos;

    let (edges, ring_active) = plant_edges(c, &roles, &mut edge_rng);

    let mut transactions = Vec::with_capacity(edges.len());
    // Nominal VAT of active income emissions per (emitter, year).
    let mut nominal: BTreeMap<(u32, i32), Centavos> = BTreeMap::new();
    for ((m, u, v, kind), (tx, subtotal)) in edges {
        let period = c.months[m];
        let vat = (subtotal as f64 * c.vat_rate).round() as Centavos;
        let total = subtotal + vat;
        let cancelled = edge_rng.random_bool(c.cancel_rate);
        if kind == TxKind::Income {
            *nominal.entry((u, period.year)).or_insert(0) += if cancelled { 0 } else { vat };
        }
        transactions.push(TransactionRecord {
            emitter: ids[u as usize].clone(),
            receiver: ids[v as usize].clone(),
            period,
            kind,
            tx_count: tx,
            subtotal,
            vat,
            total,
            cancelled_total: if cancelled { total } else { 0 },
        });
    }
    transactions.sort_by(|a, b| (a.period, &a.emitter, &a.receiver, a.kind).cmp(&(b.period, &b.emitter, &b.receiver, b.kind)));

    let mut truth = GroundTruth { ring_active, ..Default::default() };
    for u in 0..roles.n_efos as u32 {
        truth.efos_ids.insert(ids[u as usize].clone());
    }
    for (r, ring) in roles.rings.iter().enumerate() {
        truth.rings.push(ring.iter().map(|&u| ids[u as usize].clone()).collect());
        for &u in ring {
            truth.ring_membership.insert(ids[u as usize].clone(), r);
        }
    }
    for (who, _, contacts) in &roles.colluders {
        let id = ids[*who as usize].clone();
        truth.colluder_ids.insert(id.clone());
        truth.colluder_contacts.insert(id, contacts.iter().map(|&e| ids[e as usize].clone()).collect());
    }

    let mut statements = BTreeMap::new();
    for (&(u, year), &vat) in &nominal {
        let id = ids[u as usize].clone();
        let vat_paid = if is_efos(u) {
            let under = (vat as f64 * c.underreport_factor).round() as Centavos;
            truth.underreported_vat.entry(id.clone()).or_default().insert(year, under);
            vat - under
        } else if meta_rng.random_bool(0.1) {
            vat + (vat as f64 * meta_rng.random_range(0.0..0.05)).round() as Centavos
        } else {
            vat
        };
        statements.insert((id.clone(), year), TaxStatement { id, year, vat_paid });
    }

    let mut labels = BTreeMap::new();
    for u in 0..roles.n_efos as u32 {
        if unlabeled.contains(&u) {
            continue;
        }
        let label = if meta_rng.random_bool(c.definitive_share) { EfosLabel::Definitive } else { EfosLabel::Alleged };
        let id = ids[u as usize].clone();
        labels.insert(id.clone(), LabelRecord { id, label });
    }

    let mut registry = BTreeMap::new();
    for u in 0..roles.n as u32 {
        let efos = is_efos(u);
        if !efos && meta_rng.random_bool(c.missing_registry_share) {
            continue;
        }
        let id = ids[u as usize].clone();
        registry.insert(id.clone(), registry_row(id, efos, c, &mut meta_rng));
    }

    Ok((SynthTables { transactions, registry, labels, statements }, truth))
}

#[cfg(test)]
mod tests;
