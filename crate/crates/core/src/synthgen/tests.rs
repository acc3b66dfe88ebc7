use super::*;
use crate::ingest::{write_transactions_csv, Format};
use crate::network::{build_monthly_network, strongly_connected_components, AmountRegime, EdgeKinds};
use crate::stats::{percentile, quartiles};

fn tiny() -> SynthConfig {
    SynthConfig {
        n_honest: 20,
        n_efos: 3,
        n_rings: 1,
        ring_size: 3,
        months: vec![MonthKey::new(2016, 3).unwrap()],
        ring_activity: 1.0,
        edos_per_ring: 1,
        colluder_contacts: 2,
        seed: 11,
        ..Default::default()
    }
}

fn small(seed: u64) -> SynthConfig {
    SynthConfig { n_honest: 600, n_efos: 24, n_rings: 4, ring_size: 5, edos_per_ring: 3, seed, ..Default::default() }
}

#[test]
fn three_cycle_is_planted() {
    let (tables, truth) = generate_tables(&tiny()).unwrap();
    let ring = &truth.rings[0];
    assert_eq!(ring.len(), 3);
    for k in 0..3 {
        let (u, v) = (&ring[k], &ring[(k + 1) % 3]);
        assert!(
            tables.transactions.iter().any(|t| &t.emitter == u && &t.receiver == v && t.kind == TxKind::Income),
            "missing ring edge {u} -> {v}"
        );
    }
}

#[test]
fn same_seed_same_bytes() {
    let write = |c: &SynthConfig| {
        let (t, truth) = generate_tables(c).unwrap();
        let mut buf = Vec::new();
        write_transactions_csv(&mut buf, &t.transactions).unwrap();
        crate::ingest::write_transactions(&mut buf, &t.transactions, Format::Jsonl).unwrap();
        (buf, serde_json::to_string(&truth).unwrap())
    };
    assert_eq!(write(&small(5)), write(&small(5)));
    assert_ne!(write(&small(5)).0, write(&small(6)).0);
}

#[test]
fn ground_truth_roles_are_disjoint() {
    let (_, truth) = generate_tables(&small(1)).unwrap();
    assert!(truth.efos_ids.is_disjoint(&truth.colluder_ids));
    assert_eq!(truth.colluder_ids.len(), 12);
    for (c, contacts) in &truth.colluder_contacts {
        assert!(truth.colluder_ids.contains(c));
        assert!(contacts.len() >= 2);
        let rings: BTreeSet<usize> = contacts.iter().map(|e| truth.ring_membership[e]).collect();
        assert_eq!(rings.len(), 1);
    }
}

#[test]
fn unlabeled_ring_members_are_never_adjacent() {
    for seed in 0..20 {
        let (tables, truth) = generate_tables(&small(seed)).unwrap();
        let unlabeled = truth.efos_ids.iter().filter(|id| !tables.labels.contains_key(*id)).count();
        assert_eq!(unlabeled, 7);
        for ring in &truth.rings {
            for k in 0..ring.len() {
                let next = &ring[(k + 1) % ring.len()];
                assert!(tables.labels.contains_key(&ring[k]) || tables.labels.contains_key(next));
            }
        }
    }
}

#[test]
fn rings_are_strongly_connected_in_active_months() {
    let config = small(3);
    let (ds, truth) = generate(&config).unwrap();
    for (ring, months) in truth.rings.iter().zip(&truth.ring_active) {
        for &m in months {
            let open = AmountRegime { period: m, q1: 0.0, q3: f64::MAX, n_records: 0 };
            let g = build_monthly_network(&ds, &open, m, EdgeKinds::IncomeOnly).unwrap();
            let p = strongly_connected_components(&g);
            let comps: BTreeSet<u32> =
                ring.iter().map(|id| p.component_of(g.node_of(ds.idx(id).unwrap()).unwrap())).collect();
            assert_eq!(comps.len(), 1, "ring split in {m}");
        }
    }
}

#[test]
fn statements_record_planted_underreporting() {
    let config = small(4);
    let (tables, truth) = generate_tables(&config).unwrap();
    for (id, years) in &truth.underreported_vat {
        assert!(truth.efos_ids.contains(id));
        for (&year, &under) in years {
            let nominal: Centavos = tables
                .transactions
                .iter()
                .filter(|t| &t.emitter == id && t.period.year == year && t.kind == TxKind::Income && t.cancelled_total == 0)
                .map(|t| t.vat)
                .sum();
            let paid = tables.statements[&(id.clone(), year)].vat_paid;
            assert_eq!(nominal - paid, under);
        }
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = [
        SynthConfig { ring_size: 1, ..small(0) },
        SynthConfig { n_efos: 10, ..small(0) },
        SynthConfig { ring_activity: 1.5, ..small(0) },
        SynthConfig { december_uplift: 0.5, ..small(0) },
        SynthConfig { efos_amount: AmountDist::new(8.0, 1.0), ..small(0) },
        SynthConfig { months: vec![], ..small(0) },
        SynthConfig { colluder_contacts: 1, ..small(0) },
    ];
    for c in bad {
        assert!(matches!(generate_tables(&c), Err(SynthError::ConfigInvalid(_))), "{c:?}");
    }
}

fn log_amounts(ds: &Dataset, efos: &BTreeSet<TaxpayerId>, want_efos: bool) -> Vec<f64> {
    (0..ds.n_records())
        .map(|row| ds.record(row))
        .filter(|r| r.kind == TxKind::Income && efos.contains(ds.id(r.emitter)) == want_efos)
        .map(|r| (r.subtotal as f64).ln())
        .collect()
}

#[test]
fn default_economy_separates_efos_amounts() {
    let (ds, truth) = generate(&SynthConfig { seed: 2, ..Default::default() }).unwrap();
    let efos = log_amounts(&ds, &truth.efos_ids, true);
    let honest = log_amounts(&ds, &truth.efos_ids, false);
    let honest_median = percentile(&honest, 0.5).unwrap();
    let (q1, median, _) = quartiles(&efos).unwrap();
    assert!(median > honest_median);
    assert!(q1 > honest_median);
}
