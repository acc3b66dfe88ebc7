use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::Range;

use super::{EfosLabel, LabelRecord, TaxStatement, TaxpayerRecord, TransactionRecord, TxKind};
use crate::types::{Centavos, MonthKey, TaxpayerId, TaxpayerIdx};

/// Transaction table stored column-wise, sorted by
/// `(period, emitter, receiver, kind)` with duplicates aggregated.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TransactionColumns {
    pub emitter: Vec<TaxpayerIdx>,
    pub receiver: Vec<TaxpayerIdx>,
    pub period: Vec<MonthKey>,
    pub kind: Vec<TxKind>,
    pub tx_count: Vec<u64>,
    pub subtotal: Vec<Centavos>,
    pub vat: Vec<Centavos>,
    pub total: Vec<Centavos>,
    pub cancelled_total: Vec<Centavos>,
}

impl TransactionColumns {
    pub fn len(&self) -> usize {
        self.emitter.len()
    }

    pub fn is_empty(&self) -> bool {
        self.emitter.is_empty()
    }
}

/// One row of [`TransactionColumns`] by value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecordView {
    pub emitter: TaxpayerIdx,
    pub receiver: TaxpayerIdx,
    pub period: MonthKey,
    pub kind: TxKind,
    pub tx_count: u64,
    pub subtotal: Centavos,
    pub vat: Centavos,
    pub total: Centavos,
    pub cancelled_total: Centavos,
}

impl RecordView {
    /// Part of `amount` not covered by cancellations, pro rata on `total`.
    pub fn active_share(&self, amount: Centavos) -> Centavos {
        if self.cancelled_total == 0 || self.total == 0 {
            return amount;
        }
        let cancelled = (amount as i128 * self.cancelled_total as i128 / self.total as i128) as i64;
        amount - cancelled
    }

    pub fn active_subtotal(&self) -> Centavos {
        self.active_share(self.subtotal)
    }

    pub fn active_total(&self) -> Centavos {
        self.total - self.cancelled_total
    }

    pub fn active_vat(&self) -> Centavos {
        self.active_share(self.vat)
    }
}

/// Compressed row index: for key `k`, `items[offsets[k]..offsets[k+1]]`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Csr {
    offsets: Vec<u32>,
    items: Vec<u32>,
}

impl Csr {
    fn build(n_keys: usize, keys: impl Iterator<Item = usize> + Clone) -> Self {
        let mut offsets = vec![0u32; n_keys + 1];
        for k in keys.clone() {
            offsets[k + 1] += 1;
        }
        for i in 0..n_keys {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut items = vec![0u32; offsets[n_keys] as usize];
        for (row, k) in keys.enumerate() {
            items[fill[k] as usize] = row as u32;
            fill[k] += 1;
        }
        Csr { offsets, items }
    }

    fn get(&self, key: usize) -> &[u32] {
        &self.items[self.offsets[key] as usize..self.offsets[key + 1] as usize]
    }
}

/// Immutable, indexed view of all inputs.
///
/// Taxpayers get dense indices in lexicographic id order, so the dataset
/// does not depend on the order of input rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    ids: Vec<TaxpayerId>,
    lookup: HashMap<TaxpayerId, TaxpayerIdx>,
    registry: Vec<TaxpayerRecord>,
    synthesized: Vec<bool>,
    labels: Vec<Option<EfosLabel>>,
    statements: BTreeMap<(TaxpayerIdx, i32), Centavos>,
    tx: TransactionColumns,
    periods: BTreeMap<MonthKey, Range<usize>>,
    by_emitter: Csr,
    by_receiver: Csr,
    active_emitters: usize,
}

/// Indexes the parsed tables into a [`Dataset`].
///
/// Rows sharing `(emitter, receiver, period, kind)` are summed into one.
/// Taxpayers that only appear in transactions (or labels/statements) get a
/// synthesized all-unknown registry row.
pub fn build_dataset(
    transactions: &[TransactionRecord],
    registry: &BTreeMap<TaxpayerId, TaxpayerRecord>,
    labels: &BTreeMap<TaxpayerId, LabelRecord>,
    statements: &BTreeMap<(TaxpayerId, i32), TaxStatement>,
) -> Dataset {
    let mut all: BTreeSet<&TaxpayerId> = BTreeSet::new();
    for t in transactions {
        all.insert(&t.emitter);
        all.insert(&t.receiver);
    }
    all.extend(registry.keys());
    all.extend(labels.keys());
    all.extend(statements.keys().map(|(id, _)| id));

    let ids: Vec<TaxpayerId> = all.into_iter().cloned().collect();
    let lookup: HashMap<TaxpayerId, TaxpayerIdx> =
        ids.iter().enumerate().map(|(i, id)| (id.clone(), TaxpayerIdx(i as u32))).collect();

    let mut synthesized = vec![false; ids.len()];
    let registry_rows: Vec<TaxpayerRecord> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| match registry.get(id) {
            Some(r) => r.clone(),
            None => {
                synthesized[i] = true;
                TaxpayerRecord::unknown(id.clone())
            }
        })
        .collect();
    let label_rows: Vec<Option<EfosLabel>> = ids.iter().map(|id| labels.get(id).map(|l| l.label)).collect();
    let statement_rows: BTreeMap<(TaxpayerIdx, i32), Centavos> =
        statements.iter().map(|((id, year), s)| ((lookup[id], *year), s.vat_paid)).collect();

    // Aggregate parallel rows. Sorting the keyed rows makes the result
    // independent of input order.
    type Key = (MonthKey, TaxpayerIdx, TaxpayerIdx, TxKind);
    let mut keyed: Vec<(Key, &TransactionRecord)> = transactions
        .iter()
        .map(|t| ((t.period, lookup[&t.emitter], lookup[&t.receiver], t.kind), t))
        .collect();
    keyed.sort_unstable_by_key(|(k, _)| *k);

    let mut tx = TransactionColumns::default();
    let mut last: Option<Key> = None;
    for (key, t) in keyed {
        if last == Some(key) {
            let i = tx.len() - 1;
            tx.tx_count[i] += t.tx_count;
            tx.subtotal[i] += t.subtotal;
            tx.vat[i] += t.vat;
            tx.total[i] += t.total;
            tx.cancelled_total[i] += t.cancelled_total;
            continue;
        }
        last = Some(key);
        tx.period.push(key.0);
        tx.emitter.push(key.1);
        tx.receiver.push(key.2);
        tx.kind.push(key.3);
        tx.tx_count.push(t.tx_count);
        tx.subtotal.push(t.subtotal);
        tx.vat.push(t.vat);
        tx.total.push(t.total);
        tx.cancelled_total.push(t.cancelled_total);
    }

    let mut periods: BTreeMap<MonthKey, Range<usize>> = BTreeMap::new();
    for (row, p) in tx.period.iter().enumerate() {
        periods.entry(*p).and_modify(|r| r.end = row + 1).or_insert(row..row + 1);
    }

    let n = ids.len();
    let by_emitter = Csr::build(n, tx.emitter.iter().map(|e| e.index()));
    let by_receiver = Csr::build(n, tx.receiver.iter().map(|r| r.index()));
    let active_emitters = (0..n).filter(|&i| !by_emitter.get(i).is_empty()).count();

    Dataset {
        ids,
        lookup,
        registry: registry_rows,
        synthesized,
        labels: label_rows,
        statements: statement_rows,
        tx,
        periods,
        by_emitter,
        by_receiver,
        active_emitters,
    }
}

impl Dataset {
    pub fn n_taxpayers(&self) -> usize {
        self.ids.len()
    }

    pub fn n_records(&self) -> usize {
        self.tx.len()
    }

    pub fn id(&self, idx: TaxpayerIdx) -> &TaxpayerId {
        &self.ids[idx.index()]
    }

    pub fn ids(&self) -> &[TaxpayerId] {
        &self.ids
    }

    pub fn idx(&self, id: &TaxpayerId) -> Option<TaxpayerIdx> {
        self.lookup.get(id).copied()
    }

    pub fn idx_of(&self, id: &str) -> Option<TaxpayerIdx> {
        TaxpayerId::new(id).and_then(|id| self.idx(&id))
    }

    pub fn taxpayers(&self) -> impl Iterator<Item = TaxpayerIdx> {
        (0..self.ids.len() as u32).map(TaxpayerIdx)
    }

    pub fn registry(&self, idx: TaxpayerIdx) -> &TaxpayerRecord {
        &self.registry[idx.index()]
    }

    /// Whether the registry row was synthesized because it was missing.
    pub fn is_synthesized(&self, idx: TaxpayerIdx) -> bool {
        self.synthesized[idx.index()]
    }

    pub fn label(&self, idx: TaxpayerIdx) -> Option<EfosLabel> {
        self.labels[idx.index()]
    }

    /// Labeled as definitive or alleged.
    pub fn is_efos(&self, idx: TaxpayerIdx) -> bool {
        self.labels[idx.index()].is_some()
    }

    pub fn vat_paid(&self, idx: TaxpayerIdx, year: i32) -> Option<Centavos> {
        self.statements.get(&(idx, year)).copied()
    }

    pub fn columns(&self) -> &TransactionColumns {
        &self.tx
    }

    pub fn record(&self, row: usize) -> RecordView {
        let t = &self.tx;
        RecordView {
            emitter: t.emitter[row],
            receiver: t.receiver[row],
            period: t.period[row],
            kind: t.kind[row],
            tx_count: t.tx_count[row],
            subtotal: t.subtotal[row],
            vat: t.vat[row],
            total: t.total[row],
            cancelled_total: t.cancelled_total[row],
        }
    }

    /// Months with at least one record, ascending.
    pub fn periods(&self) -> impl Iterator<Item = MonthKey> + '_ {
        self.periods.keys().copied()
    }

    pub fn years(&self) -> BTreeSet<i32> {
        self.periods.keys().map(|p| p.year).collect()
    }

    pub fn rows_in(&self, period: MonthKey) -> Range<usize> {
        self.periods.get(&period).cloned().unwrap_or(0..0)
    }

    /// Rows of every month of `year`.
    pub fn rows_in_year(&self, year: i32) -> Range<usize> {
        let mut months = self.periods.range(MonthKey { year, month: 1 }..=MonthKey { year, month: 12 });
        match months.next() {
            None => 0..0,
            Some((_, first)) => {
                let end = months.last().map(|(_, r)| r.end).unwrap_or(first.end);
                first.start..end
            }
        }
    }

    pub fn rows_emitted_by(&self, idx: TaxpayerIdx) -> impl Iterator<Item = usize> + '_ {
        self.by_emitter.get(idx.index()).iter().map(|&r| r as usize)
    }

    pub fn rows_received_by(&self, idx: TaxpayerIdx) -> impl Iterator<Item = usize> + '_ {
        self.by_receiver.get(idx.index()).iter().map(|&r| r as usize)
    }

    /// Taxpayers with at least one emitted record.
    pub fn active_emitter_count(&self) -> usize {
        self.active_emitters
    }

    /// The aggregated transaction table as records (dataset order).
    pub fn to_records(&self) -> Vec<TransactionRecord> {
        (0..self.n_records())
            .map(|row| {
                let r = self.record(row);
                TransactionRecord {
                    emitter: self.id(r.emitter).clone(),
                    receiver: self.id(r.receiver).clone(),
                    period: r.period,
                    kind: r.kind,
                    tx_count: r.tx_count,
                    subtotal: r.subtotal,
                    vat: r.vat,
                    total: r.total,
                    cancelled_total: r.cancelled_total,
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::ingest::{TaxpayerStatus, TaxpayerType};

    fn rec(e: &str, r: &str, m: u8, kind: TxKind, n: u64, sub: i64) -> TransactionRecord {
        TransactionRecord {
            emitter: TaxpayerId::new(e).unwrap(),
            receiver: TaxpayerId::new(r).unwrap(),
            period: MonthKey::new(2015, m).unwrap(),
            kind,
            tx_count: n,
            subtotal: sub,
            vat: sub / 10,
            total: sub + sub / 10,
            cancelled_total: 0,
        }
    }

    fn empty<K: Ord, V>() -> BTreeMap<K, V> {
        BTreeMap::new()
    }

    #[test]
    fn synthesizes_missing_registry_rows() {
        let ds = build_dataset(&[rec("A1", "B2", 1, TxKind::Income, 1, 100)], &empty(), &empty(), &empty());
        assert_eq!(ds.n_taxpayers(), 2);
        for idx in ds.taxpayers() {
            assert!(ds.is_synthesized(idx));
            assert_eq!(ds.registry(idx).taxpayer_type, TaxpayerType::Unknown);
            assert_eq!(ds.registry(idx).status, TaxpayerStatus::Unknown);
        }
        assert_eq!(ds.active_emitter_count(), 1);
    }

    #[test]
    fn duplicate_keys_are_summed() {
        let rows = [rec("A1", "B2", 1, TxKind::Income, 2, 100), rec("A1", "B2", 1, TxKind::Income, 3, 50)];
        let ds = build_dataset(&rows, &empty(), &empty(), &empty());
        assert_eq!(ds.n_records(), 1);
        let r = ds.record(0);
        assert_eq!(r.tx_count, 5);
        assert_eq!(r.subtotal, 150);
        assert_eq!(r.vat, 15);
    }

    #[test]
    fn kinds_stay_separate_and_indices_resolve() {
        let rows = [
            rec("A1", "B2", 1, TxKind::Income, 1, 100),
            rec("A1", "B2", 1, TxKind::Outcome, 1, 100),
            rec("B2", "C3", 2, TxKind::Income, 1, 7),
        ];
        let ds = build_dataset(&rows, &empty(), &empty(), &empty());
        assert_eq!(ds.n_records(), 3);
        let a1 = ds.idx_of("A1").unwrap();
        let b2 = ds.idx_of("B2").unwrap();
        assert_eq!(ds.rows_emitted_by(a1).count(), 2);
        assert_eq!(ds.rows_received_by(b2).count(), 2);
        for row in ds.rows_emitted_by(b2) {
            assert_eq!(ds.record(row).emitter, b2);
        }
        assert_eq!(ds.rows_in(MonthKey::new(2015, 2).unwrap()), 2..3);
        assert_eq!(ds.rows_in_year(2015), 0..3);
        assert_eq!(ds.rows_in_year(2016), 0..0);
    }

    #[test]
    fn active_share_is_pro_rata() {
        let mut r = rec("A", "B", 1, TxKind::Income, 1, 1000);
        r.total = 1160;
        r.vat = 160;
        r.cancelled_total = 580;
        let ds = build_dataset(&[r], &empty(), &empty(), &empty());
        let v = ds.record(0);
        assert_eq!(v.active_subtotal(), 500);
        assert_eq!(v.active_vat(), 80);
        assert_eq!(v.active_total(), 580);
    }

    proptest! {
        #[test]
        fn order_independent_and_subtotal_preserving(
            raw in prop::collection::vec((0u8..6, 0u8..6, 1u8..=3, any::<bool>(), 1u64..5, 0i64..10_000), 0..60),
            seed in any::<u64>(),
        ) {
            let rows: Vec<TransactionRecord> = raw
                .iter()
                .map(|&(e, r, m, inc, n, s)| {
                    rec(&format!("T{e}"), &format!("T{r}"), m, if inc { TxKind::Income } else { TxKind::Outcome }, n, s)
                })
                .collect();
            let mut shuffled = rows.clone();
            // Deterministic Fisher-Yates driven by the proptest seed.
            let mut state = seed | 1;
            for i in (1..shuffled.len()).rev() {
                state ^= state << 13; state ^= state >> 7; state ^= state << 17;
                shuffled.swap(i, (state % (i as u64 + 1)) as usize);
            }
            let a = build_dataset(&rows, &empty(), &empty(), &empty());
            let b = build_dataset(&shuffled, &empty(), &empty(), &empty());
            prop_assert_eq!(&a, &b);
            let raw_sum: i64 = rows.iter().map(|r| r.subtotal).sum();
            prop_assert_eq!(a.columns().subtotal.iter().sum::<i64>(), raw_sum);
        }
    }
}
