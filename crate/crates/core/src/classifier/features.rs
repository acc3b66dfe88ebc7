use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::ingest::{Dataset, TxKind};
use crate::types::{Centavos, TaxpayerIdx};

pub const FEATURE_NAMES: [&str; 7] = [
    "sub_active",
    "total_active",
    "total_after_active",
    "vat_after_active",
    "cancelled_amount",
    "tx_count",
    "distinct_receivers",
];

/// Income emissions of one taxpayer in one year.
///
/// `total_active` is `total - cancelled_total`; `total_after_active` is the
/// active subtotal plus active VAT, each reduced pro rata by the cancelled
/// share. They differ whenever totals carry components other than subtotal
/// and VAT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub taxpayer: TaxpayerIdx,
    pub year: i32,
    pub sub_active: Centavos,
    pub total_active: Centavos,
    pub total_after_active: Centavos,
    pub vat_after_active: Centavos,
    pub cancelled_amount: Centavos,
    pub tx_count: u64,
    pub distinct_receivers: u64,
}

impl FeatureRow {
    pub fn values(&self) -> [f64; 7] {
        [
            self.sub_active as f64,
            self.total_active as f64,
            self.total_after_active as f64,
            self.vat_after_active as f64,
            self.cancelled_amount as f64,
            self.tx_count as f64,
            self.distinct_receivers as f64,
        ]
    }
}

/// One row per taxpayer with income emissions in `year`, ascending by taxpayer.
pub fn build_features(ds: &Dataset, year: i32) -> Vec<FeatureRow> {
    let mut acc: BTreeMap<TaxpayerIdx, FeatureRow> = BTreeMap::new();
    let mut receivers: BTreeMap<TaxpayerIdx, Vec<TaxpayerIdx>> = BTreeMap::new();
    for row in ds.rows_in_year(year) {
        let r = ds.record(row);
        if r.kind != TxKind::Income {
            continue;
        }
        let f = acc.entry(r.emitter).or_insert(FeatureRow {
            taxpayer: r.emitter,
            year,
            sub_active: 0,
            total_active: 0,
            total_after_active: 0,
            vat_after_active: 0,
            cancelled_amount: 0,
            tx_count: 0,
            distinct_receivers: 0,
        });
        let sub = r.active_subtotal();
        let vat = r.active_vat();
        f.sub_active += sub;
        f.total_active += r.active_total();
        f.total_after_active += sub + vat;
        f.vat_after_active += vat;
        f.cancelled_amount += r.cancelled_total;
        f.tx_count += r.tx_count;
        receivers.entry(r.emitter).or_default().push(r.receiver);
    }
    acc.into_iter()
        .map(|(t, mut f)| {
            let mut rs = receivers.remove(&t).unwrap_or_default();
            rs.sort_unstable();
            rs.dedup();
            f.distinct_receivers = rs.len() as u64;
            f
        })
        .collect()
}

pub fn feature_matrix(rows: &[FeatureRow]) -> Matrix {
    let vals: Vec<[f64; 7]> = rows.iter().map(FeatureRow::values).collect();
    Matrix::from_rows(&vals)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::ingest::{build_dataset, TransactionRecord};
    use crate::types::{MonthKey, TaxpayerId};

    fn rec(e: &str, r: &str, year: i32, sub: i64, cancelled: bool) -> TransactionRecord {
        let vat = sub * 16 / 100;
        TransactionRecord {
            emitter: TaxpayerId::new(e).unwrap(),
            receiver: TaxpayerId::new(r).unwrap(),
            period: MonthKey::new(year, 1).unwrap(),
            kind: TxKind::Income,
            tx_count: 1,
            subtotal: sub,
            vat,
            total: sub + vat,
            cancelled_total: if cancelled { sub + vat } else { 0 },
        }
    }

    fn ds(records: &[TransactionRecord]) -> Dataset {
        build_dataset(records, &BTreeMap::new(), &BTreeMap::new(), &BTreeMap::new())
    }

    #[test]
    fn single_record() {
        let d = ds(&[rec("a", "b", 2015, 1000, false)]);
        let f = build_features(&d, 2015);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].sub_active, 1000);
        assert_eq!(f[0].cancelled_amount, 0);
        assert_eq!(f[0].total_after_active, 1160);
        assert_eq!(f[0].distinct_receivers, 1);
    }

    #[test]
    fn no_emissions_no_row() {
        let d = ds(&[rec("a", "b", 2015, 1000, false)]);
        assert!(build_features(&d, 2015).iter().all(|r| d.id(r.taxpayer).as_str() != "b"));
        assert!(build_features(&d, 2016).is_empty());
    }

    #[test]
    fn cancelled_amounts_move_out_of_active() {
        let d = ds(&[rec("a", "b", 2015, 1000, false), rec("a", "c", 2015, 500, true)]);
        let f = build_features(&d, 2015)[0];
        assert_eq!(f.sub_active, 1000);
        assert_eq!(f.cancelled_amount, 580);
        assert_eq!(f.total_active, 1160);
        assert_eq!(f.distinct_receivers, 2);
    }
}
