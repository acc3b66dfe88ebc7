use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EstimateError;
use crate::ingest::{Dataset, TxKind};
use crate::metrics::{quartile_cut, ProximityIndex};
use crate::types::{Centavos, TaxpayerIdx};

/// Proximity quantile above which suspects count toward the lower bound.
pub const DEFAULT_QUARTILE: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VatGap {
    pub nominal: Centavos,
    pub paid: Centavos,
    /// `nominal - paid`; negative on over-payment.
    pub gap: Centavos,
    pub missing_statement: bool,
}

impl VatGap {
    pub fn floored(&self) -> Centavos {
        self.gap.max(0)
    }
}

/// VAT on active income emissions of `idx` in `year`, or `None` without any.
pub fn nominal_vat(ds: &Dataset, idx: TaxpayerIdx, year: i32) -> Option<Centavos> {
    let mut any = false;
    let mut sum = 0;
    for row in ds.rows_emitted_by(idx) {
        let r = ds.record(row);
        if r.kind == TxKind::Income && r.period.year == year {
            any = true;
            sum += r.active_vat();
        }
    }
    any.then_some(sum)
}

/// A missing tax statement counts as nothing paid.
pub fn vat_gap(ds: &Dataset, idx: TaxpayerIdx, year: i32) -> Result<VatGap, EstimateError> {
    let nominal = nominal_vat(ds, idx, year).ok_or_else(|| EstimateError::NoEmissions(ds.id(idx).clone(), year))?;
    let stated = ds.vat_paid(idx, year);
    let paid = stated.unwrap_or(0);
    Ok(VatGap { nominal, paid, gap: nominal - paid, missing_statement: stated.is_none() })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvasionEstimate {
    pub year: i32,
    pub min_estimate: Centavos,
    pub max_estimate: Centavos,
    pub min_population: usize,
    pub max_population: usize,
    /// Suspects counted with no tax statement for the year.
    pub missing_statements: usize,
}

impl EvasionEstimate {
    /// `(min + max) / 2`, rounded toward zero.
    pub fn midpoint(&self) -> Centavos {
        (self.min_estimate + self.max_estimate) / 2
    }
}

/// One suspect's raw gap and whether it sits in the top proximity quantile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GapEntry {
    pub gap: Centavos,
    pub in_top: bool,
}

/// Floored sums over all entries and over the `in_top` entries.
pub fn bounds_from_gaps(year: i32, entries: &[GapEntry]) -> EvasionEstimate {
    let mut est = EvasionEstimate {
        year,
        min_estimate: 0,
        max_estimate: 0,
        min_population: 0,
        max_population: entries.len(),
        missing_statements: 0,
    };
    for e in entries {
        est.max_estimate += e.gap.max(0);
        if e.in_top {
            est.min_estimate += e.gap.max(0);
            est.min_population += 1;
        }
    }
    est
}

/// Upper bound over every suspect with income emissions in `year`; lower
/// bound over those also in the top `quartile` of that year's proximity index.
pub fn evasion_estimate(
    ds: &Dataset,
    suspects: &BTreeSet<TaxpayerIdx>,
    proximity: &[ProximityIndex],
    year: i32,
    quartile: f64,
) -> Result<EvasionEstimate, EstimateError> {
    if suspects.is_empty() {
        return Err(EstimateError::EmptySuspects);
    }
    if !(0.0..=1.0).contains(&quartile) {
        return Err(EstimateError::Quartile(quartile.to_string()));
    }
    let year_indices: Vec<ProximityIndex> = proximity.iter().filter(|p| p.year == year).cloned().collect();
    let top = quartile_cut(&year_indices, quartile).unwrap_or_default();
    let list: Vec<TaxpayerIdx> = suspects.iter().copied().collect();
    let gaps: Vec<Option<(VatGap, bool)>> =
        list.par_iter().map(|&t| vat_gap(ds, t, year).ok().map(|g| (g, top.contains(&t)))).collect();
    let entries: Vec<GapEntry> = gaps.iter().flatten().map(|(g, in_top)| GapEntry { gap: g.gap, in_top: *in_top }).collect();
    let mut est = bounds_from_gaps(year, &entries);
    est.missing_statements = gaps.iter().flatten().filter(|(g, _)| g.missing_statement).count();
    Ok(est)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn single_suspect_bounds() {
        let e = bounds_from_gaps(2016, &[GapEntry { gap: 10_000, in_top: true }]);
        assert_eq!((e.min_estimate, e.max_estimate, e.min_population, e.max_population), (10_000, 10_000, 1, 1));
        let e = bounds_from_gaps(2016, &[GapEntry { gap: 10_000, in_top: false }]);
        assert_eq!((e.min_estimate, e.max_estimate), (0, 10_000));
        let e = bounds_from_gaps(2016, &[GapEntry { gap: -500, in_top: true }]);
        assert_eq!((e.min_estimate, e.max_estimate), (0, 0));
        assert_eq!(bounds_from_gaps(2016, &[GapEntry { gap: 3, in_top: false }, GapEntry { gap: 0, in_top: true }]).midpoint(), 1);
    }

    fn entries() -> impl Strategy<Value = Vec<GapEntry>> {
        prop::collection::vec(
            (-1_000_000_000i64..1_000_000_000, any::<bool>()).prop_map(|(gap, in_top)| GapEntry { gap, in_top }),
            0..40,
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn linear_over_disjoint_union(a in entries(), b in entries()) {
            let ea = bounds_from_gaps(2017, &a);
            let eb = bounds_from_gaps(2017, &b);
            let ab: Vec<GapEntry> = a.iter().chain(&b).copied().collect();
            let e = bounds_from_gaps(2017, &ab);
            prop_assert_eq!(e.max_estimate, ea.max_estimate + eb.max_estimate);
            prop_assert_eq!(e.min_estimate, ea.min_estimate + eb.min_estimate);
            prop_assert_eq!(e.max_population, ea.max_population + eb.max_population);
        }

        #[test]
        fn floor_and_order(a in entries(), extra in (-1_000_000i64..1_000_000, any::<bool>())) {
            let e = bounds_from_gaps(2017, &a);
            prop_assert!(e.max_estimate >= 0);
            prop_assert!(e.min_estimate <= e.max_estimate);
            prop_assert!(e.min_population <= e.max_population);
            let mut more = a.clone();
            more.push(GapEntry { gap: extra.0, in_top: extra.1 });
            prop_assert!(bounds_from_gaps(2017, &more).max_estimate >= e.max_estimate);
        }
    }
}
