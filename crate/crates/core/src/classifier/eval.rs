use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::ClassifierError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMetrics {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
    /// `None` when its denominator is zero.
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub error: f64,
}

pub fn confusion_metrics(tp: u64, fp: u64, fn_: u64, tn: u64) -> Result<ConfusionMetrics, ClassifierError> {
    let total = tp + fp + fn_ + tn;
    if total == 0 {
        return Err(ClassifierError::AllZero);
    }
    let ratio = |a: u64, b: u64| (b > 0).then(|| a as f64 / b as f64);
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        (Some(_), Some(_)) => Some(0.0),
        _ => None,
    };
    Ok(ConfusionMetrics { tp, fp, fn_, tn, precision, recall, f1, error: (fp + fn_) as f64 / total as f64 })
}

/// Counts `(tp, fp, fn, tn)` of predictions against truth.
pub fn confusion_from(predicted: &[bool], truth: &[bool]) -> (u64, u64, u64, u64) {
    predicted.iter().zip(truth).fold((0, 0, 0, 0), |(tp, fp, fn_, tn), (&p, &t)| match (p, t) {
        (true, true) => (tp + 1, fp, fn_, tn),
        (true, false) => (tp, fp + 1, fn_, tn),
        (false, true) => (tp, fp, fn_ + 1, tn),
        (false, false) => (tp, fp, fn_, tn + 1),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roc {
    /// `(false positive rate, true positive rate)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// ROC by sweeping the threshold down through the distinct scores; equal
/// scores move together as one step, so ties contribute half credit.
pub fn roc_auc(scores: &[f64], classes: &[bool]) -> Result<Roc, ClassifierError> {
    if scores.len() != classes.len() {
        return Err(ClassifierError::LengthMismatch(scores.len(), classes.len()));
    }
    let p = classes.iter().filter(|&&c| c).count();
    let n = classes.len() - p;
    if p == 0 || n == 0 {
        return Err(ClassifierError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        let (tp0, fp0) = (tp, fp);
        while k < order.len() && scores[order[k]].total_cmp(&s).is_eq() {
            if classes[order[k]] {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        auc += (fp - fp0) as f64 * (tp + tp0) as f64 / 2.0;
        points.push((fp as f64 / n as f64, tp as f64 / p as f64));
    }
    Ok(Roc { points, auc: auc / (p as f64 * n as f64) })
}

/// Full evaluation of scores against truth at a decision rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub confusion: ConfusionMetrics,
    pub roc: Roc,
}

impl EvalReport {
    /// Predicted positive when `score > cutoff`.
    pub fn from_scores(scores: &[f64], classes: &[bool], cutoff: f64) -> Result<Self, ClassifierError> {
        let roc = roc_auc(scores, classes)?;
        let predicted: Vec<bool> = scores.iter().map(|&s| s > cutoff).collect();
        let (tp, fp, fn_, tn) = confusion_from(&predicted, classes);
        Ok(EvalReport { confusion: confusion_metrics(tp, fp, fn_, tn)?, roc })
    }
}

/// Taxpayers whose probability reaches `threshold` in every year they appear.
pub fn classify_yearly<K: Ord + Clone>(probas: &BTreeMap<(K, i32), f64>, threshold: f64) -> BTreeSet<K> {
    let mut all_high: BTreeMap<&K, bool> = BTreeMap::new();
    for ((k, _), &p) in probas {
        let e = all_high.entry(k).or_insert(true);
        *e &= p >= threshold;
    }
    all_high.into_iter().filter(|(_, ok)| *ok).map(|(k, _)| k.clone()).collect()
}

/// `(bin_lo, bin_hi, fraction)` over `bins` equal-width bins of `[0, 1]`;
/// 1.0 falls in the last bin.
pub fn proba_histogram(scores: &[f64], bins: usize) -> Vec<(f64, f64, f64)> {
    let bins = bins.max(1);
    let mut counts = vec![0usize; bins];
    for &s in scores {
        let b = ((s * bins as f64).floor() as usize).min(bins - 1);
        counts[b] += 1;
    }
    let n = scores.len().max(1) as f64;
    counts
        .iter()
        .enumerate()
        .map(|(b, &c)| (b as f64 / bins as f64, (b + 1) as f64 / bins as f64, c as f64 / n))
        .collect()
}

/// `(bin_lo, bin_hi, fraction)` rows of one histogram.
pub type HistogramBins = Vec<(f64, f64, f64)>;

pub fn write_proba_histogram_csv<W: Write>(w: W, cohorts: &[(&str, HistogramBins)]) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["cohort", "bin_lo", "bin_hi", "fraction"])?;
    for (name, hist) in cohorts {
        for (lo, hi, f) in hist {
            out.write_record([name.to_string(), format!("{lo:.2}"), format!("{hi:.2}"), format!("{f:.6}")])?;
        }
    }
    out.flush()
}

pub fn write_scores_csv<'a, W: Write>(w: W, rows: impl IntoIterator<Item = (&'a str, i32, f64)>) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["id", "year", "proba"])?;
    for (id, year, p) in rows {
        out.write_record([id.to_string(), year.to_string(), format!("{p:.4}")])?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn reported_confusion_examples() {
        let m = confusion_metrics(881, 0, 119, 0).unwrap();
        assert_eq!(m.precision, Some(1.0));
        assert_eq!(m.recall, Some(0.881));
        assert!((m.f1.unwrap() - 0.9367).abs() < 1e-4);
        let m = confusion_metrics(448, 84, 52, 416).unwrap();
        assert_eq!(m.recall, Some(0.896));
        assert!((m.precision.unwrap() - 0.8421).abs() < 1e-4);
        assert!((m.f1.unwrap() - 0.87).abs() < 0.01);
        let m = confusion_metrics(10, 0, 0, 0).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (Some(1.0), Some(1.0), Some(1.0)));
    }

    #[test]
    fn undefined_ratios_and_all_zero() {
        let m = confusion_metrics(0, 0, 0, 5).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (None, None, None));
        assert_eq!(confusion_metrics(0, 0, 0, 0), Err(ClassifierError::AllZero));
    }

    #[test]
    fn auc_examples() {
        let r = roc_auc(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]).unwrap();
        assert_eq!(r.auc, 1.0);
        let r = roc_auc(&[0.5; 6], &[true, false, true, false, false, true]).unwrap();
        assert_eq!(r.auc, 0.5);
        assert_eq!(r.points, vec![(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(roc_auc(&[0.1, 0.2], &[true, true]), Err(ClassifierError::SingleClass));
    }

    #[test]
    fn yearly_threshold_is_closed_and_all_years() {
        let mut p = BTreeMap::new();
        p.insert(("a", 2015), 0.9);
        p.insert(("a", 2016), 0.85);
        p.insert(("b", 2015), 0.9);
        p.insert(("b", 2016), 0.79);
        p.insert(("c", 2015), 0.8);
        p.insert(("c", 2016), 0.8);
        assert_eq!(classify_yearly(&p, 0.8), BTreeSet::from(["a", "c"]));
    }

    #[test]
    fn histogram_bins() {
        let h = proba_histogram(&[0.0, 0.05, 0.5, 1.0], 10);
        assert_eq!(h.len(), 10);
        assert_eq!(h[0].2, 0.5);
        assert_eq!(h[5].2, 0.25);
        assert_eq!(h[9].2, 0.25);
    }

    pub(crate) fn concordance(scores: &[f64], classes: &[bool]) -> f64 {
        let (mut s, mut pairs) = (0.0, 0.0);
        for (i, &ci) in classes.iter().enumerate() {
            for (j, &cj) in classes.iter().enumerate() {
                if ci && !cj {
                    pairs += 1.0;
                    s += if scores[i] > scores[j] {
                        1.0
                    } else if scores[i] == scores[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        s / pairs
    }

    proptest! {
        #[test]
        fn auc_equals_concordance(data in prop::collection::vec((0u8..20, any::<bool>()), 2..200)) {
            let scores: Vec<f64> = data.iter().map(|d| d.0 as f64 / 20.0).collect();
            let classes: Vec<bool> = data.iter().map(|d| d.1).collect();
            prop_assume!(classes.iter().any(|&c| c) && classes.iter().any(|&c| !c));
            let r = roc_auc(&scores, &classes).unwrap();
            prop_assert!((r.auc - concordance(&scores, &classes)).abs() < 1e-9);
            for w in r.points.windows(2) {
                prop_assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
            }
        }

        #[test]
        fn f1_bounds_and_symmetry(tp in 0u64..500, fp in 0u64..500, fn_ in 0u64..500) {
            prop_assume!(tp > 0);
            let m = confusion_metrics(tp, fp, fn_, 0).unwrap();
            let (p, r, f1) = (m.precision.unwrap(), m.recall.unwrap(), m.f1.unwrap());
            prop_assert!(f1 <= 2.0 * p / (1.0 + p) + 1e-12);
            let swapped = confusion_metrics(tp, fn_, fp, 0).unwrap();
            prop_assert!((swapped.f1.unwrap() - f1).abs() < 1e-12);
            prop_assert!((swapped.precision.unwrap() - r).abs() < 1e-12);
        }

        #[test]
        fn classify_yearly_antitone(
            probas in prop::collection::btree_map((0u8..20, 2015i32..2019), 0.0f64..=1.0, 0..60),
            a in 0.0f64..=1.0,
            b in 0.0f64..=1.0,
        ) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(classify_yearly(&probas, hi).is_subset(&classify_yearly(&probas, lo)));
        }
    }
}
