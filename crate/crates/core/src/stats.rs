//! Small order-statistics helpers used across modules.

/// Type-7 (linear interpolation) percentile of an ascending-sorted slice.
///
/// `q` is clamped to `[0, 1]`. Returns `None` for an empty slice.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let q = q.clamp(0.0, 1.0);
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    Some(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

/// Type-7 percentile of unsorted data (NaNs are not expected).
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    percentile_sorted(&v, q)
}

/// `(q1, median, q3)` with type-7 interpolation.
pub fn quartiles(values: &[f64]) -> Option<(f64, f64, f64)> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some((
        percentile_sorted(&v, 0.25)?,
        percentile_sorted(&v, 0.5)?,
        percentile_sorted(&v, 0.75)?,
    ))
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a(x) - F_b(x)|`.
pub fn ks_distance(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.is_empty() || b.is_empty() {
        return None;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut best: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    Some(best)
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type7_on_four_points() {
        let v = [100.0, 200.0, 300.0, 400.0];
        assert_eq!(percentile_sorted(&v, 0.25), Some(175.0));
        assert_eq!(percentile_sorted(&v, 0.75), Some(325.0));
        assert_eq!(percentile_sorted(&[1.0, 2.0, 3.0, 4.0], 0.75), Some(3.25));
        assert_eq!(percentile_sorted(&[500.0], 0.25), Some(500.0));
        assert_eq!(percentile_sorted(&[], 0.5), None);
    }

    #[test]
    fn ks_identical_and_disjoint() {
        assert_eq!(ks_distance(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), Some(0.0));
        assert_eq!(ks_distance(&[1.0, 2.0], &[5.0, 6.0]), Some(1.0));
        let d = ks_distance(&[1.0, 2.0, 3.0, 4.0], &[3.0, 4.0, 5.0, 6.0]).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
    }
}
