use std::collections::BTreeMap;
use std::io::{self, Write};

/// `(close_count, node_fraction)` over the given per-node counts.
pub fn close_histogram(counts: &[usize]) -> Vec<(usize, f64)> {
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    for &c in counts {
        *hist.entry(c).or_insert(0) += 1;
    }
    let n = counts.len() as f64;
    hist.into_iter().map(|(c, k)| (c, k as f64 / n)).collect()
}

pub fn write_close_histogram_csv<W: Write>(w: W, hist: &[(usize, f64)]) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["close_count", "node_fraction"])?;
    for (c, f) in hist {
        out.write_record([c.to_string(), format!("{f:.6}")])?;
    }
    out.flush()
}

/// `d,mean_reach_efos,mean_reach_unclassified`; a missing cohort is left blank.
pub fn write_reach_curves_csv<W: Write>(w: W, efos: Option<&[f64]>, unclassified: Option<&[f64]>) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["d", "mean_reach_efos", "mean_reach_unclassified"])?;
    let len = efos.map_or(0, |v| v.len()).max(unclassified.map_or(0, |v| v.len()));
    let cell = |v: Option<&[f64]>, i: usize| v.and_then(|v| v.get(i)).map(|x| format!("{x:.6}")).unwrap_or_default();
    for i in 0..len {
        out.write_record([(i + 1).to_string(), cell(efos, i), cell(unclassified, i)])?;
    }
    out.flush()
}
