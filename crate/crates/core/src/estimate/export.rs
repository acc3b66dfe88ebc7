use std::io::{self, Write};

use super::cohorts::{Breakdown, CohortQuartiles};
use super::gap::EvasionEstimate;
use super::report::SuspectReport;
use crate::types::format_amount;

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn opt_f(v: Option<f64>, digits: usize) -> String {
    v.map(|v| format!("{v:.digits$}")).unwrap_or_default()
}

pub fn write_suspects_csv<W: Write>(w: W, report: &SuspectReport) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["id", "year", "proba", "suspicious", "close_efos", "sigma", "sigma_hat", "vat_gap", "cohort"])?;
    for r in &report.rows {
        out.write_record([
            r.id.as_str().to_string(),
            r.year.to_string(),
            opt_f(r.proba, 4),
            r.suspicious.to_string(),
            opt(r.close_efos),
            opt_f(r.sigma, 6),
            opt_f(r.sigma_hat, 6),
            r.vat_gap.map(format_amount).unwrap_or_default(),
            r.cohort.as_str().to_string(),
        ])?;
    }
    out.flush()
}

/// `midpoint` is `(min + max) / 2`.
pub fn write_estimates_csv<W: Write>(w: W, estimates: &[EvasionEstimate]) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["year", "min_estimate", "midpoint", "max_estimate", "min_population", "max_population", "missing_statements"])?;
    for e in estimates {
        out.write_record([
            e.year.to_string(),
            format_amount(e.min_estimate),
            format_amount(e.midpoint()),
            format_amount(e.max_estimate),
            e.min_population.to_string(),
            e.max_population.to_string(),
            e.missing_statements.to_string(),
        ])?;
    }
    out.flush()
}

pub fn write_breakdown_csv<W: Write>(w: W, b: &Breakdown) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["dimension", "category", "percent"])?;
    for (dim, rows) in [("taxpayer_type", &b.by_type), ("status", &b.by_status)] {
        for (cat, pct) in rows {
            out.write_record([dim, cat.as_str(), &format!("{pct:.2}")])?;
        }
    }
    out.flush()
}

pub fn write_cohort_quartiles_csv<W: Write>(w: W, rows: &[CohortQuartiles]) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["cohort", "period", "variable", "n", "excluded_zero", "q1", "median", "q3"])?;
    for r in rows {
        out.write_record([
            r.cohort.as_str().to_string(),
            r.period.to_string(),
            r.variable.as_str().to_string(),
            r.n.to_string(),
            r.excluded_zero.to_string(),
            opt_f(r.q1, 6),
            opt_f(r.median, 6),
            opt_f(r.q3, 6),
        ])?;
    }
    out.flush()
}
