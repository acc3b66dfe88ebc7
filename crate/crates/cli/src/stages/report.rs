use std::collections::{BTreeMap, BTreeSet};

use efosnet::classifier::classify_yearly;
use efosnet::estimate::{
    bounds_from_gaps, build_suspect_report, cohort_distribution_summary, evasion_estimate, intersect_suspects,
    taxpayer_breakdown, write_breakdown_csv, write_cohort_quartiles_csv, write_estimates_csv, write_suspects_csv,
    CohortKind, EstimateError, ReportInputs,
};
use efosnet::ingest::Dataset;
use efosnet::metrics::ProximityIndex;
use efosnet::{stats, TaxpayerIdx};

use super::{load, years};
use crate::artifacts::{csv_bytes, Ctx, Table};
use crate::error::CliError;

fn cell<T: std::str::FromStr>(t: &Table, row: &[String], col: usize) -> Result<T, CliError> {
    row[col]
        .parse()
        .map_err(|_| CliError::Stage(format!("bad value `{}` in column `{}`", row[col], t.header[col])))
}

fn idx(ds: &Dataset, id: &str) -> Result<TaxpayerIdx, CliError> {
    ds.idx_of(id).ok_or_else(|| CliError::Stage(format!("artifact names unknown taxpayer `{id}`")))
}

/// Unlabeled taxpayer-year probabilities from a `scores_*` table.
fn read_probas(ctx: &Ctx, ds: &Dataset, stem: &str) -> Result<BTreeMap<(TaxpayerIdx, i32), f64>, CliError> {
    let t = ctx.read_table(stem)?;
    let (ci, cy, cp) = (t.col("id")?, t.col("year")?, t.col("proba")?);
    let mut out = BTreeMap::new();
    for r in &t.rows {
        let node = idx(ds, &r[ci])?;
        let year: i32 = cell(&t, r, cy)?;
        if ds.label(node).is_none() && ctx.cfg.year_in_range(year) {
            out.insert((node, year), cell(&t, r, cp)?);
        }
    }
    Ok(out)
}

fn read_proximity(ctx: &Ctx, ds: &Dataset) -> Result<Vec<ProximityIndex>, CliError> {
    let t = ctx.read_table("proximity")?;
    let cols = ["id", "year", "total_close_efos", "months_close", "sigma", "sigma_hat"];
    let [ci, cy, cc, cm, cs, ch] = cols.map(|c| t.col(c));
    let (ci, cy, cc, cm, cs, ch) = (ci?, cy?, cc?, cm?, cs?, ch?);
    t.rows
        .iter()
        .map(|r| {
            Ok(ProximityIndex {
                node: idx(ds, &r[ci])?,
                year: cell(&t, r, cy)?,
                total_close_efos: cell(&t, r, cc)?,
                months_close: cell(&t, r, cm)?,
                sigma: cell(&t, r, cs)?,
                sigma_hat: cell(&t, r, ch)?,
            })
        })
        .collect()
}

fn print_comparison(ctx: &Ctx) -> Result<(), CliError> {
    let t = match ctx.read_table("scenario_comparison") {
        Ok(t) => t,
        Err(CliError::MissingArtifact(_)) => return Ok(()),
        Err(e) => return Err(e),
    };
    let (cy, cs, ce, ca) = (t.col("year")?, t.col("scenario")?, t.col("oob_error")?, t.col("oob_auc")?);
    println!("{:<6} {:<8} {:>9} {:>8}", "year", "scenario", "oob_error", "oob_auc");
    for r in &t.rows {
        println!("{:<6} {:<8} {:>9} {:>8}", r[cy], r[cs], r[ce], r[ca]);
    }
    Ok(())
}

/// Joins scores and proximity into the suspect report, bounds the VAT gap
/// per year and summarizes the cohorts.
pub fn report(ctx: &Ctx) -> Result<(), CliError> {
    let ds = load(ctx)?.ds;
    let threshold = ctx.cfg.proba_threshold;
    let mut probas = BTreeMap::new();
    let mut suspects: Option<BTreeSet<TaxpayerIdx>> = None;
    for (k, s) in ctx.cfg.scenarios().into_iter().enumerate() {
        let p = read_probas(ctx, &ds, &format!("scores_{}", s.as_str()))?;
        let list = classify_yearly(&p, threshold);
        suspects = Some(match suspects {
            None => list,
            Some(prev) => intersect_suspects(&prev, &list),
        });
        if k == 0 {
            probas = p;
        }
    }
    let suspects = suspects.unwrap_or_default();
    let proximity = read_proximity(ctx, &ds)?;
    let close_counts = proximity.iter().map(|p| ((p.node, p.year), p.total_close_efos)).collect();
    let inputs = ReportInputs { probas, suspects, close_counts, proximity };
    let report = build_suspect_report(&ds, &inputs);
    ctx.emit_table("suspects", csv_bytes(|w| write_suspects_csv(w, &report)))?;

    let mut estimates = Vec::new();
    for y in years(ctx, &ds) {
        let e = match evasion_estimate(&ds, &inputs.suspects, &inputs.proximity, y, ctx.cfg.quartile) {
            Ok(e) => e,
            Err(EstimateError::EmptySuspects) => bounds_from_gaps(y, &[]),
            Err(e) => return Err(CliError::Config(e.to_string())),
        };
        println!(
            "{y}: evasion between {:.2} and {:.2} pesos ({} / {} suspects)",
            e.min_estimate as f64 / 100.0,
            e.max_estimate as f64 / 100.0,
            e.min_population,
            e.max_population
        );
        estimates.push(e);
    }
    ctx.emit_table("estimates", csv_bytes(|w| write_estimates_csv(w, &estimates)))?;
    ctx.emit_table("breakdown", csv_bytes(|w| write_breakdown_csv(w, &taxpayer_breakdown(&ds, &inputs.suspects))))?;

    let cohorts: BTreeMap<CohortKind, BTreeSet<TaxpayerIdx>> = CohortKind::ALL
        .into_iter()
        .map(|c| (c, report.cohort_members(c).iter().filter_map(|id| ds.idx_of(id.as_str())).collect()))
        .collect();
    let quartiles = cohort_distribution_summary(&ds, &cohorts);
    ctx.emit_table("cohort_quartiles", csv_bytes(|w| write_cohort_quartiles_csv(w, &quartiles)))?;

    let mut close: BTreeMap<(CohortKind, i32), Vec<f64>> = BTreeMap::new();
    for r in &report.rows {
        if let Some(c) = r.close_efos {
            close.entry((r.cohort, r.year)).or_default().push(c as f64);
        }
    }
    ctx.emit_table(
        "close_validation",
        csv_bytes(|w| {
            let mut out = csv::Writer::from_writer(w);
            out.write_record(["cohort", "year", "n", "mean_close_efos", "median_close_efos"])?;
            for ((c, y), v) in &close {
                let mean = stats::mean(v).unwrap_or(0.0);
                let median = stats::percentile(v, 0.5).unwrap_or(0.0);
                out.write_record([
                    c.as_str().to_string(),
                    y.to_string(),
                    v.len().to_string(),
                    format!("{mean:.4}"),
                    format!("{median:.4}"),
                ])?;
            }
            out.flush()
        }),
    )?;
    print_comparison(ctx)
}
