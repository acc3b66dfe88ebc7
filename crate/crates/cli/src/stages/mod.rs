mod classify;
mod data;
mod metrics;
mod network;
mod report;

use std::fs::File;

use efosnet::ingest::{
    build_dataset, parse_labels, parse_registry, parse_statements, parse_transactions, Dataset, Diagnostic,
    IngestError, ParseOptions,
};
use efosnet::network::{build_monthly_network, compute_activity_regime, AmountRegime, TemporalGraph};
use efosnet::MonthKey;

pub use classify::{importance, score, train};
pub use data::{generate, validate};
pub use metrics::metrics;
pub use network::{network, regime};
pub use report::report;

use crate::artifacts::Ctx;
use crate::error::CliError;

pub struct Loaded {
    pub ds: Dataset,
    /// `(table, diagnostic)` in table order.
    pub diagnostics: Vec<(&'static str, Diagnostic)>,
    pub row_counts: Vec<(&'static str, usize)>,
}

fn open(ctx: &Ctx, table: &'static str) -> Result<(File, ParseOptions, String), CliError> {
    let (path, format) = ctx.cfg.input_path(table);
    let file = File::open(&path).map_err(|e| CliError::io(&path, e))?;
    Ok((file, ParseOptions { format, max_rejected: ctx.cfg.max_rejected }, path.display().to_string()))
}

fn ingest_err(path: String) -> impl FnOnce(IngestError) -> CliError {
    move |source| CliError::Ingest { path, source }
}

pub fn load(ctx: &Ctx) -> Result<Loaded, CliError> {
    let mut diagnostics = Vec::new();
    let mut row_counts = Vec::new();
    let (f, o, p) = open(ctx, "transactions")?;
    let tx = parse_transactions(f, o).map_err(ingest_err(p))?;
    diagnostics.extend(tx.diagnostics.into_iter().map(|d| ("transactions", d)));
    row_counts.push(("transactions", tx.records.len()));
    let (f, o, p) = open(ctx, "registry")?;
    let reg = parse_registry(f, o).map_err(ingest_err(p))?;
    diagnostics.extend(reg.diagnostics.into_iter().map(|d| ("registry", d)));
    row_counts.push(("registry", reg.records.len()));
    let (f, o, p) = open(ctx, "labels")?;
    let lab = parse_labels(f, o).map_err(ingest_err(p))?;
    diagnostics.extend(lab.diagnostics.into_iter().map(|d| ("labels", d)));
    row_counts.push(("labels", lab.records.len()));
    let (f, o, p) = open(ctx, "statements")?;
    let st = parse_statements(f, o).map_err(ingest_err(p))?;
    diagnostics.extend(st.diagnostics.into_iter().map(|d| ("statements", d)));
    row_counts.push(("statements", st.records.len()));
    let ds = build_dataset(&tx.records, &reg.records, &lab.records, &st.records);
    Ok(Loaded { ds, diagnostics, row_counts })
}

pub fn years(ctx: &Ctx, ds: &Dataset) -> Vec<i32> {
    ds.years().into_iter().filter(|&y| ctx.cfg.year_in_range(y)).collect()
}

/// Months of `year` present in the data, with their regime and filtered
/// network; `None` when no labeled taxpayer invoiced that month.
pub fn monthly_networks(ctx: &Ctx, ds: &Dataset, year: i32) -> Vec<(MonthKey, Option<(AmountRegime, TemporalGraph)>)> {
    MonthKey::months_of(year)
        .filter(|&m| !ds.rows_in(m).is_empty())
        .map(|m| {
            let built = compute_activity_regime(ds, m, ctx.cfg.edge_kinds).ok().map(|r| {
                let g = build_monthly_network(ds, &r, m, ctx.cfg.edge_kinds).expect("regime matches period");
                (r, g)
            });
            (m, built)
        })
        .collect()
}
