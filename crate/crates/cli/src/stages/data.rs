use std::collections::BTreeMap;

use efosnet::ingest::{write_labels_csv, write_registry_csv, write_statements_csv, write_transactions_csv};
use efosnet::seed;
use efosnet::synthgen::generate_tables;
use serde::Serialize;

use super::load;
use crate::artifacts::{csv_bytes, Ctx};
use crate::error::CliError;

pub fn generate(ctx: &Ctx) -> Result<(), CliError> {
    let mut synth = ctx.cfg.synth.clone();
    synth.seed = seed::derive(ctx.cfg.seed, "generator");
    let (tables, truth) = generate_tables(&synth).map_err(|e| CliError::Config(e.to_string()))?;
    ctx.emit_file("data/transactions.csv", &csv_bytes(|w| write_transactions_csv(w, &tables.transactions)), "csv")?;
    ctx.emit_file("data/registry.csv", &csv_bytes(|w| write_registry_csv(w, tables.registry.values())), "csv")?;
    ctx.emit_file("data/labels.csv", &csv_bytes(|w| write_labels_csv(w, &tables.labels)), "csv")?;
    ctx.emit_file("data/statements.csv", &csv_bytes(|w| write_statements_csv(w, &tables.statements)), "csv")?;
    let mut truth_json = serde_json::to_string_pretty(&truth).expect("ground truth serializes");
    truth_json.push('\n');
    ctx.emit_file("data/ground_truth.json", truth_json.as_bytes(), "json")?;
    Ok(())
}

#[derive(Serialize)]
struct Summary {
    rows: BTreeMap<&'static str, usize>,
    diagnostics: BTreeMap<&'static str, usize>,
    taxpayers: usize,
    records: usize,
    years: Vec<i32>,
}

/// Fails (exit 1) only when a table cannot be read or exceeds the rejection cap.
pub fn validate(ctx: &Ctx) -> Result<(), CliError> {
    let loaded = load(ctx)?;
    let diag = csv_bytes(|w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["table", "line", "kind", "reason"])?;
        for (table, d) in &loaded.diagnostics {
            let kind = serde_json::to_value(d.kind).expect("kind serializes");
            out.write_record([*table, &d.line.to_string(), kind.as_str().unwrap_or_default(), &d.reason])?;
        }
        out.flush()
    });
    ctx.emit_table("diagnostics", diag)?;
    let mut diagnostics: BTreeMap<&'static str, usize> = loaded.row_counts.iter().map(|(t, _)| (*t, 0)).collect();
    for (t, _) in &loaded.diagnostics {
        *diagnostics.entry(t).or_default() += 1;
    }
    let summary = Summary {
        rows: loaded.row_counts.iter().copied().collect(),
        diagnostics,
        taxpayers: loaded.ds.n_taxpayers(),
        records: loaded.ds.n_records(),
        years: loaded.ds.years().into_iter().collect(),
    };
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    ctx.emit_file("validation.json", text.as_bytes(), "json")?;
    for (table, n) in &loaded.row_counts {
        println!("{table}: {n} rows, {} diagnostics", summary.diagnostics[table]);
    }
    Ok(())
}
