use std::collections::BTreeMap;
use std::io::{self, Write};

use super::{
    Format, LabelRecord, TaxStatement, TaxpayerRecord, TransactionRecord, LABEL_COLUMNS, REGISTRY_COLUMNS,
    STATEMENT_COLUMNS, TRANSACTION_COLUMNS,
};
use crate::types::{format_amount, TaxpayerId};

// Ids are opaque tokens without commas or quotes in practice; csv::Writer
// quotes them if they ever contain either.

pub fn write_transactions<W: Write>(w: W, records: &[TransactionRecord], format: Format) -> io::Result<()> {
    match format {
        Format::Csv => write_transactions_csv(w, records),
        Format::Jsonl => write_transactions_jsonl(w, records),
    }
}

pub fn write_transactions_csv<W: Write>(w: W, records: &[TransactionRecord]) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRANSACTION_COLUMNS)?;
    for r in records {
        out.write_record([
            r.emitter.as_str(),
            r.receiver.as_str(),
            &r.period.year.to_string(),
            &r.period.month.to_string(),
            r.kind.as_str(),
            &r.tx_count.to_string(),
            &format_amount(r.subtotal),
            &format_amount(r.vat),
            &format_amount(r.total),
            &format_amount(r.cancelled_total),
        ])?;
    }
    out.flush()
}

fn write_transactions_jsonl<W: Write>(mut w: W, records: &[TransactionRecord]) -> io::Result<()> {
    for r in records {
        // Amounts go out as JSON numbers with exactly two decimals.
        writeln!(
            w,
            "{{\"emitter\":{},\"receiver\":{},\"year\":{},\"month\":{},\"kind\":\"{}\",\"tx_count\":{},\"subtotal\":{},\"vat\":{},\"total\":{},\"cancelled_total\":{}}}",
            serde_json::to_string(r.emitter.as_str())?,
            serde_json::to_string(r.receiver.as_str())?,
            r.period.year,
            r.period.month,
            r.kind.as_str(),
            r.tx_count,
            format_amount(r.subtotal),
            format_amount(r.vat),
            format_amount(r.total),
            format_amount(r.cancelled_total),
        )?;
    }
    w.flush()
}

pub fn write_registry_csv<'a, W: Write>(
    w: W,
    records: impl IntoIterator<Item = &'a TaxpayerRecord>,
) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(REGISTRY_COLUMNS)?;
    for r in records {
        let date = r.registered.map(|d| d.format("%Y-%m-%d").to_string()).unwrap_or_default();
        out.write_record([
            r.id.as_str(),
            r.taxpayer_type.as_str(),
            r.status.as_str(),
            &r.sector,
            &r.location,
            &date,
        ])?;
    }
    out.flush()
}

pub fn write_labels_csv<W: Write>(w: W, labels: &BTreeMap<TaxpayerId, LabelRecord>) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(LABEL_COLUMNS)?;
    for l in labels.values() {
        out.write_record([l.id.as_str(), l.label.as_str()])?;
    }
    out.flush()
}

pub fn write_statements_csv<W: Write>(
    w: W,
    statements: &BTreeMap<(TaxpayerId, i32), TaxStatement>,
) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(STATEMENT_COLUMNS)?;
    for s in statements.values() {
        out.write_record([s.id.as_str(), &s.year.to_string(), &format_amount(s.vat_paid)])?;
    }
    out.flush()
}
