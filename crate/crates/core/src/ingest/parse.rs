use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read};

use chrono::NaiveDate;

use super::{
    Diagnostic, DiagnosticKind, EfosLabel, Format, IngestError, LabelRecord, ParseOptions, Parsed, TaxStatement,
    TaxpayerRecord, TaxpayerStatus, TaxpayerType, TransactionRecord, TxKind, LABEL_COLUMNS, REGISTRY_COLUMNS,
    STATEMENT_COLUMNS, TRANSACTION_COLUMNS,
};
use crate::types::{parse_amount, AmountError, Centavos, MonthKey, TaxpayerId};

/// Why a single row was rejected.
struct RowError {
    kind: DiagnosticKind,
    reason: String,
}

impl RowError {
    fn malformed(reason: impl Into<String>) -> Self {
        RowError { kind: DiagnosticKind::MalformedRow, reason: reason.into() }
    }
}

impl From<AmountError> for RowError {
    fn from(e: AmountError) -> Self {
        let kind = match e {
            AmountError::Negative(_) => DiagnosticKind::NegativeAmount,
            _ => DiagnosticKind::MalformedRow,
        };
        RowError { kind, reason: e.to_string() }
    }
}

/// Collects diagnostics and enforces the rejection cap.
struct Collector {
    cap: usize,
    rejected: usize,
    diagnostics: Vec<Diagnostic>,
}

impl Collector {
    fn new(cap: usize) -> Self {
        Collector { cap, rejected: 0, diagnostics: Vec::new() }
    }

    fn push(&mut self, line: usize, kind: DiagnosticKind, reason: String) -> Result<(), IngestError> {
        if kind.rejects_row() {
            self.rejected += 1;
        }
        self.diagnostics.push(Diagnostic { line, kind, reason });
        if self.rejected > self.cap {
            return Err(IngestError::TooManyMalformed {
                cap: self.cap,
                diagnostics: std::mem::take(&mut self.diagnostics),
            });
        }
        Ok(())
    }

    fn reject(&mut self, line: usize, err: RowError) -> Result<(), IngestError> {
        self.push(line, err.kind, err.reason)
    }
}

/// Streams rows of `source`, handing each one to `f` as the values of
/// `columns` in order. Structural problems of a single row are reported as
/// `Err(reason)` to `f`; only header-level problems abort.
fn for_each_row<R, F>(source: R, format: Format, columns: &[&str], mut f: F) -> Result<(), IngestError>
where
    R: Read,
    F: FnMut(usize, Result<Vec<String>, String>) -> Result<(), IngestError>,
{
    match format {
        Format::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(true)
                .flexible(true)
                .trim(csv::Trim::All)
                .from_reader(source);
            let headers = reader.headers()?.clone();
            if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
                return Ok(());
            }
            let mut positions = Vec::with_capacity(columns.len());
            for col in columns {
                let pos = headers
                    .iter()
                    .position(|h| h.eq_ignore_ascii_case(col))
                    .ok_or_else(|| IngestError::MissingColumn(col.to_string()))?;
                positions.push(pos);
            }
            let mut record = csv::StringRecord::new();
            loop {
                let line_hint = reader.position().line();
                match reader.read_record(&mut record) {
                    Ok(false) => break,
                    Ok(true) => {
                        let line = record.position().map(|p| p.line() as usize).unwrap_or(line_hint as usize);
                        if record.len() == 1 && record[0].is_empty() {
                            continue;
                        }
                        if record.len() != headers.len() {
                            f(line, Err(format!("expected {} fields, found {}", headers.len(), record.len())))?;
                            continue;
                        }
                        f(line, Ok(positions.iter().map(|&p| record[p].to_string()).collect()))?;
                    }
                    Err(e) => {
                        let line = e.position().map(|p| p.line() as usize).unwrap_or(line_hint as usize);
                        if e.is_io_error() {
                            return Err(e.into());
                        }
                        f(line, Err(e.to_string()))?;
                    }
                }
            }
            Ok(())
        }
        Format::Jsonl => {
            let reader = BufReader::new(source);
            for (i, line) in reader.lines().enumerate() {
                let line_no = i + 1;
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let row = match serde_json::from_str::<serde_json::Value>(&line) {
                    Ok(serde_json::Value::Object(map)) => {
                        let mut values = Vec::with_capacity(columns.len());
                        let mut missing = None;
                        for col in columns {
                            match map.get(*col) {
                                Some(serde_json::Value::String(s)) => values.push(s.trim().to_string()),
                                Some(serde_json::Value::Number(n)) => values.push(n.to_string()),
                                Some(serde_json::Value::Bool(b)) => values.push(b.to_string()),
                                Some(serde_json::Value::Null) | None => {
                                    missing = Some(*col);
                                    break;
                                }
                                Some(other) => values.push(other.to_string()),
                            }
                        }
                        match missing {
                            Some(col) => Err(format!("missing field `{col}`")),
                            None => Ok(values),
                        }
                    }
                    Ok(_) => Err("expected a JSON object".to_string()),
                    Err(e) => Err(format!("invalid JSON: {e}")),
                };
                f(line_no, row)?;
            }
            Ok(())
        }
    }
}

fn id_field(value: &str, name: &str) -> Result<TaxpayerId, RowError> {
    TaxpayerId::new(value).ok_or_else(|| RowError::malformed(format!("empty {name}")))
}

fn int_field<T: std::str::FromStr>(value: &str, name: &str) -> Result<T, RowError> {
    value.trim().parse::<T>().map_err(|_| RowError::malformed(format!("invalid {name} `{value}`")))
}

fn amount_field(value: &str, name: &str) -> Result<Centavos, RowError> {
    parse_amount(value).map_err(|e| {
        let mut err = RowError::from(e);
        err.reason = format!("{name}: {}", err.reason);
        err
    })
}

fn transaction_from_row(v: &[String]) -> Result<TransactionRecord, RowError> {
    let emitter = id_field(&v[0], "emitter")?;
    let receiver = id_field(&v[1], "receiver")?;
    let year: i32 = int_field(&v[2], "year")?;
    let month: u8 = int_field(&v[3], "month")?;
    let period = MonthKey::new(year, month).map_err(|e| RowError::malformed(e.to_string()))?;
    let kind = TxKind::parse(&v[4]).ok_or_else(|| RowError::malformed(format!("unknown kind `{}`", v[4])))?;
    let tx_count: u64 = int_field(&v[5], "tx_count")?;
    if tx_count == 0 {
        return Err(RowError::malformed("tx_count must be positive"));
    }
    let subtotal = amount_field(&v[6], "subtotal")?;
    let vat = amount_field(&v[7], "vat")?;
    let total = amount_field(&v[8], "total")?;
    let cancelled_total = amount_field(&v[9], "cancelled_total")?;
    if total < subtotal {
        return Err(RowError::malformed(format!("total {} below subtotal {}", v[8], v[6])));
    }
    if cancelled_total > total {
        return Err(RowError::malformed(format!("cancelled_total {} above total {}", v[9], v[8])));
    }
    Ok(TransactionRecord { emitter, receiver, period, kind, tx_count, subtotal, vat, total, cancelled_total })
}

/// Parses the transactions table (csv with header, or jsonl).
///
/// Self-loops are accepted here; graph builders drop them.
pub fn parse_transactions<R: Read>(
    source: R,
    options: ParseOptions,
) -> Result<Parsed<Vec<TransactionRecord>>, IngestError> {
    let mut out = Vec::new();
    let mut diags = Collector::new(options.max_rejected);
    for_each_row(source, options.format, &TRANSACTION_COLUMNS, |line, row| match row {
        Err(reason) => diags.push(line, DiagnosticKind::MalformedRow, reason),
        Ok(values) => match transaction_from_row(&values) {
            Ok(rec) => {
                out.push(rec);
                Ok(())
            }
            Err(e) => diags.reject(line, e),
        },
    })?;
    Ok(Parsed { records: out, diagnostics: diags.diagnostics })
}

fn registry_from_row(v: &[String]) -> Result<TaxpayerRecord, RowError> {
    let id = id_field(&v[0], "id")?;
    let registered = if v[5].trim().is_empty() {
        None
    } else {
        Some(
            NaiveDate::parse_from_str(v[5].trim(), "%Y-%m-%d")
                .map_err(|_| RowError::malformed(format!("invalid date `{}`", v[5])))?,
        )
    };
    Ok(TaxpayerRecord {
        id,
        taxpayer_type: TaxpayerType::parse(&v[1]),
        status: TaxpayerStatus::parse(&v[2]),
        sector: v[3].trim().to_string(),
        location: v[4].trim().to_string(),
        registered,
    })
}

/// Parses the registry. Duplicate ids: the later row wins, with a diagnostic.
pub fn parse_registry<R: Read>(
    source: R,
    options: ParseOptions,
) -> Result<Parsed<BTreeMap<TaxpayerId, TaxpayerRecord>>, IngestError> {
    let mut out = BTreeMap::new();
    let mut diags = Collector::new(options.max_rejected);
    for_each_row(source, options.format, &REGISTRY_COLUMNS, |line, row| match row {
        Err(reason) => diags.push(line, DiagnosticKind::MalformedRow, reason),
        Ok(values) => match registry_from_row(&values) {
            Ok(rec) => {
                let id = rec.id.clone();
                if out.insert(id.clone(), rec).is_some() {
                    diags.push(line, DiagnosticKind::Duplicate, format!("duplicate id `{id}`, later row kept"))?;
                }
                Ok(())
            }
            Err(e) => diags.reject(line, e),
        },
    })?;
    Ok(Parsed { records: out, diagnostics: diags.diagnostics })
}

/// Parses authority labels. Conflicting rows resolve to the most severe
/// label (definitive over alleged) regardless of order, with a diagnostic.
pub fn parse_labels<R: Read>(
    source: R,
    options: ParseOptions,
) -> Result<Parsed<BTreeMap<TaxpayerId, LabelRecord>>, IngestError> {
    let mut out: BTreeMap<TaxpayerId, LabelRecord> = BTreeMap::new();
    let mut diags = Collector::new(options.max_rejected);
    for_each_row(source, options.format, &LABEL_COLUMNS, |line, row| {
        let values = match row {
            Err(reason) => return diags.push(line, DiagnosticKind::MalformedRow, reason),
            Ok(v) => v,
        };
        let id = match id_field(&values[0], "id") {
            Ok(id) => id,
            Err(e) => return diags.reject(line, e),
        };
        let Some(label) = EfosLabel::parse(&values[1]) else {
            return diags.reject(line, RowError::malformed(format!("unknown label `{}`", values[1])));
        };
        match out.get_mut(&id) {
            None => {
                out.insert(id.clone(), LabelRecord { id, label });
                Ok(())
            }
            Some(existing) => {
                let kept = existing.label.max(label);
                existing.label = kept;
                diags.push(line, DiagnosticKind::Duplicate, format!("duplicate label for `{id}`, kept {}", kept.as_str()))
            }
        }
    })?;
    Ok(Parsed { records: out, diagnostics: diags.diagnostics })
}

pub type StatementTable = BTreeMap<(TaxpayerId, i32), TaxStatement>;

/// Parses yearly tax statements keyed by `(id, year)`; later duplicates win.
pub fn parse_statements<R: Read>(
    source: R,
    options: ParseOptions,
) -> Result<Parsed<StatementTable>, IngestError> {
    let mut out = BTreeMap::new();
    let mut diags = Collector::new(options.max_rejected);
    for_each_row(source, options.format, &STATEMENT_COLUMNS, |line, row| {
        let values = match row {
            Err(reason) => return diags.push(line, DiagnosticKind::MalformedRow, reason),
            Ok(v) => v,
        };
        let parsed = (|| -> Result<TaxStatement, RowError> {
            Ok(TaxStatement {
                id: id_field(&values[0], "id")?,
                year: int_field(&values[1], "year")?,
                vat_paid: amount_field(&values[2], "vat_paid")?,
            })
        })();
        match parsed {
            Ok(st) => {
                let key = (st.id.clone(), st.year);
                if out.insert(key, st).is_some() {
                    diags.push(line, DiagnosticKind::Duplicate, "duplicate (id, year) statement, later row kept".into())?;
                }
                Ok(())
            }
            Err(e) => diags.reject(line, e),
        }
    })?;
    Ok(Parsed { records: out, diagnostics: diags.diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "emitter,receiver,year,month,kind,tx_count,subtotal,vat,total,cancelled_total\n";

    fn csv(options_rows: &str) -> Parsed<Vec<TransactionRecord>> {
        parse_transactions(format!("{HEADER}{options_rows}").as_bytes(), ParseOptions::default()).unwrap()
    }

    #[test]
    fn maps_csv_fields() {
        let p = csv("A1,B2,2015,3,income,4,1000.00,160.00,1160.00,0.00\n");
        assert!(p.diagnostics.is_empty());
        assert_eq!(
            p.records,
            vec![TransactionRecord {
                emitter: TaxpayerId::new("A1").unwrap(),
                receiver: TaxpayerId::new("B2").unwrap(),
                period: MonthKey::new(2015, 3).unwrap(),
                kind: TxKind::Income,
                tx_count: 4,
                subtotal: 100_000,
                vat: 16_000,
                total: 116_000,
                cancelled_total: 0,
            }]
        );
    }

    #[test]
    fn empty_stream_is_empty() {
        let p = parse_transactions(&b""[..], ParseOptions::default()).unwrap();
        assert!(p.records.is_empty());
        assert!(p.diagnostics.is_empty());
        let p = parse_transactions(&b""[..], ParseOptions::with_format(Format::Jsonl)).unwrap();
        assert!(p.records.is_empty());
    }

    #[test]
    fn total_below_subtotal_is_malformed() {
        let p = csv("A1,B2,2015,3,income,4,1000.00,160.00,900.00,0.00\nA1,B2,2015,4,income,1,1.00,0.16,1.16,0.00\n");
        assert_eq!(p.records.len(), 1);
        assert_eq!(p.diagnostics.len(), 1);
        assert_eq!(p.diagnostics[0].kind, DiagnosticKind::MalformedRow);
        assert_eq!(p.diagnostics[0].line, 2);
    }

    #[test]
    fn negative_amount_rejects_row() {
        let p = csv("A1,B2,2015,3,income,4,-5.00,0.00,0.00,0.00\n");
        assert!(p.records.is_empty());
        assert_eq!(p.diagnostics[0].kind, DiagnosticKind::NegativeAmount);
    }

    #[test]
    fn structural_errors_become_diagnostics() {
        let p = csv("A1,B2,2015\nA1,B2,2015,13,income,1,1.00,0.00,1.00,0.00\nA1,B2,2015,1,gift,1,1.00,0.00,1.00,0.00\nA1,B2,2015,1,income,0,1.00,0.00,1.00,0.00\n");
        assert!(p.records.is_empty());
        assert_eq!(p.diagnostics.len(), 4);
        assert_eq!(p.diagnostics.iter().map(|d| d.line).collect::<Vec<_>>(), vec![2, 3, 4, 5]);
    }

    #[test]
    fn cap_aborts() {
        let rows = "x,y,2015,1,income,1,bad,0,0,0\n".repeat(4);
        let err = parse_transactions(
            format!("{HEADER}{rows}").as_bytes(),
            ParseOptions { format: Format::Csv, max_rejected: 3 },
        )
        .unwrap_err();
        match err {
            IngestError::TooManyMalformed { cap, diagnostics } => {
                assert_eq!(cap, 3);
                assert_eq!(diagnostics.len(), 4);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_column_is_fatal() {
        let err = parse_transactions(&b"emitter,receiver\nA,B\n"[..], ParseOptions::default()).unwrap_err();
        assert!(matches!(err, IngestError::MissingColumn(c) if c == "year"));
    }

    #[test]
    fn jsonl_accepts_numbers_and_strings() {
        let src = r#"{"emitter":"A1","receiver":"B2","year":2015,"month":3,"kind":"income","tx_count":4,"subtotal":1000.00,"vat":"160.00","total":1160.00,"cancelled_total":0}
{"emitter":"A1"}
"#;
        let p = parse_transactions(src.as_bytes(), ParseOptions::with_format(Format::Jsonl)).unwrap();
        assert_eq!(p.records.len(), 1);
        assert_eq!(p.records[0].subtotal, 100_000);
        assert_eq!(p.records[0].vat, 16_000);
        assert_eq!(p.diagnostics.len(), 1);
        assert_eq!(p.diagnostics[0].line, 2);
    }

    #[test]
    fn registry_aliases_and_duplicates() {
        let src = "id,type,status,sector,location,registered\nA1,legal,active,541,MX-09,2014-01-15\nB2,moral,cancelado,1,X,\nA1,natural,zzz,2,Y,2016-02-01\n";
        let p = parse_registry(src.as_bytes(), ParseOptions::default()).unwrap();
        assert_eq!(p.diagnostics.len(), 1);
        assert_eq!(p.diagnostics[0].kind, DiagnosticKind::Duplicate);
        let b2 = &p.records[&TaxpayerId::new("B2").unwrap()];
        assert_eq!(b2.taxpayer_type, TaxpayerType::Legal);
        assert_eq!(b2.status, TaxpayerStatus::Cancelled);
        assert_eq!(b2.registered, None);
        let a1 = &p.records[&TaxpayerId::new("A1").unwrap()];
        assert_eq!(a1.taxpayer_type, TaxpayerType::Natural);
        assert_eq!(a1.status, TaxpayerStatus::Unknown);
    }

    #[test]
    fn registry_first_row_example() {
        let src = "id,type,status,sector,location,registered\nA1,legal,active,541,MX-09,2014-01-15\n";
        let p = parse_registry(src.as_bytes(), ParseOptions::default()).unwrap();
        let a1 = &p.records[&TaxpayerId::new("A1").unwrap()];
        assert_eq!(a1.taxpayer_type, TaxpayerType::Legal);
        assert_eq!(a1.sector, "541");
        assert_eq!(a1.registered, NaiveDate::from_ymd_opt(2014, 1, 15));
    }

    #[test]
    fn label_precedence_is_order_free() {
        for src in ["id,label\nE9,definitive\nE9,alleged\n", "id,label\nE9,alleged\nE9,definitive\n"] {
            let p = parse_labels(src.as_bytes(), ParseOptions::default()).unwrap();
            assert_eq!(p.records[&TaxpayerId::new("E9").unwrap()].label, EfosLabel::Definitive);
            assert_eq!(p.diagnostics.len(), 1);
        }
        let p = parse_labels(&b""[..], ParseOptions::default()).unwrap();
        assert!(p.records.is_empty());
    }

    #[test]
    fn statements_parse() {
        let src = "id,year,vat_paid\nA1,2015,60.00\nA1,2015,70.00\nA2,x,1\n";
        let p = parse_statements(src.as_bytes(), ParseOptions::default()).unwrap();
        assert_eq!(p.records[&(TaxpayerId::new("A1").unwrap(), 2015)].vat_paid, 7000);
        assert_eq!(p.diagnostics.len(), 2);
    }
}
