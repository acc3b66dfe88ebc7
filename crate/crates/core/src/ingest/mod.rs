//! Parsing, validation and indexing of the four input tables.
//!
//! * transactions: monthly aggregated invoice flows between two taxpayers
//! * registry: taxpayer metadata
//! * labels: authority classification (definitive / alleged invoice mill)
//! * statements: yearly VAT actually paid
//!
//! Parsers stream rows and collect per-row [`Diagnostic`]s; a row that fails
//! validation is skipped, and parsing aborts once the number of rejected rows
//! exceeds [`ParseOptions::max_rejected`].

mod dataset;
mod parse;
mod write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{Centavos, MonthKey, TaxpayerId};

pub use dataset::{build_dataset, Dataset, RecordView, TransactionColumns};
pub use parse::{parse_labels, parse_registry, parse_statements, parse_transactions, StatementTable};
pub use write::{
    write_labels_csv, write_registry_csv, write_statements_csv, write_transactions, write_transactions_csv,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TxKind {
    Income,
    Outcome,
}

impl TxKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TxKind::Income => "income",
            TxKind::Outcome => "outcome",
        }
    }

    pub fn parse(token: &str) -> Option<Self> {
        match token.trim().to_ascii_lowercase().as_str() {
            "income" | "ingreso" | "i" => Some(TxKind::Income),
            "outcome" | "egreso" | "e" => Some(TxKind::Outcome),
            _ => None,
        }
    }
}

/// One monthly aggregated invoice flow `emitter -> receiver`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionRecord {
    pub emitter: TaxpayerId,
    pub receiver: TaxpayerId,
    pub period: MonthKey,
    pub kind: TxKind,
    pub tx_count: u64,
    pub subtotal: Centavos,
    pub vat: Centavos,
    pub total: Centavos,
    pub cancelled_total: Centavos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaxpayerType {
    Legal,
    Natural,
    Unknown,
}

impl TaxpayerType {
    /// Alias table: `moral`/`persona_moral`/`pm` are legal entities,
    /// `fisica`/`persona_fisica`/`individual`/`pf` are natural persons.
    /// Anything else is `Unknown`.
    pub fn parse(token: &str) -> Self {
        match token.trim().to_ascii_lowercase().as_str() {
            "legal" | "moral" | "persona_moral" | "pm" => TaxpayerType::Legal,
            "natural" | "fisica" | "persona_fisica" | "individual" | "pf" => TaxpayerType::Natural,
            _ => TaxpayerType::Unknown,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TaxpayerType::Legal => "legal",
            TaxpayerType::Natural => "natural",
            TaxpayerType::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaxpayerStatus {
    Active,
    Cancelled,
    Suspended,
    Unknown,
}

impl TaxpayerStatus {
    pub fn parse(token: &str) -> Self {
        match token.trim().to_ascii_lowercase().as_str() {
            "active" | "activo" => TaxpayerStatus::Active,
            "cancelled" | "canceled" | "cancelado" => TaxpayerStatus::Cancelled,
            "suspended" | "suspendido" => TaxpayerStatus::Suspended,
            _ => TaxpayerStatus::Unknown,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TaxpayerStatus::Active => "active",
            TaxpayerStatus::Cancelled => "cancelled",
            TaxpayerStatus::Suspended => "suspended",
            TaxpayerStatus::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxpayerRecord {
    pub id: TaxpayerId,
    pub taxpayer_type: TaxpayerType,
    pub status: TaxpayerStatus,
    pub sector: String,
    pub location: String,
    pub registered: Option<NaiveDate>,
}

impl TaxpayerRecord {
    /// Placeholder for a taxpayer seen in transactions but absent from the registry.
    pub fn unknown(id: TaxpayerId) -> Self {
        TaxpayerRecord {
            id,
            taxpayer_type: TaxpayerType::Unknown,
            status: TaxpayerStatus::Unknown,
            sector: String::new(),
            location: String::new(),
            registered: None,
        }
    }
}

/// Authority classification. `Definitive` outranks `Alleged`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EfosLabel {
    Alleged,
    Definitive,
}

impl EfosLabel {
    pub fn parse(token: &str) -> Option<Self> {
        match token.trim().to_ascii_lowercase().as_str() {
            "definitive" | "definitive_efos" | "definitivo" => Some(EfosLabel::Definitive),
            "alleged" | "alleged_efos" | "presunto" => Some(EfosLabel::Alleged),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EfosLabel::Definitive => "definitive",
            EfosLabel::Alleged => "alleged",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub id: TaxpayerId,
    pub label: EfosLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxStatement {
    pub id: TaxpayerId,
    pub year: i32,
    pub vat_paid: Centavos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "jsonl" | "ndjson" => Ok(Format::Jsonl),
            other => Err(format!("unknown format `{other}` (expected csv or jsonl)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    MalformedRow,
    NegativeAmount,
    Duplicate,
}

impl DiagnosticKind {
    /// Whether the row was dropped (counts towards the abort cap).
    pub fn rejects_row(self) -> bool {
        !matches!(self, DiagnosticKind::Duplicate)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub line: usize,
    pub kind: DiagnosticKind,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub records: T,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, Copy)]
pub struct ParseOptions {
    pub format: Format,
    /// Abort once more than this many rows have been rejected.
    pub max_rejected: usize,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { format: Format::Csv, max_rejected: 1000 }
    }
}

impl ParseOptions {
    pub fn with_format(format: Format) -> Self {
        ParseOptions { format, ..Default::default() }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("missing column `{0}` in header")]
    MissingColumn(String),
    #[error("aborted after {} rejected rows (cap {cap})", .diagnostics.iter().filter(|d| d.kind.rejects_row()).count())]
    TooManyMalformed { cap: usize, diagnostics: Vec<Diagnostic> },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub const TRANSACTION_COLUMNS: [&str; 10] = [
    "emitter",
    "receiver",
    "year",
    "month",
    "kind",
    "tx_count",
    "subtotal",
    "vat",
    "total",
    "cancelled_total",
];
pub const REGISTRY_COLUMNS: [&str; 6] = ["id", "type", "status", "sector", "location", "registered"];
pub const LABEL_COLUMNS: [&str; 2] = ["id", "label"];
pub const STATEMENT_COLUMNS: [&str; 3] = ["id", "year", "vat_paid"];
