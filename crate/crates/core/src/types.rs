//! Identifiers, calendar keys and exact currency amounts shared by every module.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Currency amount in integer centavos (1 peso = 100 centavos).
pub type Centavos = i64;

/// Opaque anonymized taxpayer identifier.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TaxpayerId(Arc<str>);

impl TaxpayerId {
    /// Returns `None` for an empty (or all-whitespace) identifier.
    pub fn new(value: &str) -> Option<Self> {
        let value = value.trim();
        if value.is_empty() {
            None
        } else {
            Some(TaxpayerId(Arc::from(value)))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for TaxpayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl fmt::Display for TaxpayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for TaxpayerId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for TaxpayerId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        TaxpayerId::new(&s).ok_or_else(|| serde::de::Error::custom("empty taxpayer id"))
    }
}

/// Dense index of a taxpayer inside a [`crate::ingest::Dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TaxpayerIdx(pub u32);

impl TaxpayerIdx {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Calendar month; ordered by year then month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MonthKey {
    pub year: i32,
    pub month: u8,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("month {0} outside 1..=12")]
pub struct InvalidMonth(pub i64);

impl MonthKey {
    pub fn new(year: i32, month: u8) -> Result<Self, InvalidMonth> {
        if (1..=12).contains(&month) {
            Ok(MonthKey { year, month })
        } else {
            Err(InvalidMonth(month as i64))
        }
    }

    /// All twelve months of `year`.
    pub fn months_of(year: i32) -> impl Iterator<Item = MonthKey> {
        (1..=12).map(move |month| MonthKey { year, month })
    }

    pub fn is_december(self) -> bool {
        self.month == 12
    }
}

impl fmt::Display for MonthKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AmountError {
    #[error("empty amount")]
    Empty,
    #[error("negative amount `{0}`")]
    Negative(String),
    #[error("invalid amount `{0}`")]
    Invalid(String),
    #[error("more than two fractional digits in `{0}`")]
    Precision(String),
    #[error("amount `{0}` overflows")]
    Overflow(String),
}

/// Parses a decimal peso amount into exact centavos.
///
/// Accepts an optional sign, digits and at most two fractional digits
/// (`"1000"`, `"1000.5"`, `"1000.50"`). Trailing zeros beyond two digits
/// (`"1000.500"`) are accepted since they carry no extra precision.
pub fn parse_amount(text: &str) -> Result<Centavos, AmountError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(AmountError::Empty);
    }
    let (negative, body) = match s.as_bytes()[0] {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(AmountError::Invalid(s.to_string()));
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return Err(AmountError::Invalid(s.to_string()));
    }
    let frac_trimmed = if frac_part.len() > 2 {
        if frac_part[2..].bytes().any(|b| b != b'0') {
            return Err(AmountError::Precision(s.to_string()));
        }
        &frac_part[..2]
    } else {
        frac_part
    };
    let mut value: i64 = 0;
    for b in int_part.bytes() {
        value = value
            .checked_mul(10)
            .and_then(|v| v.checked_add((b - b'0') as i64))
            .ok_or_else(|| AmountError::Overflow(s.to_string()))?;
    }
    let mut cents: i64 = 0;
    for (i, b) in frac_trimmed.bytes().enumerate() {
        cents += ((b - b'0') as i64) * if i == 0 { 10 } else { 1 };
    }
    let total = value
        .checked_mul(100)
        .and_then(|v| v.checked_add(cents))
        .ok_or_else(|| AmountError::Overflow(s.to_string()))?;
    if negative && total != 0 {
        return Err(AmountError::Negative(s.to_string()));
    }
    Ok(total)
}

/// Formats centavos as a peso amount with exactly two fractional digits.
pub fn format_amount(amount: Centavos) -> String {
    let sign = if amount < 0 { "-" } else { "" };
    let abs = amount.unsigned_abs();
    format!("{sign}{}.{:02}", abs / 100, abs % 100)
}

/// Centavos to pesos as a float, for analytics only.
#[inline]
pub fn to_pesos(amount: Centavos) -> f64 {
    amount as f64 / 100.0
}

impl FromStr for MonthKey {
    type Err = String;

    /// Parses `YYYY-MM`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (y, m) = s.split_once('-').ok_or_else(|| format!("expected YYYY-MM, got `{s}`"))?;
        let year: i32 = y.parse().map_err(|_| format!("bad year in `{s}`"))?;
        let month: u8 = m.parse().map_err(|_| format!("bad month in `{s}`"))?;
        MonthKey::new(year, month).map_err(|e| e.to_string())
    }
}
