//! Writing and reading stage artifacts. Every artifact gets a
//! `<name>.meta.json` sidecar with the config hash and seed.

use std::fs;
use std::path::{Path, PathBuf};

use efosnet::ingest::Format;
use serde::Serialize;
use serde_json::{Map, Number, Value};

use crate::config::RunConfig;
use crate::error::CliError;

/// Stage context: resolved config, its hash and the running command.
pub struct Ctx {
    pub cfg: RunConfig,
    pub hash: String,
    pub command: &'static str,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    artifact: &'a str,
    command: &'a str,
    config_hash: &'a str,
    seed: u64,
    format: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    rows: Option<usize>,
}

/// A string table as read back from an artifact.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn col(&self, name: &str) -> Result<usize, CliError> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Stage(format!("artifact lacks column `{name}`")))
    }
}

fn ext(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Jsonl => "jsonl",
    }
}

fn cell_to_json(cell: &str) -> Value {
    match cell {
        "" => Value::Null,
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        _ if plain_decimal(cell) => match serde_json::from_str::<Number>(cell) {
            Ok(n) => Value::Number(n),
            Err(_) => Value::String(cell.to_string()),
        },
        _ => Value::String(cell.to_string()),
    }
}

/// `-?digits[.digits]` without leading zeros; only these keep their text
/// when written as JSON numbers.
fn plain_decimal(cell: &str) -> bool {
    let body = cell.strip_prefix('-').unwrap_or(cell);
    let (int, frac) = body.split_once('.').unwrap_or((body, "0"));
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    digits(int) && digits(frac) && (int == "0" || !int.starts_with('0'))
}

fn json_to_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn parse_csv(bytes: &[u8]) -> Result<Table, CliError> {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers().map_err(CliError::stage)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec.map_err(CliError::stage)?.iter().map(str::to_string).collect());
    }
    Ok(Table { header, rows })
}

fn csv_to_jsonl(csv_bytes: &[u8]) -> Result<(Vec<u8>, usize), CliError> {
    let t = parse_csv(csv_bytes)?;
    let mut out = Vec::new();
    for row in &t.rows {
        let obj: Map<String, Value> = t.header.iter().cloned().zip(row.iter().map(|c| cell_to_json(c))).collect();
        out.extend(serde_json::to_vec(&Value::Object(obj)).expect("row serializes"));
        out.push(b'\n');
    }
    Ok((out, t.rows.len()))
}

fn parse_jsonl(text: &str) -> Result<Table, CliError> {
    let mut t = Table::default();
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let obj: Map<String, Value> =
            serde_json::from_str(line).map_err(|e| CliError::Stage(format!("jsonl line {}: {e}", n + 1)))?;
        if t.header.is_empty() {
            t.header = obj.keys().cloned().collect();
        }
        t.rows.push(t.header.iter().map(|h| obj.get(h).map(json_to_cell).unwrap_or_default()).collect());
    }
    Ok(t)
}

fn count_csv_rows(bytes: &[u8]) -> usize {
    csv::Reader::from_reader(bytes).records().count()
}

impl Ctx {
    pub fn new(cfg: RunConfig, command: &'static str) -> Self {
        let hash = cfg.hash();
        Ctx { cfg, hash, command }
    }

    pub fn out(&self, rel: &str) -> PathBuf {
        self.cfg.out_dir.join(rel)
    }

    fn write(&self, path: &Path, bytes: &[u8]) -> Result<(), CliError> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        fs::write(path, bytes).map_err(|e| CliError::io(path, e))
    }

    fn sidecar(&self, path: &Path, format: &str, rows: Option<usize>) -> Result<(), CliError> {
        let name = path.file_name().expect("artifact has a file name").to_string_lossy().to_string();
        let meta = Sidecar {
            artifact: &name,
            command: self.command,
            config_hash: &self.hash,
            seed: self.cfg.seed,
            format,
            rows,
        };
        let mut text = serde_json::to_string_pretty(&meta).expect("sidecar serializes");
        text.push('\n');
        self.write(&path.with_file_name(format!("{name}.meta.json")), text.as_bytes())
    }

    /// Writes CSV bytes as `<stem>.csv` or converted to `<stem>.jsonl`.
    pub fn emit_table(&self, stem: &str, csv_bytes: Vec<u8>) -> Result<PathBuf, CliError> {
        let format = self.cfg.format;
        let path = self.out(&format!("{stem}.{}", ext(format)));
        let (bytes, rows) = match format {
            Format::Csv => {
                let rows = count_csv_rows(&csv_bytes);
                (csv_bytes, rows)
            }
            Format::Jsonl => csv_to_jsonl(&csv_bytes)?,
        };
        self.write(&path, &bytes)?;
        self.sidecar(&path, ext(format), Some(rows))?;
        println!("wrote {} ({rows} rows)", path.display());
        Ok(path)
    }

    /// Fixed-format files (inputs, models, summaries) with a sidecar.
    pub fn emit_file(&self, rel: &str, bytes: &[u8], format: &str) -> Result<PathBuf, CliError> {
        let path = self.out(rel);
        self.write(&path, bytes)?;
        self.sidecar(&path, format, None)?;
        println!("wrote {}", path.display());
        Ok(path)
    }

    pub fn read_table(&self, stem: &str) -> Result<Table, CliError> {
        let path = self.out(&format!("{stem}.{}", ext(self.cfg.format)));
        if !path.exists() {
            return Err(CliError::MissingArtifact(path.display().to_string()));
        }
        let bytes = fs::read(&path).map_err(|e| CliError::io(&path, e))?;
        match self.cfg.format {
            Format::Csv => parse_csv(&bytes),
            Format::Jsonl => parse_jsonl(&String::from_utf8_lossy(&bytes)),
        }
    }

    pub fn read_file(&self, rel: &str) -> Result<String, CliError> {
        let path = self.out(rel);
        if !path.exists() {
            return Err(CliError::MissingArtifact(path.display().to_string()));
        }
        fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))
    }
}

/// CSV into an in-memory buffer through `f`.
pub fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory cannot fail");
    buf
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_roundtrip_keeps_cell_text() {
        let csv = b"id,year,proba,flag,empty\nT000001,2017,0.8000,true,\n007,2016,1e3,false,x\n".to_vec();
        let (jsonl, rows) = csv_to_jsonl(&csv).unwrap();
        assert_eq!(rows, 2);
        let text = String::from_utf8(jsonl).unwrap();
        assert!(text.contains("\"proba\":0.8000"));
        assert!(text.contains("\"id\":\"007\""));
        assert!(text.contains("\"proba\":\"1e3\""));
        let back = parse_jsonl(&text).unwrap();
        let orig = parse_csv(&csv).unwrap();
        for (a, b) in back.rows.iter().zip(&orig.rows) {
            for h in &orig.header {
                let (i, j) = (back.col(h).unwrap(), orig.col(h).unwrap());
                assert_eq!(a[i], b[j]);
            }
        }
    }
}
