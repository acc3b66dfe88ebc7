//! `key = value` run configuration.
//!
//! Sources, lowest to highest precedence: built-in defaults, the config
//! file, the `EFOS_OUT_DIR` environment variable (output directory only),
//! then command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use efosnet::classifier::{ForestConfig, Scenario, TreeConfig};
use efosnet::ingest::Format;
use efosnet::metrics::{CloseMetric, ProximityOptions, SigmaNumerator};
use efosnet::network::{EdgeKinds, MinTxScope, YearlyOptions};
use efosnet::synthgen::SynthConfig;
use efosnet::MonthKey;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const OUT_DIR_ENV: &str = "EFOS_OUT_DIR";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub transactions: Option<PathBuf>,
    pub registry: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub statements: Option<PathBuf>,
    pub input_format: Format,
    pub max_rejected: usize,
    pub out_dir: PathBuf,
    pub format: Format,
    pub seed: u64,
    pub year_start: Option<i32>,
    pub year_end: Option<i32>,
    pub edge_kinds: EdgeKinds,
    pub min_tx: u64,
    pub min_tx_scope: MinTxScope,
    pub max_distance: usize,
    pub close_metric: CloseMetric,
    pub sigma_numerator: SigmaNumerator,
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub mtry: Option<usize>,
    pub scenario: Scenario,
    /// Second forest whose suspect list is intersected with the first.
    pub intersect_scenario: Option<Scenario>,
    pub proba_threshold: f64,
    pub theta_sigma: f64,
    pub quartile: f64,
    pub noise_scale: f64,
    /// `pipeline` generates synthetic inputs first.
    pub synthetic: bool,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            transactions: None,
            registry: None,
            labels: None,
            statements: None,
            input_format: Format::Csv,
            max_rejected: 1000,
            out_dir: PathBuf::from("efosnet-out"),
            format: Format::Csv,
            seed: 0,
            year_start: None,
            year_end: None,
            edge_kinds: EdgeKinds::IncomeOnly,
            min_tx: 10,
            min_tx_scope: MinTxScope::Edge,
            max_distance: 10,
            close_metric: CloseMetric::EitherDirection,
            sigma_numerator: SigmaNumerator::MonthlyMultiplicity,
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            mtry: None,
            scenario: Scenario::BoxCox,
            intersect_scenario: Some(Scenario::Raw),
            proba_threshold: 0.8,
            theta_sigma: 1.0,
            quartile: 0.75,
            noise_scale: 0.2,
            synthetic: false,
            synth: SynthConfig::default(),
        }
    }
}

fn bad(key: &str, value: &str, why: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("`{key} = {value}`: {why}"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| bad(key, value, e))
}

fn opt_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<Option<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    match value {
        "" | "none" | "auto" => Ok(None),
        v => num(key, v).map(Some),
    }
}

fn ratio(key: &str, value: &str) -> Result<f64, CliError> {
    let v: f64 = num(key, value)?;
    if !(0.0..=1.0).contains(&v) {
        return Err(bad(key, value, "must be in [0, 1]"));
    }
    Ok(v)
}

fn flag(key: &str, value: &str) -> Result<bool, CliError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(bad(key, value, "expected true or false")),
    }
}

fn years_to_months(key: &str, value: &str) -> Result<Vec<MonthKey>, CliError> {
    let (a, b) = match value.split_once("..") {
        Some((a, b)) => (num::<i32>(key, a.trim())?, num::<i32>(key, b.trim())?),
        None => {
            let y = num::<i32>(key, value)?;
            (y, y)
        }
    };
    if a > b {
        return Err(bad(key, value, "empty year range"));
    }
    Ok((a..=b).flat_map(MonthKey::months_of).collect())
}

/// Sets one `synth.*` field through the generator config's serde shape.
/// Amount distributions take `mu,sigma`.
fn set_synth(synth: &mut SynthConfig, field: &str, key: &str, value: &str) -> Result<(), CliError> {
    if field == "years" {
        synth.months = years_to_months(key, value)?;
        return Ok(());
    }
    if field == "seed" {
        return Err(bad(key, value, "the generator seed is derived from `seed`"));
    }
    let mut obj = serde_json::to_value(&*synth).expect("synth config serializes");
    let slot = obj.get_mut(field).ok_or_else(|| CliError::Config(format!("unknown key `{key}`")))?;
    *slot = if slot.is_object() {
        let (mu, sigma) = value.split_once(',').ok_or_else(|| bad(key, value, "expected `mu,sigma`"))?;
        serde_json::json!({ "mu": num::<f64>(key, mu.trim())?, "sigma": num::<f64>(key, sigma.trim())? })
    } else {
        serde_json::from_str::<Value>(value).map_err(|e| bad(key, value, e))?
    };
    *synth = serde_json::from_value(obj).map_err(|e| bad(key, value, e))?;
    Ok(())
}

fn parse_scenario(key: &str, value: &str) -> Result<Scenario, CliError> {
    value.parse().map_err(|e| bad(key, value, e))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim();
        match key {
            "transactions" => self.transactions = Some(PathBuf::from(value)),
            "registry" => self.registry = Some(PathBuf::from(value)),
            "labels" => self.labels = Some(PathBuf::from(value)),
            "statements" => self.statements = Some(PathBuf::from(value)),
            "input_format" => self.input_format = value.parse().map_err(|e| bad(key, value, e))?,
            "max_rejected" => self.max_rejected = num(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "format" => self.format = value.parse().map_err(|e| bad(key, value, e))?,
            "seed" => self.seed = num(key, value)?,
            "year_start" => self.year_start = opt_num(key, value)?,
            "year_end" => self.year_end = opt_num(key, value)?,
            "edge_kinds" => {
                self.edge_kinds = match value {
                    "income" | "income_only" => EdgeKinds::IncomeOnly,
                    "all" => EdgeKinds::All,
                    _ => return Err(bad(key, value, "expected income or all")),
                }
            }
            "min_tx" => self.min_tx = num(key, value)?,
            "min_tx_scope" => {
                self.min_tx_scope = match value {
                    "edge" => MinTxScope::Edge,
                    "node" => MinTxScope::Node,
                    _ => return Err(bad(key, value, "expected edge or node")),
                }
            }
            "max_distance" => {
                self.max_distance = num(key, value)?;
                if self.max_distance == 0 {
                    return Err(bad(key, value, "must be at least 1"));
                }
            }
            "close_metric" => {
                self.close_metric = match value {
                    "either" | "either_direction" => CloseMetric::EitherDirection,
                    "out" | "out_only" => CloseMetric::OutOnly,
                    _ => return Err(bad(key, value, "expected either or out")),
                }
            }
            "sigma_numerator" => {
                self.sigma_numerator = match value {
                    "monthly" | "monthly_multiplicity" => SigmaNumerator::MonthlyMultiplicity,
                    "distinct" | "distinct_yearly" => SigmaNumerator::DistinctYearly,
                    _ => return Err(bad(key, value, "expected monthly or distinct")),
                }
            }
            "n_trees" => {
                self.n_trees = num(key, value)?;
                if self.n_trees == 0 {
                    return Err(bad(key, value, "must be at least 1"));
                }
            }
            "max_depth" => self.max_depth = opt_num(key, value)?,
            "min_samples_leaf" => self.min_samples_leaf = num(key, value)?,
            "mtry" => self.mtry = opt_num(key, value)?,
            "scenario" => self.scenario = parse_scenario(key, value)?,
            "intersect_scenario" => {
                self.intersect_scenario = match value {
                    "none" | "off" | "" => None,
                    v => Some(parse_scenario(key, v)?),
                }
            }
            "proba_threshold" => self.proba_threshold = ratio(key, value)?,
            "theta_sigma" => self.theta_sigma = ratio(key, value)?,
            "quartile" => self.quartile = ratio(key, value)?,
            "noise_scale" => self.noise_scale = num(key, value)?,
            "synthetic" => self.synthetic = flag(key, value)?,
            k => match k.strip_prefix("synth.") {
                Some(field) => set_synth(&mut self.synth, field, key, value)?,
                None => return Err(CliError::Config(format!("unknown key `{key}`"))),
            },
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", n + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = RunConfig::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn data_dir(&self) -> PathBuf {
        self.out_dir.join("data")
    }

    /// Path and format of one input table. Unset paths point at the
    /// generator's CSV output under `<out_dir>/data`.
    pub fn input_path(&self, table: &str) -> (PathBuf, Format) {
        let set = match table {
            "transactions" => &self.transactions,
            "registry" => &self.registry,
            "labels" => &self.labels,
            _ => &self.statements,
        };
        match set {
            Some(p) => (p.clone(), self.input_format),
            None => (self.data_dir().join(format!("{table}.csv")), Format::Csv),
        }
    }

    pub fn forest(&self, scenario: Scenario) -> ForestConfig {
        ForestConfig {
            n_trees: self.n_trees,
            tree: TreeConfig { max_depth: self.max_depth, min_samples_leaf: self.min_samples_leaf, mtry: self.mtry },
            scenario,
        }
    }

    pub fn yearly_options(&self) -> YearlyOptions {
        YearlyOptions { min_tx: self.min_tx, scope: self.min_tx_scope, kinds: self.edge_kinds }
    }

    pub fn proximity_options(&self) -> ProximityOptions {
        ProximityOptions { metric: self.close_metric, numerator: self.sigma_numerator }
    }

    /// Trained scenarios: the primary one, then the intersected one if distinct.
    pub fn scenarios(&self) -> Vec<Scenario> {
        let mut v = vec![self.scenario];
        if let Some(s) = self.intersect_scenario.filter(|&s| s != self.scenario) {
            v.push(s);
        }
        v
    }

    pub fn year_in_range(&self, year: i32) -> bool {
        self.year_start.is_none_or(|s| year >= s) && self.year_end.is_none_or(|e| year <= e)
    }

    /// Canonical settings that determine artifact contents. The output
    /// directory is excluded so identical runs in different places hash alike.
    pub fn canonical(&self) -> BTreeMap<&'static str, String> {
        let p = |o: &Option<PathBuf>| o.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let o = |o: Option<usize>| o.map(|v| v.to_string()).unwrap_or_default();
        let mut m = BTreeMap::new();
        m.insert("transactions", p(&self.transactions));
        m.insert("registry", p(&self.registry));
        m.insert("labels", p(&self.labels));
        m.insert("statements", p(&self.statements));
        m.insert("input_format", format!("{:?}", self.input_format));
        m.insert("max_rejected", self.max_rejected.to_string());
        m.insert("format", format!("{:?}", self.format));
        m.insert("seed", self.seed.to_string());
        m.insert("year_start", self.year_start.map(|y| y.to_string()).unwrap_or_default());
        m.insert("year_end", self.year_end.map(|y| y.to_string()).unwrap_or_default());
        m.insert("edge_kinds", format!("{:?}", self.edge_kinds));
        m.insert("min_tx", self.min_tx.to_string());
        m.insert("min_tx_scope", format!("{:?}", self.min_tx_scope));
        m.insert("max_distance", self.max_distance.to_string());
        m.insert("close_metric", format!("{:?}", self.close_metric));
        m.insert("sigma_numerator", format!("{:?}", self.sigma_numerator));
        m.insert("n_trees", self.n_trees.to_string());
        m.insert("max_depth", o(self.max_depth));
        m.insert("min_samples_leaf", self.min_samples_leaf.to_string());
        m.insert("mtry", o(self.mtry));
        m.insert("scenario", self.scenario.as_str().to_string());
        m.insert("intersect_scenario", self.intersect_scenario.map(|s| s.as_str()).unwrap_or("none").to_string());
        m.insert("proba_threshold", self.proba_threshold.to_string());
        m.insert("theta_sigma", self.theta_sigma.to_string());
        m.insert("quartile", self.quartile.to_string());
        m.insert("noise_scale", self.noise_scale.to_string());
        m.insert("synthetic", self.synthetic.to_string());
        m.insert("synth", serde_json::to_string(&self.synth).expect("synth config serializes"));
        m
    }

    /// Hex SHA-256 of [`RunConfig::canonical`].
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.canonical() {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_file_text_with_comments() {
        let mut c = RunConfig::default();
        c.apply_text("seed = 7  # root\n\n# comment\nscenario = pca\nintersect_scenario = none\nsynth.n_honest = 300\nsynth.efos_amount = 12.5, 0.5\nsynth.years = 2016..2017\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.scenario, Scenario::Pca);
        assert_eq!(c.intersect_scenario, None);
        assert_eq!(c.synth.n_honest, 300);
        assert_eq!(c.synth.efos_amount.mu, 12.5);
        assert_eq!(c.synth.months.len(), 24);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let mut c = RunConfig::default();
        assert!(matches!(c.set("bogus", "1"), Err(CliError::Config(_))));
        assert!(matches!(c.set("proba_threshold", "1.5"), Err(CliError::Config(_))));
        assert!(matches!(c.set("synth.nope", "1"), Err(CliError::Config(_))));
        assert!(matches!(c.apply_text("seed 7"), Err(CliError::Config(_))));
    }

    #[test]
    fn hash_ignores_out_dir_only() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.out_dir = PathBuf::from("/elsewhere");
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }
}
