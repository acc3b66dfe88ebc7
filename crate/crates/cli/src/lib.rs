//! Stage orchestration behind the `efosnet` binary.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod stages;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use efosnet::ingest::Format;

use artifacts::Ctx;
use config::{RunConfig, OUT_DIR_ENV};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "efosnet", version, about = "Invoice-mill detection pipeline")]
pub struct Cli {
    /// `key = value` config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides the config file and EFOS_OUT_DIR.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Export format for tables: csv or jsonl.
    #[arg(long, global = true)]
    pub format: Option<Format>,
    /// Override one config key, e.g. `--set n_trees=50`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Write a synthetic economy under <out>/data.
    Generate,
    /// Parse the inputs and list rejected rows.
    Validate,
    /// Per-month interquartile activity bounds.
    Regime,
    /// Monthly networks, yearly EFOS networks and SCC statistics.
    Network,
    /// Reach curves, close-EFOS counts and proximity indices.
    Metrics,
    /// Fit the per-year forests.
    Train,
    /// Score every taxpayer-year with the saved forests.
    Score,
    /// Feature rankings.
    Importance,
    /// Suspect report, evasion bounds and cohort summaries.
    Report,
    /// Every stage in order.
    Pipeline,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Validate => "validate",
            Command::Regime => "regime",
            Command::Network => "network",
            Command::Metrics => "metrics",
            Command::Train => "train",
            Command::Score => "score",
            Command::Importance => "importance",
            Command::Report => "report",
            Command::Pipeline => "pipeline",
        }
    }
}

type Stage = fn(&Ctx) -> Result<(), CliError>;

const PIPELINE: [(&str, Stage); 8] = [
    ("validate", stages::validate),
    ("regime", stages::regime),
    ("network", stages::network),
    ("metrics", stages::metrics),
    ("train", stages::train),
    ("score", stages::score),
    ("importance", stages::importance),
    ("report", stages::report),
];

/// Config file, then the environment, then flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p).map_err(|e| match e {
            CliError::Io { path, source } => CliError::Config(format!("{path}: {source}")),
            other => other,
        })?,
        None => RunConfig::default(),
    };
    if let Some(dir) = std::env::var_os(OUT_DIR_ENV).filter(|d| !d.is_empty()) {
        cfg.out_dir = PathBuf::from(dir);
    }
    for kv in &cli.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v)?;
    }
    if let Some(dir) = &cli.out {
        cfg.out_dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve_config(cli)?;
    if cli.threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(CliError::stage)?;
    let ctx = Ctx::new(cfg, cli.command.name());
    pool.install(|| match cli.command {
        Command::Generate => stages::generate(&ctx),
        Command::Validate => stages::validate(&ctx),
        Command::Regime => stages::regime(&ctx),
        Command::Network => stages::network(&ctx),
        Command::Metrics => stages::metrics(&ctx),
        Command::Train => stages::train(&ctx),
        Command::Score => stages::score(&ctx),
        Command::Importance => stages::importance(&ctx),
        Command::Report => stages::report(&ctx),
        Command::Pipeline => {
            if ctx.cfg.synthetic {
                stages::generate(&ctx)?;
            }
            for (name, stage) in PIPELINE {
                eprintln!("== {name}");
                stage(&ctx)?;
            }
            Ok(())
        }
    })
}

/// Runs one invocation and returns the process exit code. Errors go to
/// stderr as a single JSON object.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let err = CliError::Usage(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return err.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
