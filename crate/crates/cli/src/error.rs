use std::path::Path;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Ingest { path: String, source: efosnet::ingest::IngestError },
    #[error("{0}")]
    Stage(String),
    #[error("missing artifact {0}; run the producing stage first")]
    MissingArtifact(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn stage(e: impl std::fmt::Display) -> Self {
        CliError::Stage(e.to_string())
    }

    /// 2 for bad flags or configuration, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Ingest { .. } => "ingest",
            CliError::Stage(_) => "stage",
            CliError::MissingArtifact(_) => "missing_artifact",
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            error: &'a str,
            exit_code: i32,
            message: String,
        }
        serde_json::to_string(&Out { error: self.kind(), exit_code: self.exit_code(), message: self.to_string() })
            .expect("error serializes")
    }
}
