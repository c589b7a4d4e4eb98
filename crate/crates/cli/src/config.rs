use std::path::Path;

use sha2::{Digest, Sha256};
use tubeflow::suite::ExperimentConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("config error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(tubeflow::GeometryError),
    #[error("computation failed: {0}")]
    Run(#[from] tubeflow::GeometryError),
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("thread pool: {0}")]
    Threads(String),
}

impl CliError {
    /// 1 when a computation could not produce its certificate, 2 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Run(_) => 1,
            _ => 2,
        }
    }
}

pub fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(&mut *de).map_err(|e| CliError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    de.end().map_err(|e| CliError::Schema { path: ".".into(), message: e.to_string() })?;
    Ok(cfg)
}

pub fn load(path: Option<&Path>) -> Result<ExperimentConfig, CliError> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| CliError::Read {
                path: p.display().to_string(),
                source,
            })?;
            parse(&text)
        }
    }
}

/// SHA-256 of the compact JSON form of the effective configuration.
pub fn hash(cfg: &ExperimentConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}
