use std::path::{Path, PathBuf};

use serde::Serialize;
use tubeflow::suite::Outcome;

use crate::config::CliError;

/// Writes artifacts under one output directory and remembers their relative paths.
pub struct Emitter {
    dir: PathBuf,
    pub artifacts: Vec<String>,
}

impl Emitter {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Write {
            path: dir.display().to_string(),
            source,
        })?;
        Ok(Self { dir: dir.to_path_buf(), artifacts: Vec::new() })
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|source| CliError::Write {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("report serializes");
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[String], rows: Vec<Vec<String>>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let err = |source| CliError::Csv { path: path.display().to_string(), source };
        let mut w = csv::Writer::from_path(&path).map_err(err)?;
        w.write_record(header).map_err(err)?;
        for row in rows {
            w.write_record(&row).map_err(err)?;
        }
        w.flush().map_err(|e| err(e.into()))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    /// The summary is written last and lists every artifact before it.
    pub fn summary(&mut self, summary: &Summary) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(summary).expect("summary serializes");
        bytes.push(b'\n');
        self.write_bytes("summary.json", &bytes)
    }
}

pub fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub status: &'static str,
    pub config_hash: String,
    pub seed: u64,
    pub criteria: Vec<Outcome>,
    pub artifacts: Vec<String>,
    /// Seconds since the Unix epoch. Not part of the reproducible content.
    pub timestamp: u64,
}
