use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::CliError;

/// One JSON record per solve.
#[derive(Debug, Serialize)]
pub struct RunRecord<'a, T: Serialize> {
    pub command: &'a str,
    pub software_version: &'a str,
    pub config_hash: &'a str,
    pub started_unix: Option<f64>,
    pub finished_unix: Option<f64>,
    pub config: &'a ExperimentConfig,
    pub result: &'a T,
}

/// Writes every artifact of a command into the output directory, tagged
/// with the config hash.
pub struct Output<'a> {
    pub dir: PathBuf,
    pub command: &'static str,
    pub config: &'a ExperimentConfig,
    pub hash: String,
    started: Option<f64>,
}

fn now(enabled: bool) -> Option<f64> {
    enabled.then(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64()))
}

/// Shortest round-trip form, so identical values print identically.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

impl<'a> Output<'a> {
    pub fn new(command: &'static str, config: &'a ExperimentConfig) -> Result<Self, CliError> {
        fs::create_dir_all(&config.out)?;
        Ok(Output {
            dir: config.out.clone(),
            command,
            config,
            hash: config.hash(),
            started: now(config.timestamps),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        Ok(BufWriter::new(File::create(self.path(name))?))
    }

    pub fn json<T: Serialize>(&self, name: &str, result: &T) -> Result<(), CliError> {
        let record = RunRecord {
            command: self.command,
            software_version: env!("CARGO_PKG_VERSION"),
            config_hash: &self.hash,
            started_unix: self.started,
            finished_unix: now(self.config.timestamps),
            config: self.config,
            result,
        };
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, &record).map_err(|e| CliError::Io(e.into()))?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    pub fn csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = self.create(name)?;
        writeln!(w, "# config_hash={}", self.hash)?;
        writeln!(w, "{}", header.join(","))?;
        for row in rows {
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()?;
        Ok(())
    }

    /// A CSV produced by a library writer, behind the hash line.
    pub fn csv_with(&self, name: &str, body: impl FnOnce(&mut dyn Write) -> mtlab::error::Result<()>) -> Result<(), CliError> {
        let mut w = self.create(name)?;
        writeln!(w, "# config_hash={}", self.hash)?;
        body(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn raw(&self, name: &str, body: impl FnOnce(&mut dyn Write) -> mtlab::error::Result<()>) -> Result<(), CliError> {
        let mut w = self.create(name)?;
        body(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

/// Reads a prior record and returns its result when its hash matches.
pub fn read_linked(dir: &Path, name: &str, hash: &str) -> Result<Option<serde_json::Value>, CliError> {
    let path = dir.join(name);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: unreadable record: {e}", path.display())))?;
    if value.get("config_hash").and_then(|h| h.as_str()) != Some(hash) {
        return Ok(None);
    }
    Ok(value.get("result").cloned())
}
