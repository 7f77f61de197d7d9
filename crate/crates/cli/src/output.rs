//! CSV emission and run manifests.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{sha256_hex, LoadedConfig};
use crate::error::{CliError, CliResult};
use crate::report::CheckLog;

/// Fixed 17-significant-digit scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV table built in memory, so rows land in grid order.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Table { writer }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("in-memory write");
    }

    pub fn finish(self) -> String {
        let bytes = self.writer.into_inner().expect("in-memory flush");
        String::from_utf8(bytes).expect("CSV fields are UTF-8")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputEntry {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub longrange_core: &'static str,
    pub longrange_cli: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub subcommand: String,
    pub seed: u64,
    pub config_path: Option<PathBuf>,
    pub config_file_sha256: Option<String>,
    pub config_sha256: String,
    pub config: serde_json::Value,
    pub workers: usize,
    pub check: bool,
    pub wall_time_seconds: f64,
    pub versions: Versions,
    pub outputs: Vec<OutputEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checks: Option<CheckLog>,
}

impl Manifest {
    pub fn new(subcommand: &str, loaded: &LoadedConfig, workers: usize, check: bool) -> Self {
        let cfg = &loaded.config;
        Manifest {
            subcommand: subcommand.to_string(),
            seed: cfg.seed,
            config_path: loaded.path.clone(),
            config_file_sha256: loaded.file_sha256.clone(),
            config_sha256: cfg.resolved_sha256(),
            config: serde_json::to_value(cfg).expect("configuration serialises"),
            workers,
            check,
            wall_time_seconds: 0.0,
            versions: Versions { longrange_core: longrange_core::VERSION, longrange_cli: env!("CARGO_PKG_VERSION") },
            outputs: Vec::new(),
            checks: None,
        }
    }
}

/// `<out>.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_os_string();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    }
    fs::write(path, bytes).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn write_csv(path: &Path, csv: &str, manifest: &mut Manifest) -> CliResult<()> {
    write(path, csv.as_bytes())?;
    manifest.outputs.push(OutputEntry { path: path.to_path_buf(), sha256: sha256_hex(csv.as_bytes()), bytes: csv.len() });
    Ok(())
}

pub fn write_manifest(out: &Path, manifest: &Manifest) -> CliResult<PathBuf> {
    let path = manifest_path(out);
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serialises");
    text.push('\n');
    write(&path, text.as_bytes())?;
    Ok(path)
}
