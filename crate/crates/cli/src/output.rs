//! Output files, run manifests and number formatting.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
struct OutputEntry {
    file: String,
    sha256: String,
}

/// Record written next to every output file.
#[derive(Debug, Serialize)]
struct Manifest<'a, F: Serialize> {
    schema: u32,
    command: &'a str,
    flags: &'a F,
    seed: Option<u64>,
    version: &'a str,
    outputs: Vec<OutputEntry>,
}

/// Collects output files of one command, then writes them with a manifest.
pub struct Outputs {
    files: BTreeMap<PathBuf, Vec<u8>>,
}

impl Outputs {
    pub fn new() -> Self {
        Self { files: BTreeMap::new() }
    }

    pub fn add(&mut self, path: &Path, bytes: Vec<u8>) {
        self.files.insert(path.to_path_buf(), bytes);
    }

    /// Writes every file, plus `<first output>.manifest.json`.
    pub fn write<F: Serialize>(self, command: &str, flags: &F, seed: Option<u64>) -> Result<()> {
        let Some(primary) = self.files.keys().next().cloned() else {
            return Ok(());
        };
        let mut outputs = Vec::new();
        for (path, bytes) in &self.files {
            std::fs::write(path, bytes).map_err(|source| CliError::Io { path: path.clone(), source })?;
            outputs.push(OutputEntry {
                file: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
                sha256: hex::encode(Sha256::digest(bytes)),
            });
        }
        let manifest = Manifest {
            schema: SCHEMA_VERSION,
            command,
            flags,
            seed,
            version: env!("CARGO_PKG_VERSION"),
            outputs,
        };
        let mut path = primary.into_os_string();
        path.push(".manifest.json");
        let path = PathBuf::from(path);
        let text = to_json(&manifest)?;
        std::fs::write(&path, text).map_err(|source| CliError::Io { path, source })
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Format(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// CSV bytes from a header and rows of already formatted cells.
pub fn to_csv(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Format(e.to_string());
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(row).map_err(fail)?;
    }
    w.into_inner().map_err(|e| CliError::Format(e.to_string()))
}

/// `value` with twelve significant digits.
pub fn sig12(value: f64) -> String {
    if !value.is_finite() {
        return format!("{value}");
    }
    if value == 0.0 {
        return "0.00000000000".into();
    }
    let exp = value.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let s = format!("{:.*}", (11 - exp).max(0) as usize, value);
        // rounding can carry into a new leading digit, e.g. 9.9999999999996
        let digits = s.chars().filter(char::is_ascii_digit).collect::<String>();
        if digits.trim_start_matches('0').len() > 12 && exp < 11 {
            return format!("{:.*}", (10 - exp).max(0) as usize, value);
        }
        s
    } else {
        format!("{value:.11e}")
    }
}
