use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

/// Floats in shortest round-trip scientific form, independent of locale.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the command and every setting that influences its output.
pub fn manifest_hash(command: &str, args: &serde_json::Value, config: &RunConfig) -> String {
    let doc = serde_json::json!({ "command": command, "args": args, "config": config.hashed_view() });
    sha256_hex(&serde_json::to_vec(&doc).expect("json"))
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    manifest_hash: &'a str,
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    args: &'a serde_json::Value,
    config: &'a RunConfig,
    outputs: Vec<OutputEntry>,
}

#[derive(Debug, Serialize)]
struct OutputEntry {
    file: String,
    sha256: String,
}

/// A CSV table whose first column is the manifest hash.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        let mut h = vec!["manifest_hash"];
        h.extend_from_slice(header);
        Self { header: h, rows: Vec::new() }
    }

    pub fn push(&mut self, hash: &str, row: Vec<String>) {
        let mut r = Vec::with_capacity(row.len() + 1);
        r.push(hash.to_string());
        r.extend(row);
        self.rows.push(r);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::WriterBuilder::new().quote_style(csv::QuoteStyle::Necessary).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| CliError::Other(anyhow::anyhow!("csv buffer: {e}")))
    }
}

/// Writes `<command>.csv` and `<command>.manifest.json` under the output directory.
pub fn write_run(
    dir: &Path,
    command: &str,
    hash: &str,
    args: &serde_json::Value,
    config: &RunConfig,
    table: &Table,
) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)?;
    let csv_name = format!("{command}.csv");
    let bytes = table.to_bytes()?;
    std::fs::write(dir.join(&csv_name), &bytes)?;
    let manifest = Manifest {
        manifest_hash: hash,
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        args,
        config,
        outputs: vec![OutputEntry { file: csv_name, sha256: sha256_hex(&bytes) }],
    };
    let path = dir.join(format!("{command}.manifest.json"));
    let mut text = serde_json::to_string_pretty(&manifest).expect("json");
    text.push('\n');
    std::fs::write(&path, text)?;
    Ok(dir.join(format!("{command}.csv")))
}
