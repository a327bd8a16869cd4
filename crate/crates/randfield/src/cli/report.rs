//! Run reports and deterministic file output.
//!
//! CSV numbers use Rust's shortest round-trip decimal formatting, so
//! identical results produce byte-identical files and reproducibility can be
//! checked by plain diff. Wall-clock time lives only in the JSON summary.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

pub const SCHEMA: &str = "randfield-report/1";

/// Summary document written as `summary.json` next to the CSV tables.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub kind: String,
    pub seed: u64,
    /// Top-level stream ids consumed by the run, for provenance.
    pub streams: Vec<u64>,
    pub replicates: usize,
    pub config: BTreeMap<String, String>,
    pub results: serde_json::Value,
    pub outputs: Vec<String>,
    pub runtime_ms: u128,
}

impl RunReport {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join("summary.json");
        let mut file = fs::File::create(&path)?;
        serde_json::to_writer_pretty(&mut file, self).map_err(std::io::Error::other)?;
        file.write_all(b"\n")?;
        Ok(path)
    }
}

/// Shortest round-trip decimal representation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Writes a CSV table with a header row.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_round_trips() {
        for &v in &[0.1, 1.0 / 3.0, 1e-7, 123456.789, -2.5e-12] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
    }
}
