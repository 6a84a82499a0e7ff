//! Report, table and manifest writers.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::studies::StudyOutput;

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub config_path: String,
    /// SHA-256 of the config bytes, absent when the file could not be read.
    pub config_sha256: Option<String>,
    pub study: Option<String>,
    pub seed: Option<u64>,
    pub versions: Versions,
    pub wall_time_s: f64,
    /// `pass`, `fail` or `error`.
    pub status: String,
    pub error: Option<String>,
    pub files: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub radfock: &'static str,
    pub cli: &'static str,
}

impl Versions {
    pub fn current() -> Self {
        Versions { radfock: radfock::VERSION, cli: env!("CARGO_PKG_VERSION") }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// JSON with keys in sorted order and a trailing newline.
pub fn sorted_json<T: Serialize>(v: &T) -> anyhow::Result<String> {
    // serde_json's map is ordered by key
    let v: Value = serde_json::to_value(v)?;
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

/// Write `report.json` and the CSV tables; returns the file names written.
pub fn write_outputs(dir: &Path, out: &StudyOutput) -> anyhow::Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut files = vec!["report.json".to_string()];
    fs::write(dir.join("report.json"), sorted_json(&out.report)?)?;
    for t in &out.tables {
        fs::write(dir.join(&t.name), &t.bytes)?;
        files.push(t.name.clone());
    }
    Ok(files)
}

pub fn write_manifest(dir: &Path, m: &Manifest) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join("manifest.json");
    fs::write(&path, sorted_json(m)?)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_are_sorted() {
        let s = sorted_json(&serde_json::json!({ "b": 1, "a": { "d": 2, "c": 3 } })).unwrap();
        let (a, b, c, d) = (s.find("\"a\"").unwrap(), s.find("\"b\"").unwrap(), s.find("\"c\"").unwrap(), s.find("\"d\"").unwrap());
        assert!(a < b && c < d);
    }

    #[test]
    fn digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
