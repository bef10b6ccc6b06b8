//! Artifact encoding: CSV tables, JSON check records and the run manifest.
//!
//! Every file is rendered in memory first and written only after the run has
//! finished, so a failed run never leaves half an output directory behind.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use rwdre::CheckRecord;

/// Version of every JSON and CSV layout emitted by the CLI.
pub const SCHEMA_VERSION: u32 = 1;

/// Shortest decimal that parses back to the same `f64`.
pub fn float(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

/// Content hash in the style of a git blob object, with SHA-256.
pub fn blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

/// RFC 4180 table with a mandatory header row.
#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// One JSON object per line.
pub fn checks_jsonl(checks: &[CheckRecord]) -> Vec<u8> {
    let mut out = Vec::new();
    for c in checks {
        serde_json::to_writer(&mut out, c).expect("check records serialize");
        out.push(b'\n');
    }
    out
}

pub fn pretty_json(value: &impl Serialize) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("reports serialize");
    out.push(b'\n');
    out
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub schema_version: u32,
    pub tool: &'static str,
    pub versions: BTreeMap<&'static str, &'static str>,
    pub mode: &'a str,
    pub seed: u64,
    pub config_hash: String,
    pub config: &'a str,
    /// Content hash of every other file in the output directory.
    pub outputs: BTreeMap<String, String>,
}

impl<'a> Manifest<'a> {
    pub fn new(mode: &'a str, seed: u64, config: &'a str, files: &BTreeMap<String, Vec<u8>>) -> Self {
        let versions = BTreeMap::from([
            ("rwdre", env!("CARGO_PKG_VERSION")),
            ("rwdre-cli", env!("CARGO_PKG_VERSION")),
            ("schema", "1"),
        ]);
        Self {
            schema_version: SCHEMA_VERSION,
            tool: "rwdre",
            versions,
            mode,
            seed,
            config_hash: blob_hash(config.as_bytes()),
            config,
            outputs: files.iter().map(|(k, v)| (k.clone(), blob_hash(v))).collect(),
        }
    }
}

/// Writes `files` plus `manifest.json` under `dir`.
pub fn write_all(dir: &Path, files: &BTreeMap<String, Vec<u8>>, manifest: &Manifest<'_>) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    for (name, bytes) in files {
        fs::write(dir.join(name), bytes)?;
    }
    fs::write(dir.join("manifest.json"), pretty_json(manifest))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0, -2.5e-17, 1.0 / 3.0, 6.02e23, f64::MIN_POSITIVE] {
            assert_eq!(float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(float(0.1), "0.1");
        assert_eq!(opt_float(None), "");
    }

    #[test]
    fn git_blob_hash_matches_reference() {
        // git hash-object --object-format=sha256 on an empty file
        assert_eq!(
            blob_hash(b""),
            "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813"
        );
    }

    #[test]
    fn csv_quotes_and_header() {
        let mut t = Table::new(&["name", "value"]);
        t.push(vec!["a,b".into(), float(0.5)]);
        let s = String::from_utf8(t.to_bytes()).unwrap();
        assert_eq!(s, "name,value\r\n\"a,b\",0.5\r\n");
    }

    #[test]
    fn jsonl_has_spec_fields() {
        let c = CheckRecord::at_most("x", "a <= b", 1.0, 2.0, 0.0);
        let line = String::from_utf8(checks_jsonl(&[c])).unwrap();
        let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
        for k in ["check_id", "paper_anchor", "lhs", "rhs", "pass", "tolerance"] {
            assert!(v.get(k).is_some(), "{k} missing");
        }
        assert_eq!(line.matches('\n').count(), 1);
    }
}
