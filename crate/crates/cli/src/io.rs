//! File loading with digests, the report envelope, and output writers.
//!
//! Reports deliberately contain no timestamps, host names, or worker
//! counts: a rerun with the same config must be byte-identical.

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub struct Loaded<T> {
    pub value: T,
    pub path: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Read and parse one JSON input file, recording its digest for the report.
pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<Loaded<T>, String> {
    let bytes =
        fs::read(path).map_err(|e| format!("{}: cannot read file: {e}", path.display()))?;
    let sha256 = sha256_hex(&bytes);
    let value: T = serde_json::from_slice(&bytes)
        .map_err(|e| format!("{}: invalid input: {e}", path.display()))?;
    Ok(Loaded {
        value,
        path: path.display().to_string(),
        sha256,
    })
}

#[derive(Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Envelope around every JSON result.
#[derive(Serialize)]
pub struct Report<T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<&'static str, serde_json::Value>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub inputs: BTreeMap<&'static str, FileDigest>,
    pub result: T,
}

impl<T: Serialize> Report<T> {
    pub fn new(command: &'static str, result: T) -> Self {
        Report {
            tool: "mmcap",
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed: None,
            params: BTreeMap::new(),
            inputs: BTreeMap::new(),
            result,
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn param(mut self, key: &'static str, value: impl Serialize) -> Self {
        self.params
            .insert(key, serde_json::to_value(value).expect("serializable param"));
        self
    }

    pub fn input<U>(mut self, role: &'static str, loaded: &Loaded<U>) -> Self {
        self.inputs.insert(
            role,
            FileDigest {
                path: loaded.path.clone(),
                sha256: loaded.sha256.clone(),
            },
        );
        self
    }

    /// Pretty JSON to the given file, or stdout when no path was given.
    pub fn emit(&self, output: Option<&Path>) -> Result<(), String> {
        let mut text =
            serde_json::to_string_pretty(self).map_err(|e| format!("serialize report: {e}"))?;
        text.push('\n');
        write_text(output, &text)
    }
}

pub fn write_text(output: Option<&Path>, text: &str) -> Result<(), String> {
    match output {
        Some(path) => fs::write(path, text)
            .map_err(|e| format!("{}: cannot write: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// CSV stream of sampled values: comment line with metadata, a header, then
/// one value per row.
pub fn samples_csv(meta: &str, values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 20 + meta.len() + 16);
    let _ = writeln!(out, "# {meta}");
    out.push_str("value\n");
    for v in values {
        let _ = writeln!(out, "{v}");
    }
    out
}

/// Parse a comma-separated list of probabilities.
pub fn parse_f64_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad number {t:?}: {e}"))
        })
        .collect()
}

/// Parse a comma-separated word of symbol indices.
pub fn parse_word(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|e| format!("bad symbol {t:?}: {e}"))
        })
        .collect()
}
