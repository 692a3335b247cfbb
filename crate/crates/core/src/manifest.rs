//! Run manifests written beside every CLI output file.
//!
//! A manifest stores the subcommand and its fully resolved configuration,
//! so `election replay` can regenerate the output byte-for-byte. Only
//! `wall_clock_secs` and `threads` are allowed to differ between replays.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::allocation::AllocationMatrix;
use crate::config::KvConfig;
use crate::error::{Error, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeInfo {
    pub kind: String,
    pub n: usize,
    pub redundancy: f64,
    pub redundancy_exact: String,
    /// SHA-256 of the matrix in its text form.
    pub matrix_hash: String,
    /// The realized matrix, one `0`/`1` string per worker.
    pub rows: Vec<String>,
}

impl CodeInfo {
    pub fn of(g: &AllocationMatrix) -> Self {
        let r = g.redundancy();
        Self {
            kind: g.kind().name().to_owned(),
            n: g.n(),
            redundancy: g.redundancy_f64(),
            redundancy_exact: format!("{}/{}", r.numer(), r.denom()),
            matrix_hash: g.hash(),
            rows: (0..g.n()).map(|i| (0..g.n()).map(|j| if g.get(i, j) { '1' } else { '0' }).collect()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Subcommand name, e.g. `train`.
    pub command: String,
    /// Arguments as given on the command line.
    pub argv: Vec<String>,
    /// Every key the subcommand reads, defaults filled in.
    pub config: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub code: Option<CodeInfo>,
    pub byzantine: Option<Vec<usize>>,
    /// Subcommand-specific facts about the run (divergence, learning rate).
    pub notes: BTreeMap<String, String>,
    pub output: String,
    pub output_sha256: String,
    pub version: String,
    pub threads: usize,
    pub wall_clock_secs: f64,
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String], config: &KvConfig) -> Self {
        Self {
            command: command.to_owned(),
            argv: argv.to_vec(),
            config: config.entries().clone(),
            seed: None,
            code: None,
            byzantine: None,
            notes: BTreeMap::new(),
            output: String::new(),
            output_sha256: String::new(),
            version: TOOL_VERSION.to_owned(),
            threads: rayon::current_num_threads(),
            wall_clock_secs: 0.0,
        }
    }

    pub fn config_kv(&self) -> KvConfig {
        let mut kv = KvConfig::default();
        for (k, v) in &self.config {
            kv.set(k, v.clone());
        }
        kv
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad manifest: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Record the output file's name and digest, then write the sidecar.
    pub fn write_beside(&mut self, output: &Path, contents: &[u8]) -> Result<PathBuf> {
        use sha2::{Digest, Sha256};
        self.output = output.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        self.output_sha256 = hex::encode(Sha256::digest(contents));
        let path = sidecar_path(output);
        std::fs::write(&path, self.to_json()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

/// `out.csv` → `out.csv.manifest.json`.
pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}
