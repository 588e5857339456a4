use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Seconds spent per phase. Phases a command does not run stay at zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub matrix_seconds: f64,
    pub scc_seconds: f64,
    pub matching_seconds: f64,
    pub total_seconds: f64,
}

/// Record of one command invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 over the command, its settings and the bytes of every input file.
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub timings: PhaseTimings,
    pub outputs: Vec<PathBuf>,
}

/// Accumulates the configuration a run depends on.
pub struct ConfigHasher(Sha256);

impl ConfigHasher {
    pub fn new(command: &str) -> Self {
        let mut h = Sha256::new();
        h.update(command.as_bytes());
        ConfigHasher(h)
    }

    /// Length-prefixed so that adjacent fields cannot run together.
    pub fn field(&mut self, bytes: &[u8]) {
        self.0.update((bytes.len() as u64).to_le_bytes());
        self.0.update(bytes);
    }

    pub fn setting(&mut self, name: &str, value: impl std::fmt::Debug) {
        self.field(format!("{name}={value:?}").as_bytes());
    }

    pub fn finish(self) -> String {
        let mut out = String::with_capacity(64);
        for b in self.0.finalize().iter() {
            write!(out, "{b:02x}").unwrap();
        }
        out
    }
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}
