//! Run reports and input hashing.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Pass/fail counts for one asserted invariant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub pass: usize,
    pub fail: usize,
}

impl Tally {
    pub fn of(pass: usize, total: usize) -> Self {
        Self {
            pass,
            fail: total - pass,
        }
    }

    pub fn single(ok: bool) -> Self {
        Self::of(usize::from(ok), 1)
    }
}

/// What a subcommand hands back to the driver.
#[derive(Debug, Default)]
pub struct Outcome {
    pub outcomes: BTreeMap<String, Tally>,
    pub artifacts: Vec<PathBuf>,
    pub inputs: Vec<PathBuf>,
    pub result: Value,
}

impl Outcome {
    pub fn new(result: impl Serialize) -> Result<Self> {
        Ok(Self {
            result: serde_json::to_value(result)?,
            ..Default::default()
        })
    }

    pub fn check(&mut self, name: &str, tally: Tally) -> &mut Self {
        self.outcomes.insert(name.to_string(), tally);
        self
    }

    pub fn artifact(&mut self, path: PathBuf) -> &mut Self {
        self.artifacts.push(path);
        self
    }

    pub fn input(&mut self, path: &Path) -> &mut Self {
        self.inputs.push(path.to_path_buf());
        self
    }
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub parameters: Value,
    pub seed: u64,
    pub passed: bool,
    pub outcomes: BTreeMap<String, Tally>,
    pub artifacts: Vec<String>,
    /// Input path to content hash.
    pub inputs: BTreeMap<String, String>,
    pub result: Value,
    pub wall_time_ms: u128,
}

impl RunReport {
    pub fn assemble(
        command: &str,
        parameters: Value,
        seed: u64,
        outcome: Outcome,
        wall_time_ms: u128,
    ) -> Result<Self> {
        let mut inputs = BTreeMap::new();
        for p in &outcome.inputs {
            inputs.insert(p.display().to_string(), content_hash(p)?);
        }
        Ok(Self {
            command: command.to_string(),
            parameters,
            seed,
            passed: outcome.outcomes.values().all(|t| t.fail == 0),
            outcomes: outcome.outcomes,
            artifacts: outcome
                .artifacts
                .iter()
                .map(|p| p.display().to_string())
                .collect(),
            inputs,
            result: outcome.result,
            wall_time_ms,
        })
    }
}

/// `sha256:` digest of the file framed as a git blob (`blob <len>\0<bytes>`).
pub fn content_hash(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(blob_hash(&bytes))
}

pub fn blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    let digest = h.finalize();
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_hash_frames_content() {
        assert_eq!(blob_hash(b""), blob_hash(b""));
        assert_ne!(blob_hash(b"a"), blob_hash(b"b"));
        assert!(blob_hash(b"x").starts_with("sha256:"));
        assert_eq!(blob_hash(b"x").len(), 7 + 64);
    }

    #[test]
    fn tally_counts_failures() {
        assert_eq!(Tally::of(3, 5), Tally { pass: 3, fail: 2 });
        assert_eq!(Tally::single(false), Tally { pass: 0, fail: 1 });
    }
}
