use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

/// What was run, on which inputs, producing which files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command_line: Vec<String>,
    pub seed: Option<u64>,
    pub timestamp: String,
    /// SHA-256 of every configuration input, keyed by role.
    pub config_digests: BTreeMap<String, String>,
    pub outputs: Vec<OutputFile>,
}

impl RunManifest {
    pub fn new(seed: Option<u64>) -> Self {
        RunManifest {
            tool: env!("CARGO_BIN_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            command_line: std::env::args().collect(),
            seed,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            config_digests: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn digest(&mut self, role: &str, content: &[u8]) {
        self.config_digests.insert(role.to_owned(), sha256_hex(content));
    }
}

/// Single writer for one command's outputs; records every file it writes.
pub struct OutputDir {
    dir: PathBuf,
    pub manifest: RunManifest,
}

impl OutputDir {
    pub fn create(dir: &Path, manifest: RunManifest) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(OutputDir { dir: dir.to_owned(), manifest })
    }

    pub fn write(&mut self, name: &str, content: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
        self.manifest.outputs.push(OutputFile { path: name.to_owned(), sha256: sha256_hex(content.as_bytes()) });
        Ok(path)
    }

    /// Writes `<command>.manifest.json` and returns its path.
    pub fn finish(self, command: &str) -> Result<PathBuf> {
        let path = self.dir.join(format!("{command}.manifest.json"));
        let text = serde_json::to_string_pretty(&self.manifest)? + "\n";
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_stable() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        let mut a = RunManifest::new(Some(1));
        let mut b = RunManifest::new(Some(1));
        a.digest("config", b"{}");
        b.digest("config", b"{}");
        assert_eq!(a.config_digests, b.config_digests);
    }
}
