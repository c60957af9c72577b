//! The `run-manifest` file written next to every run's artifacts.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{sha256_hex, RunConfig};
use crate::scorer::neural::FallbackEvent;

pub const MANIFEST_FILE: &str = "run-manifest";
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactHash {
    /// Path relative to the output directory.
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub config_hash: String,
    pub config: RunConfig,
    /// Identity of the semantic scorer actually used.
    pub scorer: Option<String>,
    pub tau: Option<f64>,
    pub fallback_events: Vec<FallbackEvent>,
    /// Hashes of files this run read (models, predictions).
    pub inputs: Vec<ArtifactHash>,
    /// Hashes of files this run wrote.
    pub artifacts: Vec<ArtifactHash>,
    pub diagnostics: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            schema_version: MANIFEST_SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_hash: config.hash(),
            config: config.clone(),
            scorer: None,
            tau: None,
            fallback_events: Vec::new(),
            inputs: Vec::new(),
            artifacts: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    /// Hashes `dir/name` and records it as an output.
    pub fn add_artifact(&mut self, dir: &Path, name: &str) -> io::Result<()> {
        let h = hash_file(&dir.join(name), name)?;
        self.artifacts.push(h);
        Ok(())
    }

    pub fn add_input(&mut self, path: &Path) -> io::Result<()> {
        let h = hash_file(path, &path.display().to_string())?;
        self.inputs.push(h);
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn write(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(MANIFEST_FILE), self.to_json() + "\n")
    }

    pub fn read(dir: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}

fn hash_file(path: &Path, name: &str) -> io::Result<ArtifactHash> {
    let bytes = fs::read(path)?;
    Ok(ArtifactHash { name: name.into(), sha256: sha256_hex(&bytes), bytes: bytes.len() as u64 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.json"), b"abc").unwrap();
        let mut m = RunManifest::new("evaluate", &RunConfig::default());
        m.add_artifact(dir.path(), "a.json").unwrap();
        m.fallback_events.push(FallbackEvent { endpoint: "127.0.0.1:1".into(), reason: "refused".into() });
        m.write(dir.path()).unwrap();
        let back = RunManifest::read(dir.path()).unwrap();
        assert_eq!(back, m);
        assert_eq!(
            back.artifacts[0].sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
