use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct FileHash {
    pub path: PathBuf,
    pub sha256: String,
}

impl FileHash {
    pub fn of(path: &Path) -> Result<Self> {
        Ok(FileHash {
            path: path.to_path_buf(),
            sha256: sha256_file(path)?,
        })
    }
}

/// Provenance record written next to a command's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub args: Vec<String>,
    pub seed: u64,
    pub config: Option<FileHash>,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
    pub started_at: String,
    pub finished_at: String,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let f = File::open(path).with_context(|| format!("cannot hash {}", path.display()))?;
    let mut reader = BufReader::new(f);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = reader.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

fn stamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Collects inputs during a run and writes the manifest once outputs exist.
pub struct ManifestBuilder {
    command: String,
    seed: u64,
    config: Option<PathBuf>,
    inputs: Vec<PathBuf>,
    started: DateTime<Utc>,
}

impl ManifestBuilder {
    pub fn start(command: &str, seed: u64, config: Option<&Path>) -> Self {
        ManifestBuilder {
            command: command.to_string(),
            seed,
            config: config.map(Path::to_path_buf),
            inputs: Vec::new(),
            started: Utc::now(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        if !self.inputs.iter().any(|p| p == path) {
            self.inputs.push(path.to_path_buf());
        }
    }

    pub fn write(self, dir: &Path, outputs: &[PathBuf]) -> Result<PathBuf> {
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            args: std::env::args().skip(1).collect(),
            seed: self.seed,
            config: self.config.as_deref().map(FileHash::of).transpose()?,
            inputs: self
                .inputs
                .iter()
                .map(|p| FileHash::of(p))
                .collect::<Result<_>>()?,
            outputs: outputs
                .iter()
                .map(|p| FileHash::of(p))
                .collect::<Result<_>>()?,
            started_at: stamp(self.started),
            finished_at: stamp(Utc::now()),
        };
        let path = dir.join(MANIFEST);
        let json = serde_json::to_string_pretty(&manifest)?;
        std::fs::write(&path, json + "\n")
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hashes_known_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc");
        std::fs::write(&p, "abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifest_lists_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("results.csv");
        std::fs::write(&out, "x\n").unwrap();
        let mut b = ManifestBuilder::start("simulate", 7, None);
        b.input(&out);
        b.input(&out);
        let path = b.write(dir.path(), std::slice::from_ref(&out)).unwrap();
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(v["seed"], 7);
        assert_eq!(v["inputs"].as_array().unwrap().len(), 1);
        assert_eq!(v["outputs"][0]["sha256"].as_str().unwrap().len(), 64);
    }
}
