//! Content-hash manifest of an output directory.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::pipeline::FAILED_MARKER;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_sha256: String,
    pub seed: u64,
    pub artifacts: Vec<Artifact>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn files_under(dir: &Path, out: &mut Vec<PathBuf>) -> io::Result<()> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<io::Result<_>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            files_under(&p, out)?;
        } else {
            out.push(p);
        }
    }
    Ok(())
}

/// Hashes every file under `dir` except the manifest and a failure marker.
pub fn build_manifest(dir: &Path, config: &ExperimentConfig) -> io::Result<Manifest> {
    let mut files = Vec::new();
    files_under(dir, &mut files)?;
    let mut artifacts = Vec::new();
    for f in files {
        let rel = f.strip_prefix(dir).expect("under dir");
        let name = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        if name == MANIFEST_FILE || name == FAILED_MARKER {
            continue;
        }
        let bytes = fs::read(&f)?;
        artifacts.push(Artifact {
            path: name,
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
        });
    }
    Ok(Manifest {
        config_sha256: sha256_hex(config.to_toml().as_bytes()),
        seed: config.seed,
        artifacts,
    })
}

pub fn write_manifest(dir: &Path, config: &ExperimentConfig) -> io::Result<Manifest> {
    let m = build_manifest(dir, config)?;
    let text = serde_json::to_string_pretty(&m).expect("manifest serializes");
    fs::write(dir.join(MANIFEST_FILE), text + "\n")?;
    Ok(m)
}

pub fn read_manifest(dir: &Path) -> io::Result<Manifest> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    serde_json::from_str(&text).map_err(io::Error::other)
}
