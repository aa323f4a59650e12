//! File helpers and the run manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use walkdir::WalkDir;

use crate::error::{io_at, CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const RESOLVED_CONFIG_FILE: &str = "config.toml";

pub(crate) fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_at(dir))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(io_at(path))?))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let mut w = create(path)?;
    w.write_all(bytes).map_err(io_at(path))?;
    w.flush().map_err(io_at(path))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// Path relative to the output directory, with `/` separators.
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub betas: Vec<f64>,
    pub artifacts: Vec<Artifact>,
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(io_at(path))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Checksums every file under `out` except the manifest itself, sorted by path.
pub fn build_manifest(config: &ExperimentConfig, out: &Path) -> CliResult<Manifest> {
    let mut artifacts = WalkDir::new(out)
        .into_iter()
        .filter(|entry| entry.as_ref().map_or(true, |e| e.file_type().is_file() && e.depth() > 0))
        .filter(|entry| entry.as_ref().map_or(true, |e| e.path() != out.join(MANIFEST_FILE)))
        .map(|entry| {
            let entry = entry.map_err(|e| CliError::Io {
                path: e.path().unwrap_or(out).to_path_buf(),
                source: e.into(),
            })?;
            let p = entry.path();
            let rel = p.strip_prefix(out).unwrap_or(p);
            let path = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            Ok(Artifact { path, sha256: sha256_file(p)? })
        })
        .collect::<CliResult<Vec<_>>>()?;
    artifacts.sort_by(|a, b| a.path.cmp(&b.path));
    let mut betas = config.beta_sweep.clone();
    betas.sort_by(f64::total_cmp);
    let mut seeds = config.seed_list();
    seeds.sort_unstable();
    Ok(Manifest { config_hash: config.hash(), seeds, betas, artifacts })
}

/// Writes the resolved configuration and then the manifest covering all outputs.
pub fn write_manifest(config: &ExperimentConfig, out: &Path) -> CliResult<Manifest> {
    write_bytes(&out.join(RESOLVED_CONFIG_FILE), config.canonical_toml().as_bytes())?;
    let manifest = build_manifest(config, out)?;
    let text = toml::to_string(&manifest).expect("manifest serialises");
    write_bytes(&out.join(MANIFEST_FILE), text.as_bytes())?;
    Ok(manifest)
}
