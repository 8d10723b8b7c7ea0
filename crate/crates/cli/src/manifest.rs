//! Run manifests: a `<output>.manifest.json` sidecar recording what produced
//! an output, so the run can be repeated exactly.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

pub fn digest(path: &Path) -> anyhow::Result<FileDigest> {
    let bytes = std::fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(FileDigest { path: path.to_path_buf(), sha256: hex::encode(Sha256::digest(&bytes)) })
}

#[derive(Debug, Serialize)]
struct Manifest<'a, C: Serialize> {
    command: &'a str,
    version: &'a str,
    config: &'a C,
    seed: Option<u64>,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
    summary: serde_json::Value,
    created_unix_seconds: u64,
}

/// What a command wants recorded next to its outputs.
pub struct Run<'a, C: Serialize> {
    pub command: &'a str,
    pub config: &'a C,
    pub seed: Option<u64>,
    pub inputs: Vec<&'a Path>,
    pub outputs: Vec<&'a Path>,
    pub summary: serde_json::Value,
}

pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

/// Writes the manifest to `at`.
pub fn write(at: &Path, run: Run<'_, impl Serialize>) -> anyhow::Result<()> {
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let manifest = Manifest {
        command: run.command,
        version: env!("CARGO_PKG_VERSION"),
        config: run.config,
        seed: run.seed,
        inputs: run.inputs.into_iter().map(digest).collect::<anyhow::Result<_>>()?,
        outputs: run.outputs.into_iter().map(digest).collect::<anyhow::Result<_>>()?,
        summary: run.summary,
        created_unix_seconds: created,
    };
    let f = File::create(at).with_context(|| format!("creating {}", at.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(f), &manifest)?;
    Ok(())
}
