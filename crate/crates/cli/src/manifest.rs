//! Run manifests: one `manifest.json` per output directory recording what
//! produced the files in it.

use crate::failure::{CliResult, Failure};
use edmkit::io::atomic_write;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub parameters: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub seed: Option<u64>,
    pub version: String,
    pub wall_ms: f64,
}

pub fn digest(path: &Path) -> CliResult<FileDigest> {
    let bytes = std::fs::read(path)
        .map_err(|e| Failure::new(crate::failure::code::INPUT, format!("{}: {e}", path.display())))?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: format!("{:x}", Sha256::digest(&bytes)),
    })
}

/// Collects inputs and outputs while a command runs.
pub struct Recorder {
    subcommand: String,
    parameters: serde_json::Value,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    seed: Option<u64>,
    start: Instant,
}

impl Recorder {
    pub fn new<P: Serialize>(subcommand: &str, parameters: &P) -> CliResult<Self> {
        Ok(Self {
            subcommand: subcommand.to_string(),
            parameters: serde_json::to_value(parameters)?,
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed: None,
            start: Instant::now(),
        })
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    /// Writes `contents` atomically and remembers the file.
    pub fn write(&mut self, path: &Path, contents: &[u8]) -> CliResult<()> {
        atomic_write(path, contents)?;
        self.outputs.push(path.to_path_buf());
        Ok(())
    }

    pub fn write_json<V: Serialize>(&mut self, path: &Path, value: &V) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(path, text.as_bytes())
    }

    /// Writes the manifest into the directory holding the outputs.
    pub fn finish(self, dir: &Path) -> CliResult<()> {
        let manifest = RunManifest {
            subcommand: self.subcommand,
            parameters: self.parameters,
            inputs: self.inputs.iter().map(|p| digest(p)).collect::<CliResult<_>>()?,
            outputs: self.outputs.iter().map(|p| digest(p)).collect::<CliResult<_>>()?,
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_ms: self.start.elapsed().as_secs_f64() * 1e3,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        atomic_write(&dir.join(MANIFEST_NAME), text.as_bytes())?;
        Ok(())
    }
}

/// Free-form metadata written next to a generated matrix.
pub type Metadata = BTreeMap<String, serde_json::Value>;

/// Directory that receives the manifest for an output file.
pub fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}
