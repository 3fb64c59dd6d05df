//! Output staging, atomic writes and run manifests.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: &'static str,
    pub subcommand: String,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub duration_secs: f64,
}

/// Collects outputs in memory; nothing touches the output directory until
/// [`Staged::commit`].
pub struct Staged {
    subcommand: String,
    started: Instant,
    inputs: Vec<FileDigest>,
    files: Vec<(String, Vec<u8>)>,
}

impl Staged {
    pub fn new(subcommand: &str) -> Self {
        Self { subcommand: subcommand.to_string(), started: Instant::now(), inputs: Vec::new(), files: Vec::new() }
    }

    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        let sha256 = digest_file(path)?;
        self.inputs.push(FileDigest { path: path.display().to_string(), sha256 });
        Ok(())
    }

    pub fn add(&mut self, name: &str, contents: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), contents.into()));
    }

    /// Writes every staged file via temp-file-and-rename, then the manifest.
    /// Returns the written paths, manifest last.
    pub fn commit(self, out_dir: &Path, config: serde_json::Value) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(out_dir)
            .map_err(|e| CliError::Output(format!("cannot create {}: {e}", out_dir.display())))?;
        let mut written = Vec::new();
        let mut outputs = Vec::new();
        for (name, bytes) in &self.files {
            let path = out_dir.join(name);
            write_atomic(&path, bytes)?;
            outputs.push(FileDigest { path: name.clone(), sha256: sha256_hex(bytes) });
            written.push(path);
        }
        let manifest = RunManifest {
            tool_version: env!("CARGO_PKG_VERSION"),
            subcommand: self.subcommand.clone(),
            config,
            inputs: self.inputs,
            outputs,
            duration_secs: self.started.elapsed().as_secs_f64(),
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        let path = out_dir.join(format!("manifest-{}.json", self.subcommand));
        write_atomic(&path, text.as_bytes())?;
        written.push(path);
        Ok(written)
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let fail = |e: std::io::Error| CliError::Output(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}
