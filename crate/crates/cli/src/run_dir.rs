//! An output directory that records every artifact it receives.
//!
//! `finish` writes `resolved-config.txt` and then `manifest.csv` with columns
//! `path,bytes,sha256,written_unix_ms`. Timestamps appear only in the manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const RESOLVED_CONFIG: &str = "resolved-config.txt";
pub const MANIFEST: &str = "manifest.csv";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    /// Relative to the run directory, `/`-separated.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
    pub written_unix_ms: u128,
}

#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
    artifacts: Vec<Artifact>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis())
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(RunDir { root: root.to_owned(), artifacts: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn artifacts(&self) -> &[Artifact] {
        &self.artifacts
    }

    pub fn path_of(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.path_of(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.record(rel, bytes);
        Ok(path)
    }

    /// Register a file some library call already wrote under the root.
    pub fn adopt(&mut self, path: &Path) -> Result<()> {
        let rel = path
            .strip_prefix(&self.root)
            .map_err(|_| CliError::Usage(format!("{} is outside the run directory", path.display())))?;
        let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        self.record(&rel, &bytes);
        Ok(())
    }

    fn record(&mut self, rel: &str, bytes: &[u8]) {
        self.artifacts.retain(|a| a.path != rel);
        self.artifacts.push(Artifact {
            path: rel.to_owned(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
            written_unix_ms: now_ms(),
        });
    }

    /// Write the resolved config and the manifest; returns the manifest path.
    pub fn finish(mut self, resolved_config: &str) -> Result<PathBuf> {
        self.write(RESOLVED_CONFIG, resolved_config.as_bytes())?;
        let mut text = String::from("path,bytes,sha256,written_unix_ms\n");
        for a in &self.artifacts {
            let _ = writeln!(text, "{},{},{},{}", a.path, a.bytes, a.sha256, a.written_unix_ms);
        }
        let path = self.path_of(MANIFEST);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}
