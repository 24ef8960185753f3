use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub sha256: String,
    pub bytes: u64,
}

/// Output-relative path → content hash of every file a run wrote.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub artifacts: BTreeMap<String, ManifestEntry>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Manifest, CliError> {
        let bytes = fs::read(dir.join(MANIFEST)).map_err(|e| CliError::io(dir.join(MANIFEST), e))?;
        serde_json::from_slice(&bytes).map_err(|e| CliError::Data(format!("bad manifest: {e}")))
    }
}

/// Writes files under the output directory and records their hashes.
pub struct ArtifactWriter {
    root: PathBuf,
    manifest: Manifest,
}

impl ArtifactWriter {
    pub fn new(root: &Path) -> Result<ArtifactWriter, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(ArtifactWriter {
            root: root.to_path_buf(),
            manifest: Manifest::default(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.record(rel, bytes);
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
        bytes.push(b'\n');
        self.write(rel, &bytes)
    }

    /// Register a file some other writer already put under the root.
    pub fn adopt(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        let rel = path
            .strip_prefix(&self.root)
            .map_err(|_| CliError::Data(format!("{} is outside the output directory", path.display())))?;
        let rel = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        self.record(&rel, &bytes);
        Ok(())
    }

    fn record(&mut self, rel: &str, bytes: &[u8]) {
        self.manifest.artifacts.insert(
            rel.to_string(),
            ManifestEntry {
                sha256: hex::encode(Sha256::digest(bytes)),
                bytes: bytes.len() as u64,
            },
        );
    }

    /// Write `manifest.json` and return the manifest.
    pub fn finish(self) -> Result<Manifest, CliError> {
        let mut bytes = serde_json::to_vec_pretty(&self.manifest).map_err(|e| CliError::Data(e.to_string()))?;
        bytes.push(b'\n');
        let path = self.root.join(MANIFEST);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        Ok(self.manifest)
    }
}
