//! The raw zone: immutable, versioned copies of ingested bytes.
//!
//! Layout: `<root>/<dataset-key>/v<version>/data.<ext>` (or a `data/`
//! directory) next to a `manifest` JSON file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::source::Payload;
use crate::error::{Error, Result};
use crate::hashing::{directory_digest, sha256_hex};

pub const MANIFEST_FILE: &str = "manifest";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Manifest {
    pub content_hash: String,
    pub size_bytes: u64,
    pub source_location: String,
    pub ingest_id: String,
}

#[derive(Debug, Clone)]
pub struct RawZone {
    root: PathBuf,
}

impl RawZone {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RawZone { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes one version. The version directory is staged under a hidden
    /// name and renamed into place, so readers never see partial copies.
    /// Returns the data path relative to the root.
    pub fn write_version(&self, key: &str, version: u64, payload: &Payload, manifest: &Manifest) -> Result<String> {
        let parent = self.root.join(key);
        let final_dir = parent.join(format!("v{version}"));
        if final_dir.exists() {
            return Err(Error::Precondition(format!("raw version {} already exists", final_dir.display())));
        }
        fs::create_dir_all(&parent)?;
        let staging = parent.join(format!(".staging-v{version}-{}", std::process::id()));
        if staging.exists() {
            fs::remove_dir_all(&staging)?;
        }
        fs::create_dir_all(&staging)?;
        let data_name = match payload {
            Payload::File { bytes, extension } => {
                let name = format!("data.{extension}");
                fs::write(staging.join(&name), bytes)?;
                name
            }
            Payload::Directory { files } => {
                let data = staging.join("data");
                fs::create_dir(&data)?;
                for (name, bytes) in files {
                    fs::write(data.join(name), bytes)?;
                }
                "data".to_string()
            }
        };
        fs::write(staging.join(MANIFEST_FILE), serde_json::to_vec_pretty(manifest)?)?;
        fs::rename(&staging, &final_dir)?;
        Ok(format!("{key}/v{version}/{data_name}"))
    }

    pub fn read_manifest(&self, lake_path: &str) -> Result<Manifest> {
        let data = self.root.join(lake_path);
        let dir = data.parent().ok_or_else(|| Error::NotFound(format!("raw path {lake_path}")))?;
        Ok(serde_json::from_slice(&fs::read(dir.join(MANIFEST_FILE))?)?)
    }

    /// Digest of the bytes currently stored at `lake_path`.
    pub fn digest(&self, lake_path: &str) -> Result<String> {
        let path = self.root.join(lake_path);
        if path.is_dir() {
            let mut files = Vec::new();
            for entry in fs::read_dir(&path)? {
                let entry = entry?;
                let name = entry.file_name().to_string_lossy().into_owned();
                files.push((name, fs::read(entry.path())?));
            }
            Ok(directory_digest(&files))
        } else {
            Ok(sha256_hex(&fs::read(&path)?))
        }
    }
}
