//! Loading a described corpus of sources: each manifest entry is
//! registered, ingested, annotated and marked.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::ingestion::{IngestRequest, NewSource, SourceConnection};
use crate::lake::Lake;

pub const MANIFEST_FILE: &str = "manifest.json";

/// The sample corpus shipped with the crate sources.
pub fn bundled_corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join("corpus")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSource {
    pub name: String,
    /// Path relative to the manifest.
    pub location: String,
    #[serde(rename = "type")]
    pub source_type: String,
    pub owner: String,
    #[serde(default)]
    pub administrator: Option<String>,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub tags: Vec<String>,
    /// Expected entity and column counts after profiling.
    pub entities: u64,
    pub columns: u64,
    #[serde(default)]
    pub sensitivity: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusTotals {
    pub sources: u64,
    pub entities: u64,
    pub columns: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub sources: Vec<CorpusSource>,
    pub totals: CorpusTotals,
}

impl CorpusManifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let bytes = std::fs::read(&path).map_err(|e| Error::NotFound(format!("{}: {e}", path.display())))?;
        let manifest: CorpusManifest = serde_json::from_slice(&bytes)
            .map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))?;
        let entities: u64 = manifest.sources.iter().map(|s| s.entities).sum();
        let columns: u64 = manifest.sources.iter().map(|s| s.columns).sum();
        let t = &manifest.totals;
        if t.sources != manifest.sources.len() as u64 || t.entities != entities || t.columns != columns {
            return Err(Error::Malformed(format!("{}: totals disagree with sources", path.display())));
        }
        Ok(manifest)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadedSource {
    pub name: String,
    pub source: NodeId,
    pub ingest: NodeId,
    pub dataset: Option<NodeId>,
}

impl Lake {
    /// Registers and batch-ingests every source of the corpus in `dir`,
    /// then applies its description, tags and sensitivity.
    pub fn load_corpus(&self, dir: &Path, user: &str) -> Result<Vec<LoadedSource>> {
        let manifest = CorpusManifest::read(dir)?;
        let mut loaded = Vec::with_capacity(manifest.sources.len());
        for entry in &manifest.sources {
            let location = dir.join(&entry.location);
            let conn = SourceConnection::parse(&location.to_string_lossy())?;
            let spec = NewSource {
                name: entry.name.clone(),
                source_type: entry.source_type.clone(),
                owner: entry.owner.clone(),
                administrator: entry.administrator.clone(),
                stream_origin: None,
            };
            let source = self
                .connect_data_source(&conn, &spec)?
                .ok_or_else(|| Error::Unreachable(location.display().to_string()))?;
            let outcome = self.ingest_dataset(source, &IngestRequest::batch(user).with_comment("corpus load"))?;
            if let Some(dataset) = outcome.dataset {
                self.annotate_semantics(dataset, Some(&entry.description), &entry.tags)?;
                if let Some(level) = entry.sensitivity {
                    self.mark_sensitivity(dataset, level, user)?;
                }
            }
            loaded.push(LoadedSource { name: entry.name.clone(), source, ingest: outcome.ingest, dataset: outcome.dataset });
        }
        Ok(loaded)
    }
}
