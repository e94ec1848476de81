//! Source registration and ingestion runs (batch, real-time, one-time).

pub mod raw;
pub mod source;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::Serialize;

pub use raw::{Manifest, RawZone};
pub use source::{Payload, Scheme, SourceConnection, StreamSpec};

use crate::error::{Error, Result};
use crate::graph::registry::{DATASET_SOURCE_INGEST, INGEST_DATASET, INGEST_USER, SOURCE_OF_STREAM};
use crate::graph::{Direction, Graph, NodeId, NodeLabel, Props};
use crate::lake::Lake;
use crate::profiler::detect_dataset_type;
use crate::props;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const NO_CHANGE: &str = "no change detected";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IngestMode {
    Batch,
    RealTime,
    OneTime,
}

impl IngestMode {
    pub fn as_str(self) -> &'static str {
        match self {
            IngestMode::Batch => "batch",
            IngestMode::RealTime => "real-time",
            IngestMode::OneTime => "one-time",
        }
    }
}

impl fmt::Display for IngestMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IngestMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "batch" => Ok(IngestMode::Batch),
            "real-time" | "realtime" => Ok(IngestMode::RealTime),
            "one-time" | "onetime" => Ok(IngestMode::OneTime),
            other => Err(Error::Validation(format!("unknown ingest mode `{other}`"))),
        }
    }
}

/// Descriptive fields of a new source.
#[derive(Debug, Clone, Default)]
pub struct NewSource {
    pub name: String,
    pub source_type: String,
    pub owner: String,
    pub administrator: Option<String>,
    pub stream_origin: Option<NodeId>,
}

#[derive(Debug, Clone)]
pub struct IngestRequest {
    pub mode: IngestMode,
    pub comment: String,
    pub user: String,
    /// Window length in seconds; required for real-time runs only.
    pub defined_duration: Option<f64>,
}

impl IngestRequest {
    pub fn batch(user: impl Into<String>) -> Self {
        IngestRequest { mode: IngestMode::Batch, comment: String::new(), user: user.into(), defined_duration: None }
    }

    pub fn with_comment(mut self, comment: impl Into<String>) -> Self {
        self.comment = comment.into();
        self
    }

    fn validate(&self) -> Result<()> {
        match (self.mode, self.defined_duration) {
            (IngestMode::RealTime, None) => {
                Err(Error::Precondition("real-time ingestion requires definedDuration".into()))
            }
            (IngestMode::RealTime, Some(d)) if !(d.is_finite() && d > 0.0) => {
                Err(Error::Validation(format!("definedDuration must be positive, got {d}")))
            }
            (mode, Some(_)) if mode != IngestMode::RealTime => {
                Err(Error::Validation(format!("definedDuration is only accepted in real-time mode, not {mode}")))
            }
            _ => Ok(()),
        }
    }
}

/// Result of one ingestion run. A failed run still has an Ingest node.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IngestOutcome {
    pub ingest: NodeId,
    pub dataset: Option<NodeId>,
    pub version: Option<u64>,
    pub changed: bool,
    pub error: Option<String>,
}

impl IngestOutcome {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

struct SourceHistory {
    successful: usize,
    one_time_done: bool,
    last_version: u64,
    last_hash: Option<String>,
}

fn history(g: &Graph, source: NodeId) -> Result<SourceHistory> {
    let mut h = SourceHistory { successful: 0, one_time_done: false, last_version: 0, last_hash: None };
    for ingest in g.neighbors(source, DATASET_SOURCE_INGEST, Direction::Out)? {
        let Some(dataset) = g.neighbor(ingest.id, INGEST_DATASET, Direction::Out)? else {
            continue;
        };
        h.successful += 1;
        h.one_time_done |= ingest.text("mode") == Some(IngestMode::OneTime.as_str());
        let version = dataset.int("version").unwrap_or(0) as u64;
        if version >= h.last_version {
            h.last_version = version;
            h.last_hash = dataset.text("contentHash").map(str::to_string);
        }
    }
    Ok(h)
}

impl Lake {
    /// Registers a source if its location answers; otherwise returns `None`
    /// and creates nothing.
    pub fn connect_data_source(&self, conn: &SourceConnection, source: &NewSource) -> Result<Option<NodeId>> {
        if source.name.trim().is_empty() {
            return Err(Error::Validation("source name must not be empty".into()));
        }
        if let Some(origin) = source.stream_origin {
            self.node_with_label(origin, NodeLabel::DatasetSource)?;
        }
        if !conn.reachable() {
            tracing::info!(location = %conn.location, "source unreachable, not registered");
            return Ok(None);
        }
        let mut props = props! {
            "name" => source.name.trim(),
            "type" => source.source_type.as_str(),
            "location" => conn.location.as_str(),
            "scheme" => conn.scheme.as_str(),
            "owner" => source.owner.as_str(),
        };
        if let Some(admin) = &source.administrator {
            props.insert("administrator".into(), admin.into());
        }
        if let Some(reference) = &conn.credentials_ref {
            props.insert("credentialsRef".into(), reference.into());
        }
        self.store()
            .write(|tx| {
                let id = tx.put_node(NodeLabel::DatasetSource, props)?;
                if let Some(origin) = source.stream_origin {
                    tx.put_edge(SOURCE_OF_STREAM, id, origin)?;
                }
                Ok(id)
            })
            .map(Some)
    }

    pub fn source_connection(&self, source: NodeId) -> Result<SourceConnection> {
        let node = self.node_with_label(source, NodeLabel::DatasetSource)?;
        let location = node.text("location").unwrap_or_default();
        let conn = match node.text("scheme") {
            Some(s) => SourceConnection::new(s.parse()?, location)?,
            None => SourceConnection::parse(location)?,
        };
        Ok(match node.text("credentialsRef") {
            Some(r) => conn.with_credentials(r),
            None => conn,
        })
    }

    /// Copies the source's current bytes into the raw zone as a new dataset
    /// version, records the run, then profiles the dataset and computes its
    /// veracity. A run whose source cannot be read is recorded with an
    /// errorLog and no dataset.
    pub fn ingest_dataset(&self, source: NodeId, request: &IngestRequest) -> Result<IngestOutcome> {
        request.validate()?;
        self.check_history(source, request)?;
        let conn = self.source_connection(source)?;
        let start = self.now();
        let fetched = self.poll(source, &conn);
        self.finish_run(source, &conn, request, start, fetched, false)
    }

    /// Polls the source once per window, `defined_duration` seconds apart,
    /// ingesting a new version whenever the content digest changed. A
    /// window whose source cannot be read is recorded as failed and ends the
    /// run.
    pub fn run_realtime(
        &self,
        source: NodeId,
        defined_duration: f64,
        window_count: usize,
        user: &str,
        comment: &str,
    ) -> Result<Vec<IngestOutcome>> {
        let request = IngestRequest {
            mode: IngestMode::RealTime,
            comment: comment.to_string(),
            user: user.to_string(),
            defined_duration: Some(defined_duration),
        };
        request.validate()?;
        if window_count == 0 {
            return Err(Error::Validation("windowCount must be at least 1".into()));
        }
        self.check_history(source, &request)?;
        let conn = self.source_connection(source)?;
        let mut runs = Vec::with_capacity(window_count);
        for window in 0..window_count {
            if window > 0 {
                self.clock().sleep(Duration::from_secs_f64(defined_duration));
            }
            let start = self.now();
            let fetched = self.poll(source, &conn);
            let outcome = self.finish_run(source, &conn, &request, start, fetched, true)?;
            let vanished = outcome.error.is_some() && outcome.dataset.is_none();
            runs.push(outcome);
            if vanished {
                break;
            }
        }
        Ok(runs)
    }

    /// Whether the source's current content differs from `last_hash`.
    /// Does not advance a generated stream.
    pub fn detect_change(&self, source: NodeId, last_hash: &str) -> Result<bool> {
        let conn = self.source_connection(source)?;
        let poll = if conn.is_generator() { self.poll_index(source, false) } else { 0 };
        Ok(conn.fetch(poll)?.content_hash() != last_hash)
    }

    fn poll(&self, source: NodeId, conn: &SourceConnection) -> Result<Payload> {
        let poll = if conn.is_generator() { self.poll_index(source, true) } else { 0 };
        conn.fetch(poll)
    }

    /// Position of the next poll of a generated stream. Every poll leaves one
    /// Ingest record, so a reopened lake resumes where the last one stopped.
    fn poll_index(&self, source: NodeId, advance: bool) -> u64 {
        let mut polls = self.polls.lock();
        let counter = polls
            .entry(source)
            .or_insert_with(|| self.store().read(|g| g.edges_from(source, DATASET_SOURCE_INGEST).len() as u64));
        let current = *counter;
        if advance {
            *counter += 1;
        }
        current
    }

    fn check_history(&self, source: NodeId, request: &IngestRequest) -> Result<()> {
        self.node_with_label(source, NodeLabel::DatasetSource)?;
        if self.config().clearance_of(&request.user).is_none() {
            return Err(Error::Unauthorized(format!("unknown user `{}`", request.user)));
        }
        let h = self.store().read(|g| history(g, source))?;
        if h.one_time_done {
            return Err(Error::Precondition(format!("source {source} was loaded one-time; re-ingestion is disabled")));
        }
        if request.mode == IngestMode::OneTime && h.successful > 0 {
            return Err(Error::Precondition(format!("source {source} already ingested; one-time load refused")));
        }
        Ok(())
    }

    fn finish_run(
        &self,
        source: NodeId,
        conn: &SourceConnection,
        request: &IngestRequest,
        start: DateTime<Utc>,
        fetched: Result<Payload>,
        skip_unchanged: bool,
    ) -> Result<IngestOutcome> {
        let mut ingest_props = props! {
            "mode" => request.mode.as_str(),
            "ingestionStartTime" => start,
            "sourceCodeURL" => self.config().source_code_url.as_str(),
            "toolVersion" => TOOL_VERSION,
            "configHash" => self.config().hash(),
            "comment" => request.comment.as_str(),
            "outputLog" => "",
            "errorLog" => "",
        };
        if let Some(d) = request.defined_duration {
            ingest_props.insert("definedDuration".into(), d.into());
        }
        let ingest = self.store().write(|tx| {
            let user = self.ensure_user(tx, &request.user)?;
            let ingest = tx.put_node(NodeLabel::Ingest, ingest_props)?;
            tx.put_edge(DATASET_SOURCE_INGEST, source, ingest)?;
            tx.put_edge(INGEST_USER, ingest, user)?;
            Ok(ingest)
        })?;

        let payload = match fetched {
            Ok(p) => p,
            Err(e) => return self.fail_run(ingest, e.to_string()),
        };
        let digest = payload.content_hash();
        let h = self.store().read(|g| history(g, source))?;
        if skip_unchanged && h.last_hash.as_deref() == Some(digest.as_str()) {
            let end = self.now();
            self.store().set_props(
                ingest,
                props! { "ingestionEndTime" => end, "outputLog" => format!("{NO_CHANGE} (sha256 {digest})") },
            )?;
            return Ok(IngestOutcome { ingest, dataset: None, version: None, changed: false, error: None });
        }

        let version = h.last_version + 1;
        let manifest = Manifest {
            content_hash: digest.clone(),
            size_bytes: payload.size_bytes(),
            source_location: conn.location.clone(),
            ingest_id: ingest.to_string(),
        };
        let zone = RawZone::new(self.raw_zone());
        let lake_path = match zone.write_version(&format!("ds-{source}"), version, &payload, &manifest) {
            Ok(p) => p,
            Err(e) => return self.fail_run(ingest, format!("raw zone write failed: {e}")),
        };
        let ty = match detect_dataset_type(&self.raw_zone().join(&lake_path)) {
            Ok(t) => t,
            Err(e) => return self.fail_run(ingest, format!("type detection failed: {e}")),
        };
        let source_name = self.store().node(source).and_then(|n| n.text("name").map(str::to_string));
        let end = self.now();
        let dataset_props: Props = props! {
            "name" => source_name.unwrap_or_default(),
            "description" => "",
            "type" => ty.as_str(),
            "lakePath" => lake_path.as_str(),
            "contentHash" => digest.as_str(),
            "sizeBytes" => manifest.size_bytes,
            "version" => version,
            "ingestedAt" => end,
            "profiled" => false,
        };
        let output = format!("copied {} bytes to {lake_path} (sha256 {digest}), version {version}", manifest.size_bytes);
        let dataset = self.store().write(|tx| {
            let dataset = tx.put_node(NodeLabel::DatalakeDataset, dataset_props)?;
            tx.put_edge(INGEST_DATASET, ingest, dataset)?;
            tx.set_props(ingest, props! { "ingestionEndTime" => end, "outputLog" => output })?;
            Ok(dataset)
        })?;

        let mut outcome = IngestOutcome { ingest, dataset: Some(dataset), version: Some(version), changed: true, error: None };
        match self.profile_dataset(dataset) {
            Ok(_) => {
                self.compute_veracity(dataset)?;
            }
            Err(e) if e.is_user_error() => outcome.error = Some(e.to_string()),
            Err(e) => return Err(e),
        }
        Ok(outcome)
    }

    fn fail_run(&self, ingest: NodeId, message: String) -> Result<IngestOutcome> {
        tracing::warn!(%ingest, %message, "ingestion failed");
        let end = self.now();
        self.store().set_props(ingest, props! { "ingestionEndTime" => end, "errorLog" => message.as_str() })?;
        Ok(IngestOutcome { ingest, dataset: None, version: None, changed: false, error: Some(message) })
    }
}
