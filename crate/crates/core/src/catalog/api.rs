//! Request bodies and JSON responses shared by the HTTP service and the
//! command line, so both surfaces return the same documents.

use serde::Deserialize;
use serde_json::{json, Value};

use super::Caller;
use crate::error::{Error, Result};
use crate::graph::event::canonicalize;
use crate::graph::NodeId;
use crate::ingestion::{IngestMode, IngestRequest, NewSource, Scheme, SourceConnection};
use crate::lake::Lake;

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SourceBody {
    pub location: String,
    #[serde(default)]
    pub scheme: Option<String>,
    pub name: String,
    #[serde(rename = "type")]
    pub source_type: String,
    /// Defaults to the caller.
    #[serde(default)]
    pub owner: Option<String>,
    #[serde(default)]
    pub administrator: Option<String>,
    #[serde(default)]
    pub stream_origin: Option<NodeId>,
    #[serde(default)]
    pub credentials_ref: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct IngestBody {
    #[serde(default)]
    pub mode: Option<String>,
    #[serde(default)]
    pub comment: Option<String>,
    #[serde(default)]
    pub defined_duration: Option<f64>,
    /// Number of windows for a real-time run; 1 when absent.
    #[serde(default)]
    pub window_count: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AnnotateBody {
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub tags: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MarkBody {
    pub level: u32,
    /// An entity or attribute of the dataset; the dataset itself when absent.
    #[serde(default)]
    pub target: Option<NodeId>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RelateBody {
    pub ds1: NodeId,
    pub ds2: NodeId,
    pub kind: String,
    pub value: f64,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DictBody {
    pub key: String,
    pub value: String,
}

/// Compact JSON with sorted keys.
pub fn render(value: &Value) -> String {
    serde_json::to_string(&canonicalize(value.clone())).expect("json values always serialize")
}

fn to_value<T: serde::Serialize>(value: &T) -> Result<Value> {
    Ok(serde_json::to_value(value)?)
}

/// Registers a source. `Ok(None)` when the source cannot be reached.
pub fn add_source(lake: &Lake, caller: &Caller, body: &SourceBody) -> Result<Option<Value>> {
    let conn = match &body.scheme {
        Some(s) => SourceConnection::new(s.parse::<Scheme>()?, &body.location)?,
        None => SourceConnection::parse(&body.location)?,
    };
    let conn = match &body.credentials_ref {
        Some(r) => conn.with_credentials(r),
        None => conn,
    };
    let spec = NewSource {
        name: body.name.clone(),
        source_type: body.source_type.clone(),
        owner: body.owner.clone().unwrap_or_else(|| caller.name.clone()),
        administrator: body.administrator.clone(),
        stream_origin: body.stream_origin,
    };
    Ok(lake.connect_data_source(&conn, &spec)?.map(|id| json!({ "id": id })))
}

pub fn ingest(lake: &Lake, caller: &Caller, source: NodeId, body: &IngestBody) -> Result<Value> {
    let mode: IngestMode = body.mode.as_deref().unwrap_or("batch").parse()?;
    let comment = body.comment.clone().unwrap_or_default();
    let runs = match (mode, body.defined_duration) {
        (IngestMode::RealTime, Some(duration)) => {
            lake.run_realtime(source, duration, body.window_count.unwrap_or(1), &caller.name, &comment)?
        }
        _ => {
            if body.window_count.is_some() {
                return Err(Error::Validation("windowCount applies to real-time runs only".into()));
            }
            let request =
                IngestRequest { mode, comment, user: caller.name.clone(), defined_duration: body.defined_duration };
            vec![lake.ingest_dataset(source, &request)?]
        }
    };
    Ok(json!({ "runs": to_value(&runs)? }))
}

pub fn search(lake: &Lake, caller: &Caller, keyword: &str) -> Result<Value> {
    to_value(&lake.search(keyword, caller))
}

pub fn dataset(lake: &Lake, caller: &Caller, id: NodeId) -> Result<Value> {
    to_value(&lake.dataset_detail(id, caller)?)
}

pub fn schema(lake: &Lake, caller: &Caller, id: NodeId) -> Result<Value> {
    to_value(&lake.schema(id, caller)?)
}

pub fn lineage(lake: &Lake, caller: &Caller, id: NodeId) -> Result<Value> {
    to_value(&lake.lineage(id, caller)?)
}

pub fn relationships(lake: &Lake, caller: &Caller, id: NodeId) -> Result<Value> {
    to_value(&lake.relationships(id, caller)?)
}

pub fn annotate(lake: &Lake, caller: &Caller, id: NodeId, body: &AnnotateBody) -> Result<Value> {
    lake.require_visible(id, caller)?;
    let outcome = lake.annotate_semantics(id, body.description.as_deref(), &body.tags)?;
    Ok(json!({
        "tags": lake.tags_of(id)?,
        "createdTags": outcome.created_tags,
        "createdEdges": outcome.created_edges,
    }))
}

pub fn mark(lake: &Lake, caller: &Caller, id: NodeId, body: &MarkBody) -> Result<Value> {
    let mark = lake.mark_in_dataset(id, body.target, body.level, caller)?;
    Ok(json!({ "id": mark }))
}

pub fn relate(lake: &Lake, caller: &Caller, body: &RelateBody) -> Result<Value> {
    lake.require_visible(body.ds1, caller)?;
    lake.require_visible(body.ds2, caller)?;
    let id = lake.input_relationship(
        body.ds1,
        body.ds2,
        &body.kind,
        body.name.as_deref(),
        body.description.as_deref(),
        body.value,
    )?;
    Ok(json!({ "id": id }))
}

pub fn link(lake: &Lake, caller: &Caller, id: NodeId) -> Result<Value> {
    lake.require_visible(id, caller)?;
    to_value(&lake.calculate_relationships(id)?)
}

pub fn stats(lake: &Lake) -> Result<Value> {
    to_value(&lake.graph_stats())
}

pub fn global_dict(lake: &Lake) -> Value {
    Value::Array(lake.global_entries().into_iter().map(|(key, value)| json!({ "key": key, "value": value })).collect())
}

pub fn put_global(lake: &Lake, body: &DictBody) -> Result<Value> {
    let id = lake.put_global_entry(&body.key, &body.value)?;
    Ok(json!({ "id": id, "key": body.key.trim(), "value": body.value }))
}
