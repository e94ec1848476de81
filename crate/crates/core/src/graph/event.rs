use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Edge, Node, NodeId, Props};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "kebab-case")]
pub enum Mutation {
    CreateNode(Node),
    CreateEdge(Edge),
    SetProps { id: NodeId, props: Props },
}

impl Mutation {
    pub fn kind(&self) -> &'static str {
        match self {
            Mutation::CreateNode(_) => "create-node",
            Mutation::CreateEdge(_) => "create-edge",
            Mutation::SetProps { .. } => "set-props",
        }
    }
}

/// One line of the event log: `{seq, at, kind, payload}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEvent {
    pub seq: u64,
    pub at: DateTime<Utc>,
    #[serde(flatten)]
    pub mutation: Mutation,
}

/// Recursively sorts object keys so the encoding does not depend on how
/// `serde_json` was compiled.
pub fn canonicalize(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, canonicalize(v))).collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonicalize).collect()),
        other => other,
    }
}

/// Canonical single-line encoding: compact JSON with sorted keys.
pub fn to_canonical_line<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string(&canonicalize(serde_json::to_value(value)?))?)
}
