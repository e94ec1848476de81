//! Read-side views for analysts: search, dataset detail, lineage and
//! relationships, filtered by the caller's clearance.

pub mod api;
pub mod http;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::enrichment::{effective_level, own_level};
use crate::error::{Error, Result};
use crate::graph::registry::{
    ANALYSIS_DS_DATASET, ANALYSIS_DS_KIND, DATASET_ENTITY, DATASET_SOURCE_INGEST, DATASET_TAG, DATASET_VERACITY,
    ENTITY_ATTRIBUTE, INGEST_DATASET, INGEST_USER, SOURCE_OF_STREAM,
};
use crate::graph::{Direction, Graph, GraphStats, Node, NodeId, NodeLabel};
use crate::lake::Lake;

/// Longest description shown in search results, in characters.
pub const SNIPPET_CHARS: usize = 160;

/// The identity a request runs under.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Caller {
    pub name: String,
    pub clearance: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DatasetSummary {
    pub id: NodeId,
    pub name: String,
    #[serde(rename = "type")]
    pub dataset_type: String,
    pub description: String,
    pub tags: Vec<String>,
    pub sensitivity: u32,
    pub ingested_at: Option<String>,
    pub version: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AttributeView {
    pub id: NodeId,
    pub name: String,
    pub kind: String,
    pub position: i64,
    pub sensitivity: u32,
    pub redacted: bool,
    /// Statistics; absent when redacted.
    pub stats: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EntityView {
    pub id: NodeId,
    pub name: String,
    pub sensitivity: u32,
    pub redacted: bool,
    pub row_count: Option<i64>,
    pub attribute_count: i64,
    pub attributes: Vec<AttributeView>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DatasetDetail {
    pub id: NodeId,
    pub sensitivity: u32,
    pub tags: Vec<String>,
    pub properties: Value,
    pub schema: Vec<EntityView>,
    pub veracity: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NodeView {
    pub id: NodeId,
    pub properties: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LineageView {
    pub dataset: NodeView,
    pub ingest: NodeView,
    pub user: Option<String>,
    pub source: NodeView,
    pub stream_origin: Option<NodeView>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RelationshipView {
    pub id: NodeId,
    pub other_dataset: NodeId,
    pub other_name: String,
    pub kind: String,
    pub value: f64,
    pub origin: String,
    pub name: Option<String>,
    pub description: Option<String>,
}

fn node_view(node: &Node) -> NodeView {
    NodeView { id: node.id, properties: node.props_json() }
}

fn snippet(text: &str) -> String {
    match text.char_indices().nth(SNIPPET_CHARS) {
        Some((cut, _)) => format!("{}...", &text[..cut]),
        None => text.to_string(),
    }
}

fn tag_names(g: &Graph, dataset: NodeId) -> Vec<String> {
    let mut tags: Vec<String> = g
        .edges_from(dataset, DATASET_TAG)
        .into_iter()
        .filter_map(|e| g.node(e.to).and_then(|t| t.text("name")).map(str::to_string))
        .collect();
    tags.sort();
    tags
}

fn summary(g: &Graph, node: &Node) -> DatasetSummary {
    DatasetSummary {
        id: node.id,
        name: node.text("name").unwrap_or_default().to_string(),
        dataset_type: node.text("type").unwrap_or_default().to_string(),
        description: snippet(node.text("description").unwrap_or_default()),
        tags: tag_names(g, node.id),
        sensitivity: own_level(g, node.id),
        ingested_at: node.get("ingestedAt").map(|v| v.to_json().as_str().unwrap_or_default().to_string()),
        version: node.int("version").unwrap_or(0),
    }
}

/// The dataset a schema node (entity or attribute) belongs to.
pub(crate) fn owning_dataset(g: &Graph, id: NodeId) -> Option<NodeId> {
    let node = g.node(id)?;
    match node.label {
        NodeLabel::DatalakeDataset => Some(id),
        NodeLabel::EntityClass => g.edges_to(id, DATASET_ENTITY).first().map(|e| e.from),
        label if label.is_attribute() => {
            let entity = g.edges_to(id, ENTITY_ATTRIBUTE).first()?.from;
            owning_dataset(g, entity)
        }
        _ => None,
    }
}

const ATTRIBUTE_IDENTITY: [&str; 2] = ["name", "position"];

impl Lake {
    /// Resolves a caller name against the configured users.
    pub fn caller(&self, name: Option<&str>) -> Result<Caller> {
        let name = name.map(str::trim).filter(|n| !n.is_empty()).ok_or_else(|| {
            Error::Unauthorized("no user given".into())
        })?;
        let clearance =
            self.config().clearance_of(name).ok_or_else(|| Error::Unauthorized(format!("unknown user `{name}`")))?;
        Ok(Caller { name: name.to_string(), clearance })
    }

    /// Dataset `id` if the caller may see it; hidden and missing datasets
    /// are both not-found.
    fn visible_dataset<'g>(&self, g: &'g Graph, id: NodeId, caller: &Caller) -> Result<&'g Node> {
        match g.node(id) {
            Some(node) if node.label == NodeLabel::DatalakeDataset && own_level(g, id) <= caller.clearance => Ok(node),
            _ => Err(Error::NotFound(format!("dataset {id}"))),
        }
    }

    /// Case-insensitive substring search over name, description and tags
    /// of the datasets the caller may see, ordered by name then id. An empty
    /// keyword lists everything visible.
    pub fn search(&self, keyword: &str, caller: &Caller) -> Vec<DatasetSummary> {
        let needle = keyword.trim().to_lowercase();
        self.store().read(|g| {
            let mut hits: Vec<DatasetSummary> = g
                .nodes_with_label(NodeLabel::DatalakeDataset)
                .filter(|d| own_level(g, d.id) <= caller.clearance)
                .filter(|d| {
                    needle.is_empty()
                        || d.text("name").is_some_and(|n| n.to_lowercase().contains(&needle))
                        || d.text("description").is_some_and(|t| t.to_lowercase().contains(&needle))
                        || tag_names(g, d.id).iter().any(|t| t.contains(&needle))
                })
                .map(|d| summary(g, d))
                .collect();
            hits.sort_by(|a, b| a.name.cmp(&b.name).then(a.id.cmp(&b.id)));
            hits
        })
    }

    /// Properties, schema with statistics, and current veracity. Statistics
    /// of entities and attributes above the caller's clearance are withheld;
    /// their names stay visible.
    pub fn dataset_detail(&self, id: NodeId, caller: &Caller) -> Result<DatasetDetail> {
        self.store().read(|g| {
            let node = self.visible_dataset(g, id, caller)?;
            let schema = self.schema_view(g, id, caller)?;
            let veracity = g
                .neighbors(id, DATASET_VERACITY, Direction::Out)?
                .into_iter()
                .filter(|v| v.flag("current") == Some(true))
                .max_by_key(|v| v.id)
                .map(Node::props_json);
            Ok(DatasetDetail {
                id,
                sensitivity: own_level(g, id),
                tags: tag_names(g, id),
                properties: node.props_json(),
                schema,
                veracity,
            })
        })
    }

    pub fn schema(&self, id: NodeId, caller: &Caller) -> Result<Vec<EntityView>> {
        self.store().read(|g| {
            self.visible_dataset(g, id, caller)?;
            self.schema_view(g, id, caller)
        })
    }

    fn schema_view(&self, g: &Graph, id: NodeId, caller: &Caller) -> Result<Vec<EntityView>> {
        let mut entities = Vec::new();
        let mut entity_nodes = g.neighbors(id, DATASET_ENTITY, Direction::Out)?;
        entity_nodes.sort_by_key(|e| (e.int("position").unwrap_or(0), e.id));
        for entity in entity_nodes {
            let level = effective_level(g, entity.id);
            let entity_hidden = level > caller.clearance;
            let mut attributes: Vec<AttributeView> = g
                .neighbors(entity.id, ENTITY_ATTRIBUTE, Direction::Out)?
                .into_iter()
                .map(|a| {
                    let level = effective_level(g, a.id);
                    let redacted = level > caller.clearance;
                    let stats = (!redacted).then(|| {
                        let Value::Object(all) = a.props_json() else { unreachable!() };
                        Value::Object(
                            all.into_iter().filter(|(k, _)| !ATTRIBUTE_IDENTITY.contains(&k.as_str())).collect::<Map<_, _>>(),
                        )
                    });
                    AttributeView {
                        id: a.id,
                        name: a.text("name").unwrap_or_default().to_string(),
                        kind: match a.label {
                            NodeLabel::NumericAttribute => "numeric".into(),
                            _ => "nominal".into(),
                        },
                        position: a.int("position").unwrap_or(0),
                        sensitivity: level,
                        redacted,
                        stats,
                    }
                })
                .collect();
            attributes.sort_by_key(|a| (a.position, a.id));
            entities.push(EntityView {
                id: entity.id,
                name: entity.text("name").unwrap_or_default().to_string(),
                sensitivity: level,
                redacted: entity_hidden,
                row_count: if entity_hidden { None } else { entity.int("rowCount") },
                attribute_count: entity.int("attributeCount").unwrap_or(0),
                attributes,
            });
        }
        Ok(entities)
    }

    /// dataset ← ingest ← source (← stream origin), plus who ran the ingest.
    pub fn lineage(&self, id: NodeId, caller: &Caller) -> Result<LineageView> {
        self.store().read(|g| {
            let dataset = self.visible_dataset(g, id, caller)?;
            let ingest = g
                .neighbor(id, INGEST_DATASET, Direction::In)?
                .ok_or_else(|| Error::NotFound(format!("ingest of {id}")))?;
            let source = g
                .neighbor(ingest.id, DATASET_SOURCE_INGEST, Direction::In)?
                .ok_or_else(|| Error::NotFound(format!("source of {id}")))?;
            let user = g.neighbor(ingest.id, INGEST_USER, Direction::Out)?.and_then(|u| u.text("name")).map(str::to_string);
            let origin = g.neighbor(source.id, SOURCE_OF_STREAM, Direction::Out)?;
            Ok(LineageView {
                dataset: node_view(dataset),
                ingest: node_view(ingest),
                user,
                source: node_view(source),
                stream_origin: origin.map(node_view),
            })
        })
    }

    /// Current relationships of a dataset whose other end the caller may see.
    pub fn relationships(&self, id: NodeId, caller: &Caller) -> Result<Vec<RelationshipView>> {
        self.store().read(|g| {
            self.visible_dataset(g, id, caller)?;
            let mut out = Vec::new();
            for edge in g.edges_to(id, ANALYSIS_DS_DATASET) {
                let rel = g.require(edge.from)?;
                if rel.flag("current") == Some(false) {
                    continue;
                }
                let Some(other) = g.edges_from(rel.id, ANALYSIS_DS_DATASET).into_iter().map(|e| e.to).find(|&d| d != id)
                else {
                    continue;
                };
                let Ok(other_node) = self.visible_dataset(g, other, caller) else { continue };
                let kind = g
                    .neighbor(rel.id, ANALYSIS_DS_KIND, Direction::Out)?
                    .and_then(|k| k.text("name"))
                    .unwrap_or_default()
                    .to_string();
                out.push(RelationshipView {
                    id: rel.id,
                    other_dataset: other,
                    other_name: other_node.text("name").unwrap_or_default().to_string(),
                    kind,
                    value: rel.decimal("value").unwrap_or(0.0),
                    origin: rel.text("origin").unwrap_or("automatic").to_string(),
                    name: rel.text("name").map(str::to_string),
                    description: rel.text("description").map(str::to_string),
                });
            }
            out.sort_by_key(|r| r.id);
            Ok(out)
        })
    }

    pub fn graph_stats(&self) -> GraphStats {
        self.store().stats()
    }

    /// Marks `target` (the dataset itself, or one of its entities or
    /// attributes) on behalf of a caller who can see the dataset.
    pub fn mark_in_dataset(&self, dataset: NodeId, target: Option<NodeId>, level: u32, caller: &Caller) -> Result<NodeId> {
        let target = target.unwrap_or(dataset);
        self.store().read(|g| {
            self.visible_dataset(g, dataset, caller)?;
            if owning_dataset(g, target) != Some(dataset) {
                return Err(Error::NotFound(format!("node {target} in dataset {dataset}")));
            }
            Ok(())
        })?;
        self.mark_sensitivity(target, level, &caller.name)
    }

    /// Checks the caller may see `dataset`.
    pub fn require_visible(&self, dataset: NodeId, caller: &Caller) -> Result<()> {
        self.store().read(|g| self.visible_dataset(g, dataset, caller).map(|_| ()))
    }
}
