//! Semantic annotation, sensitivity marks, veracity scores, manual
//! relationships and the global dictionary.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::registry::{
    ANALYSIS_DS_DATASET, ANALYSIS_DS_KIND, DATASET_ENTITY, DATASET_SOURCE_INGEST, DATASET_TAG, DATASET_VERACITY,
    ENTITY_ATTRIBUTE, INGEST_DATASET, MARK_LEVEL, MARK_TARGET, MARK_USER,
};
use crate::graph::{Direction, Graph, NodeId, NodeLabel, PropValue};
use crate::lake::Lake;
use crate::props;

/// Tag names are trimmed and lowercased.
pub fn normalize_tag(tag: &str) -> String {
    tag.trim().to_lowercase()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AnnotateOutcome {
    pub tags: Vec<NodeId>,
    pub created_tags: usize,
    pub created_edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VeracityScore {
    pub objectivity: f64,
    pub truthfulness: f64,
    pub credibility: f64,
    pub composite: f64,
}

/// Sensitivity level of the active mark on `target`; 0 when unmarked.
pub fn own_level(g: &Graph, target: NodeId) -> u32 {
    g.edges_to(target, MARK_TARGET)
        .into_iter()
        .filter_map(|e| g.node(e.from))
        .filter(|mark| mark.flag("active") == Some(true))
        .max_by_key(|mark| mark.id)
        .and_then(|mark| mark.int("level"))
        .map_or(0, |l| l.max(0) as u32)
}

/// Effective level: a target inherits the levels of its entity and
/// dataset, and the strictest applies.
pub fn effective_level(g: &Graph, target: NodeId) -> u32 {
    let Some(node) = g.node(target) else { return 0 };
    let parent = match node.label {
        NodeLabel::EntityClass => g.edges_to(target, DATASET_ENTITY).first().map(|e| e.from),
        label if label.is_attribute() => g.edges_to(target, ENTITY_ATTRIBUTE).first().map(|e| e.from),
        _ => None,
    };
    own_level(g, target).max(parent.map_or(0, |p| effective_level(g, p)))
}

/// Current dataset relationship nodes joining `a` and `b`, with their kind.
pub(crate) fn ds_relationships(g: &Graph, a: NodeId, b: NodeId) -> Vec<(NodeId, NodeId)> {
    g.edges_to(a, ANALYSIS_DS_DATASET)
        .into_iter()
        .map(|e| e.from)
        .filter(|&rel| rel != a && g.has_edge(ANALYSIS_DS_DATASET, rel, b))
        .filter(|&rel| g.node(rel).and_then(|n| n.flag("current")) != Some(false))
        .filter_map(|rel| g.edges_from(rel, ANALYSIS_DS_KIND).first().map(|e| (rel, e.to)))
        .collect()
}

impl Lake {
    /// Sets the description (when given) and links the dataset to one Tag
    /// node per normalized name, creating tags that do not exist yet.
    /// Repeating the call changes nothing.
    pub fn annotate_semantics(
        &self,
        dataset: NodeId,
        description: Option<&str>,
        tags: &[impl AsRef<str>],
    ) -> Result<AnnotateOutcome> {
        self.dataset(dataset)?;
        let names: BTreeSet<String> =
            tags.iter().map(|t| normalize_tag(t.as_ref())).filter(|t| !t.is_empty()).collect();
        self.store().write(|tx| {
            let mut out = AnnotateOutcome::default();
            if let Some(description) = description {
                if tx.require(dataset)?.text("description") != Some(description) {
                    tx.set_props(dataset, props! { "description" => description })?;
                }
            }
            for name in &names {
                let key = PropValue::from(name);
                let tag = match tx.find_by_prop(NodeLabel::Tag, "name", &key) {
                    Some(t) => t.id,
                    None => {
                        out.created_tags += 1;
                        tx.put_node(NodeLabel::Tag, props! { "name" => name })?
                    }
                };
                if tx.ensure_edge(DATASET_TAG, dataset, tag)?.is_some() {
                    out.created_edges += 1;
                }
                out.tags.push(tag);
            }
            Ok(out)
        })
    }

    /// Tag names of a dataset, sorted.
    pub fn tags_of(&self, dataset: NodeId) -> Result<Vec<String>> {
        let mut names: Vec<String> = self
            .store()
            .neighbors(dataset, DATASET_TAG, Direction::Out)?
            .iter()
            .filter_map(|t| t.text("name").map(str::to_string))
            .collect();
        names.sort();
        Ok(names)
    }

    /// Records a new mark on a dataset, entity or attribute. The previous
    /// active mark of the target is deactivated, so the latest one rules.
    pub fn mark_sensitivity(&self, target: NodeId, level: u32, user: &str) -> Result<NodeId> {
        let node = self.store().node(target).ok_or_else(|| Error::NotFound(format!("node {target}")))?;
        if !(node.label == NodeLabel::DatalakeDataset || node.label == NodeLabel::EntityClass || node.label.is_attribute())
        {
            return Err(Error::Validation(format!("{} cannot carry a sensitivity mark", node.label)));
        }
        let level_key = PropValue::Int(i64::from(level));
        let at = self.now();
        self.store().write(|tx| {
            let level_node = tx
                .find_by_prop(NodeLabel::SensitivityLevel, "level", &level_key)
                .map(|n| n.id)
                .ok_or_else(|| Error::Validation(format!("unknown sensitivity level {level}")))?;
            let user = self.ensure_user(tx, user)?;
            let previous: Vec<NodeId> = tx
                .edges_to(target, MARK_TARGET)
                .into_iter()
                .map(|e| e.from)
                .filter(|&m| tx.node(m).and_then(|n| n.flag("active")) == Some(true))
                .collect();
            for mark in previous {
                tx.set_props(mark, props! { "active" => false })?;
            }
            let mark = tx.put_node(NodeLabel::SensitivityMark, props! { "level" => level, "at" => at, "active" => true })?;
            tx.put_edge(MARK_TARGET, mark, target)?;
            tx.put_edge(MARK_LEVEL, mark, level_node)?;
            tx.put_edge(MARK_USER, mark, user)?;
            Ok(mark)
        })
    }

    pub fn effective_sensitivity(&self, target: NodeId) -> u32 {
        self.store().read(|g| effective_level(g, target))
    }

    /// Veracity proxies of a profiled dataset: objectivity is the share of
    /// numeric attributes, truthfulness one minus the null ratio over all
    /// cells, credibility the configured score of its source.
    pub fn veracity_score(&self, dataset: NodeId) -> Result<VeracityScore> {
        let node = self.dataset(dataset)?;
        if node.flag("profiled") != Some(true) {
            return Err(Error::Precondition(format!("dataset {dataset} is not profiled")));
        }
        let (numeric, attributes, nulls, cells, source_name) = self.store().read(|g| -> Result<_> {
            let (mut numeric, mut attributes, mut nulls, mut cells) = (0u64, 0u64, 0i64, 0i64);
            for entity in g.neighbors(dataset, DATASET_ENTITY, Direction::Out)? {
                for attr in g.neighbors(entity.id, ENTITY_ATTRIBUTE, Direction::Out)? {
                    attributes += 1;
                    if attr.label == NodeLabel::NumericAttribute {
                        numeric += 1;
                    }
                    nulls += attr.int("nullCount").unwrap_or(0);
                    cells += attr.int("count").unwrap_or(0);
                }
            }
            let source = g
                .neighbor(dataset, INGEST_DATASET, Direction::In)?
                .map(|i| g.neighbor(i.id, DATASET_SOURCE_INGEST, Direction::In))
                .transpose()?
                .flatten()
                .and_then(|s| s.text("name").map(str::to_string));
            Ok((numeric, attributes, nulls, cells, source))
        })?;
        let objectivity = if attributes == 0 { 0.0 } else { numeric as f64 / attributes as f64 };
        let truthfulness = if cells == 0 { 1.0 } else { 1.0 - nulls as f64 / cells as f64 };
        let name = source_name.unwrap_or_else(|| node.text("name").unwrap_or_default().to_string());
        let credibility = self.config().credibility_of(&name);
        let w = &self.config().veracity_weights;
        let composite = w.objectivity * objectivity + w.truthfulness * truthfulness + w.credibility * credibility;
        Ok(VeracityScore { objectivity, truthfulness, credibility, composite })
    }

    /// Stores a fresh veracity node for the dataset; earlier ones are kept
    /// but no longer current.
    pub fn compute_veracity(&self, dataset: NodeId) -> Result<NodeId> {
        let score = self.veracity_score(dataset)?;
        let w = self.config().veracity_weights.clone();
        let at = self.now();
        self.store().write(|tx| {
            let previous: Vec<NodeId> = tx
                .edges_from(dataset, DATASET_VERACITY)
                .into_iter()
                .map(|e| e.to)
                .filter(|&v| tx.node(v).and_then(|n| n.flag("current")) == Some(true))
                .collect();
            for v in previous {
                tx.set_props(v, props! { "current" => false })?;
            }
            let id = tx.put_node(
                NodeLabel::VeracityIndex,
                props! {
                    "objectivity" => score.objectivity,
                    "truthfulness" => score.truthfulness,
                    "credibility" => score.credibility,
                    "composite" => score.composite,
                    "weightObjectivity" => w.objectivity,
                    "weightTruthfulness" => w.truthfulness,
                    "weightCredibility" => w.credibility,
                    "computedAt" => at,
                    "current" => true,
                },
            )?;
            tx.put_edge(DATASET_VERACITY, dataset, id)?;
            Ok(id)
        })
    }

    /// Records a user-declared relationship regardless of thresholds. An
    /// unknown kind becomes a new user-defined RelationshipDS. Declaring the
    /// same pair and kind again updates the existing manual node.
    #[allow(clippy::too_many_arguments)]
    pub fn input_relationship(
        &self,
        ds1: NodeId,
        ds2: NodeId,
        kind: &str,
        name: Option<&str>,
        description: Option<&str>,
        value: f64,
    ) -> Result<NodeId> {
        if ds1 == ds2 {
            return Err(Error::Validation("a dataset cannot be related to itself".into()));
        }
        self.dataset(ds1)?;
        self.dataset(ds2)?;
        let kind = kind.trim();
        if kind.is_empty() {
            return Err(Error::Validation("relationship kind must not be empty".into()));
        }
        if !value.is_finite() {
            return Err(Error::Validation("relationship value must be finite".into()));
        }
        let at = self.now();
        self.store().write(|tx| {
            let kind_key = PropValue::from(kind);
            let kind_id = match tx.find_by_prop(NodeLabel::RelationshipDS, "name", &kind_key) {
                Some(k) => k.id,
                None => tx.put_node(
                    NodeLabel::RelationshipDS,
                    props! { "name" => kind, "description" => "user-defined", "threshold" => 0.0, "builtIn" => false },
                )?,
            };
            let mut fields = props! { "value" => value, "computedAt" => at };
            if let Some(n) = name {
                fields.insert("name".into(), n.into());
            }
            if let Some(d) = description {
                fields.insert("description".into(), d.into());
            }
            let existing: Vec<(NodeId, bool)> = ds_relationships(tx, ds1, ds2)
                .into_iter()
                .filter(|&(_, k)| k == kind_id)
                .map(|(rel, _)| (rel, tx.node(rel).and_then(|n| n.text("origin")) == Some("manual")))
                .collect();
            if let Some(&(manual, _)) = existing.iter().find(|(_, is_manual)| *is_manual) {
                tx.set_props(manual, fields)?;
                return Ok(manual);
            }
            for (automatic, _) in existing {
                tx.set_props(automatic, props! { "current" => false })?;
            }
            fields.insert("origin".into(), "manual".into());
            fields.insert("current".into(), true.into());
            let rel = tx.put_node(NodeLabel::AnalysisDSRelationship, fields)?;
            tx.put_edge(ANALYSIS_DS_DATASET, rel, ds1)?;
            tx.put_edge(ANALYSIS_DS_DATASET, rel, ds2)?;
            tx.put_edge(ANALYSIS_DS_KIND, rel, kind_id)?;
            Ok(rel)
        })
    }

    /// Creates or updates the global dictionary entry `key`.
    pub fn put_global_entry(&self, key: &str, value: &str) -> Result<NodeId> {
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Validation("dictionary key must not be empty".into()));
        }
        let at = self.now();
        self.store().write(|tx| {
            match tx.find_by_prop(NodeLabel::GlobalDictEntry, "key", &PropValue::from(key)) {
                Some(entry) if entry.text("value") == Some(value) => Ok(entry.id),
                Some(entry) => {
                    let id = entry.id;
                    tx.set_props(id, props! { "value" => value, "updatedAt" => at })?;
                    Ok(id)
                }
                None => tx.put_node(NodeLabel::GlobalDictEntry, props! { "key" => key, "value" => value, "updatedAt" => at }),
            }
        })
    }

    /// All dictionary entries as (key, value), sorted by key.
    pub fn global_entries(&self) -> Vec<(String, String)> {
        let mut entries: Vec<(String, String)> = self
            .store()
            .query(NodeLabel::GlobalDictEntry, |_| true)
            .iter()
            .map(|n| (n.text("key").unwrap_or_default().to_string(), n.text("value").unwrap_or_default().to_string()))
            .collect();
        entries.sort();
        entries
    }
}
