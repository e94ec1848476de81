//! Schema extraction for ingested datasets: entities, attributes, column
//! statistics, media format and intra-entity attribute relationships.

pub mod detect;
pub mod stats;
pub mod table;

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::Serialize;

pub use detect::{detect_dataset_type, get_dataset_format, DatasetType};
pub use stats::{
    classify, compute_nominal_stats, compute_numeric_stats, is_null, ColumnKind, NominalStats, NumericStats,
};
pub use table::Table;

use crate::config::AttributeThresholds;
use crate::error::{Error, Result};
use crate::graph::registry::{
    ANALYSIS_ATT_ATTRIBUTE, ANALYSIS_ATT_KIND, DATASET_ENTITY, DATASET_SOURCE_INGEST, ENTITY_ATTRIBUTE,
    INGEST_DATASET,
};
use crate::graph::{Direction, Graph, Node, NodeId, NodeLabel, Props, WriteTx};
use crate::lake::Lake;
use crate::measures::{max_containment, name_similarity, pearson};
use crate::props;
use detect::{file_shape, FileShape};
use table::{delimiter_for, member_files, read_delimited, read_json, read_markup, stem};

/// Attribute relationship kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttKind {
    Correlation,
    NameSimilarity,
    ValueSimilarity,
    Containment,
}

impl AttKind {
    pub const ALL: [AttKind; 4] =
        [AttKind::Correlation, AttKind::NameSimilarity, AttKind::ValueSimilarity, AttKind::Containment];

    pub fn as_str(self) -> &'static str {
        match self {
            AttKind::Correlation => "correlation",
            AttKind::NameSimilarity => "name-similarity",
            AttKind::ValueSimilarity => "value-similarity",
            AttKind::Containment => "containment",
        }
    }

    pub fn threshold(self, t: &AttributeThresholds) -> f64 {
        match self {
            AttKind::Correlation => t.correlation,
            AttKind::NameSimilarity => t.name_similarity,
            AttKind::ValueSimilarity => t.value_similarity,
            AttKind::Containment => t.containment,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ColumnStats {
    Numeric(NumericStats),
    Nominal(NominalStats),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnProfile {
    pub name: String,
    pub position: usize,
    pub stats: ColumnStats,
}

impl ColumnProfile {
    pub fn kind(&self) -> ColumnKind {
        match self.stats {
            ColumnStats::Numeric(_) => ColumnKind::Numeric,
            ColumnStats::Nominal(_) => ColumnKind::Nominal,
        }
    }

    fn props(&self) -> Props {
        let mut p = props! { "name" => self.name.as_str(), "position" => self.position };
        let mut put = |k: &str, v: Option<f64>| {
            if let Some(v) = v {
                p.insert(k.to_string(), v.into());
            }
        };
        match &self.stats {
            ColumnStats::Numeric(s) => {
                put("min", s.min);
                put("max", s.max);
                put("mean", s.mean);
                put("stdDev", s.std_dev);
                p.insert("count".into(), s.count.into());
                p.insert("nullCount".into(), s.null_count.into());
                p.insert("distinctCount".into(), s.distinct_count.into());
            }
            ColumnStats::Nominal(s) => {
                p.insert("count".into(), s.count.into());
                p.insert("nullCount".into(), s.null_count.into());
                p.insert("distinctCount".into(), s.distinct_count.into());
                p.insert("minLength".into(), s.min_length.into());
                p.insert("maxLength".into(), s.max_length.into());
                for (i, (value, freq)) in s.top_k.iter().enumerate() {
                    p.insert(format!("top{}Value", i + 1), value.into());
                    p.insert(format!("top{}Freq", i + 1), (*freq).into());
                }
            }
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntityProfile {
    pub name: String,
    pub row_count: usize,
    pub columns: Vec<ColumnProfile>,
}

pub fn profile_table(table: &Table) -> EntityProfile {
    let columns = table
        .columns
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let stats = match classify(table.cells(i)) {
                ColumnKind::Numeric => ColumnStats::Numeric(compute_numeric_stats(&table.numeric(i))),
                ColumnKind::Nominal => ColumnStats::Nominal(compute_nominal_stats(&table.nullable(i))),
            };
            ColumnProfile { name: name.clone(), position: i, stats }
        })
        .collect();
    EntityProfile { name: table.name.clone(), row_count: table.row_count(), columns }
}

/// Entities of a raw file or directory in a stable order. Opaque content
/// has none.
pub fn load_tables(path: &Path) -> Result<Vec<Table>> {
    if fs::metadata(path)?.is_dir() {
        let mut tables = Vec::new();
        for file in member_files(path)? {
            tables.extend(load_file(&file)?);
        }
        return Ok(tables);
    }
    load_file(path)
}

fn load_file(path: &Path) -> Result<Vec<Table>> {
    let bytes = fs::read(path)?;
    let name = stem(path);
    let text = || String::from_utf8_lossy(&bytes).into_owned();
    match file_shape(path, &bytes) {
        FileShape::Delimited => {
            let text = text();
            Ok(vec![read_delimited(&name, &text, delimiter_for(path, &text))?])
        }
        FileShape::ObjectTree => read_json(&name, &text()),
        FileShape::Markup => read_markup(&name, &text()),
        FileShape::Opaque => Ok(Vec::new()),
    }
}

/// Distinct non-null cell values of a column.
pub fn value_set(table: &Table, column: usize) -> HashSet<String> {
    table.cells(column).filter(|c| !is_null(c)).map(str::to_string).collect()
}

/// Value of every kind applicable to columns `a` and `b`, unfiltered.
/// Kinds that are undefined for the data (constant series, no values) are
/// left out.
pub fn pair_values(table: &Table, a: usize, b: usize) -> Vec<(AttKind, f64)> {
    let mut out = Vec::new();
    let ka = classify(table.cells(a));
    let kb = classify(table.cells(b));
    if ka == ColumnKind::Numeric && kb == ColumnKind::Numeric {
        let (xa, xb) = (table.numeric(a), table.numeric(b));
        let (x, y): (Vec<f64>, Vec<f64>) =
            xa.iter().zip(&xb).filter_map(|(p, q)| Some(((*p)?, (*q)?))).unzip();
        if let Ok(r) = pearson(&x, &y) {
            out.push((AttKind::Correlation, r));
        }
    }
    out.push((AttKind::NameSimilarity, name_similarity(&table.columns[a], &table.columns[b])));
    if ka == ColumnKind::Nominal && kb == ColumnKind::Nominal {
        let (sa, sb) = (value_set(table, a), value_set(table, b));
        out.push((AttKind::ValueSimilarity, crate::measures::jaccard(&sa, &sb)));
        if let Ok(c) = max_containment(&sa, &sb) {
            out.push((AttKind::Containment, c));
        }
    }
    out
}

/// What profiling produced for one dataset.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ProfileSummary {
    pub dataset: String,
    pub r#type: String,
    pub format: Option<String>,
    pub entities: Vec<NodeId>,
    pub attribute_count: usize,
    pub analyses: Vec<NodeId>,
}

/// An analysis node joining `a` and `b` under `kind`, if one exists.
pub(crate) fn find_att_analysis(g: &Graph, a: NodeId, b: NodeId, kind: NodeId) -> Option<NodeId> {
    g.edges_to(a, ANALYSIS_ATT_ATTRIBUTE)
        .into_iter()
        .map(|e| e.from)
        .find(|&an| g.has_edge(ANALYSIS_ATT_ATTRIBUTE, an, b) && g.has_edge(ANALYSIS_ATT_KIND, an, kind))
}

/// Creates or refreshes the analysis node for (a, b, kind).
pub(crate) fn upsert_att_analysis(
    tx: &mut WriteTx<'_>,
    a: NodeId,
    b: NodeId,
    kind: NodeId,
    value: f64,
    scope: &str,
) -> Result<NodeId> {
    if let Some(existing) = find_att_analysis(tx, a, b, kind) {
        if tx.require(existing)?.decimal("value") != Some(value) {
            tx.set_props(existing, props! { "value" => value })?;
        }
        return Ok(existing);
    }
    let id = tx.put_node(NodeLabel::AnalysisAttribute, props! { "value" => value, "scope" => scope })?;
    tx.put_edge(ANALYSIS_ATT_ATTRIBUTE, id, a)?;
    tx.put_edge(ANALYSIS_ATT_ATTRIBUTE, id, b)?;
    tx.put_edge(ANALYSIS_ATT_KIND, id, kind)?;
    Ok(id)
}

/// A dataset's parsed entities matched with their graph nodes.
pub(crate) struct LoadedEntity {
    pub entity: NodeId,
    pub table: Table,
    /// Attribute node per column position.
    pub attributes: Vec<NodeId>,
}

impl Lake {
    /// Builds the schema of an ingested dataset. Tabular and tree content
    /// gets entity and attribute nodes with statistics plus intra-entity
    /// attribute analyses; opaque content gets a `format` property.
    /// Profiling an already profiled dataset changes nothing.
    pub fn profile_dataset(&self, dataset: NodeId) -> Result<ProfileSummary> {
        let node = self.dataset(dataset)?;
        if node.flag("profiled") == Some(true) {
            return Ok(self.existing_profile(&node));
        }
        let path = self.lake_path(&node)?;
        let ty = match node.text("type") {
            Some(t) => t.parse()?,
            None => detect_dataset_type(&path)?,
        };
        let mut summary =
            ProfileSummary { dataset: dataset.to_string(), r#type: ty.to_string(), ..ProfileSummary::default() };
        if ty == DatasetType::Unstructured {
            let format = get_dataset_format(&path)?;
            self.store().set_props(
                dataset,
                props! { "type" => ty.as_str(), "format" => format.as_str(), "profiled" => true },
            )?;
            summary.format = Some(format);
            return Ok(summary);
        }
        let mut tables = match load_tables(&path) {
            Ok(t) => t,
            Err(e) => {
                self.record_ingest_error(dataset, &format!("profiling failed: {e}"))?;
                return Err(e);
            }
        };
        if path.is_file() {
            if let Some(original) = self.source_stem(dataset) {
                let raw = stem(&path);
                tables.iter_mut().filter(|t| t.name == raw).for_each(|t| t.name = original.clone());
            }
        }
        let profiles: Vec<EntityProfile> = tables.iter().map(profile_table).collect();
        self.store().write(|tx| {
            for (position, profile) in profiles.iter().enumerate() {
                let entity = tx.put_node(
                    NodeLabel::EntityClass,
                    props! {
                        "name" => profile.name.as_str(),
                        "position" => position,
                        "rowCount" => profile.row_count,
                        "attributeCount" => profile.columns.len(),
                    },
                )?;
                tx.put_edge(DATASET_ENTITY, dataset, entity)?;
                for column in &profile.columns {
                    let label = match column.kind() {
                        ColumnKind::Numeric => NodeLabel::NumericAttribute,
                        ColumnKind::Nominal => NodeLabel::NominalAttribute,
                    };
                    let attribute = tx.put_node(label, column.props())?;
                    tx.put_edge(ENTITY_ATTRIBUTE, entity, attribute)?;
                }
                summary.entities.push(entity);
                summary.attribute_count += profile.columns.len();
            }
            tx.set_props(dataset, props! { "type" => ty.as_str(), "profiled" => true })
        })?;
        for entity in summary.entities.clone() {
            summary.analyses.extend(self.analyze_attribute_pairs(entity)?);
        }
        Ok(summary)
    }

    fn existing_profile(&self, node: &Node) -> ProfileSummary {
        self.store().read(|g| {
            let entities: Vec<&Node> = g.neighbors(node.id, DATASET_ENTITY, Direction::Out).unwrap_or_default();
            let attribute_count = entities
                .iter()
                .map(|e| g.edges_from(e.id, ENTITY_ATTRIBUTE).len())
                .sum();
            ProfileSummary {
                dataset: node.id.to_string(),
                r#type: node.text("type").unwrap_or_default().to_string(),
                format: node.text("format").map(str::to_string),
                entities: entities.iter().map(|e| e.id).collect(),
                attribute_count,
                analyses: Vec::new(),
            }
        })
    }

    /// Scores every unordered attribute pair of an entity under each
    /// applicable kind and keeps the pairs meeting the kind's threshold.
    /// Re-running refreshes existing nodes instead of duplicating them.
    pub fn analyze_attribute_pairs(&self, entity: NodeId) -> Result<Vec<NodeId>> {
        self.node_with_label(entity, NodeLabel::EntityClass)?;
        let dataset = self
            .store()
            .read(|g| g.neighbor(entity, DATASET_ENTITY, Direction::In).map(|n| n.map(|n| n.id)))?
            .ok_or_else(|| Error::Precondition(format!("entity {entity} belongs to no dataset")))?;
        let loaded = self.load_entities(dataset)?;
        let Some(item) = loaded.into_iter().find(|l| l.entity == entity) else {
            return Err(Error::Precondition(format!("entity {entity} not found in raw content")));
        };
        let kinds = self.attribute_kinds()?;
        let mut found = Vec::new();
        let n = item.table.columns.len();
        for a in 0..n {
            for b in a + 1..n {
                for (kind, value) in pair_values(&item.table, a, b) {
                    let (kind_id, threshold) = kinds[kind as usize];
                    if value.abs() >= threshold {
                        found.push((item.attributes[a], item.attributes[b], kind_id, value));
                    }
                }
            }
        }
        self.store().write(|tx| {
            found
                .iter()
                .map(|&(a, b, kind, value)| upsert_att_analysis(tx, a, b, kind, value, "intra"))
                .collect()
        })
    }

    /// (node, threshold) of each attribute kind, indexed by [`AttKind`].
    pub(crate) fn attribute_kinds(&self) -> Result<Vec<(NodeId, f64)>> {
        AttKind::ALL
            .iter()
            .map(|k| {
                let node = self.kind_node(NodeLabel::RelationshipAtt, k.as_str())?;
                let threshold = node.decimal("threshold").unwrap_or(k.threshold(&self.config().thresholds.attribute));
                Ok((node.id, threshold))
            })
            .collect()
    }

    /// Stem of the file a local or HTTP source points at. The raw-zone copy
    /// is always called `data`, so single-file entities are named after this.
    fn source_stem(&self, dataset: NodeId) -> Option<String> {
        let location = self.store().read(|g| {
            let ingest = g.neighbor(dataset, INGEST_DATASET, Direction::In).ok()??;
            let source = g.neighbor(ingest.id, DATASET_SOURCE_INGEST, Direction::In).ok()??;
            source.text("location").map(str::to_string)
        })?;
        let is_url = location.contains("://");
        if is_url && !(location.starts_with("file://") || location.starts_with("http")) {
            return None;
        }
        let path = location.split(['?', '#']).next()?;
        let last = path.trim_end_matches('/').rsplit('/').next()?;
        let stem = Path::new(last).file_stem()?.to_str()?;
        (!stem.is_empty()).then(|| stem.to_string())
    }

    pub(crate) fn lake_path(&self, dataset: &Node) -> Result<std::path::PathBuf> {
        let rel = dataset
            .text("lakePath")
            .ok_or_else(|| Error::Precondition(format!("dataset {} has no raw content", dataset.id)))?;
        Ok(self.raw_zone().join(rel))
    }

    /// Re-reads a profiled dataset's raw content and pairs each entity with
    /// its nodes.
    pub(crate) fn load_entities(&self, dataset: NodeId) -> Result<Vec<LoadedEntity>> {
        let node = self.dataset(dataset)?;
        if node.flag("profiled") != Some(true) {
            return Err(Error::Precondition(format!("dataset {dataset} is not profiled")));
        }
        let tables = load_tables(&self.lake_path(&node)?)?;
        self.store().read(|g| {
            let entities = g.neighbors(dataset, DATASET_ENTITY, Direction::Out)?;
            let mut out = Vec::new();
            for entity in entities {
                let position = entity.int("position").unwrap_or(-1);
                let Some(table) = usize::try_from(position).ok().and_then(|p| tables.get(p)) else {
                    return Err(Error::Precondition(format!("raw content of {dataset} changed")));
                };
                let mut attributes: Vec<(i64, NodeId)> = g
                    .neighbors(entity.id, ENTITY_ATTRIBUTE, Direction::Out)?
                    .iter()
                    .map(|a| (a.int("position").unwrap_or(0), a.id))
                    .collect();
                attributes.sort();
                if attributes.len() != table.columns.len() {
                    return Err(Error::Precondition(format!("raw content of {dataset} changed")));
                }
                out.push(LoadedEntity {
                    entity: entity.id,
                    table: table.clone(),
                    attributes: attributes.into_iter().map(|(_, id)| id).collect(),
                });
            }
            Ok(out)
        })
    }

    /// Appends `message` to the errorLog of the ingest that produced
    /// `dataset`.
    pub(crate) fn record_ingest_error(&self, dataset: NodeId, message: &str) -> Result<()> {
        self.store().write(|tx| {
            let Some(ingest) = tx.neighbor(dataset, INGEST_DATASET, Direction::In)? else {
                return Ok(());
            };
            let (id, previous) = (ingest.id, ingest.text("errorLog").unwrap_or_default().to_string());
            let log = if previous.is_empty() { message.to_string() } else { format!("{previous}\n{message}") };
            tx.set_props(id, props! { "errorLog" => log })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(columns: &[&str], rows: &[&[&str]]) -> Table {
        Table {
            name: "t".into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: rows.iter().map(|r| r.iter().map(|c| c.to_string()).collect()).collect(),
        }
    }

    #[test]
    fn profile_classifies_every_column() {
        let t = table(&["a", "b", "c"], &[&["1", "x", ""], &["2", "y", "NA"], &["3", "x", ""]]);
        let p = profile_table(&t);
        assert_eq!(p.row_count, 3);
        assert_eq!(p.columns[0].kind(), ColumnKind::Numeric);
        assert_eq!(p.columns[1].kind(), ColumnKind::Nominal);
        assert_eq!(p.columns[2].kind(), ColumnKind::Numeric);
        let props = p.columns[1].props();
        assert_eq!(props["top1Value"].as_text(), Some("x"));
        assert_eq!(props["top1Freq"].as_int(), Some(2));
        assert!(!p.columns[2].props().contains_key("mean"));
    }

    #[test]
    fn pair_values_follow_applicability() {
        let t = table(
            &["x", "x_copy", "label", "label2"],
            &[&["1", "2", "a", "a"], &["2", "4", "b", "b"], &["3", "5", "c", "z"], &["4", "4", "c", "a"]],
        );
        let v = pair_values(&t, 0, 1);
        let r = v.iter().find(|(k, _)| *k == AttKind::Correlation).unwrap().1;
        assert!((r - 0.718).abs() < 1e-3);
        assert!(!v.iter().any(|(k, _)| *k == AttKind::Containment));

        let v = pair_values(&t, 2, 3);
        let get = |k| v.iter().find(|(kk, _)| *kk == k).unwrap().1;
        assert_eq!(get(AttKind::ValueSimilarity), 2.0 / 4.0);
        assert_eq!(get(AttKind::Containment), 2.0 / 3.0);
        assert!(get(AttKind::NameSimilarity) > 0.8);
        assert!(!v.iter().any(|(k, _)| *k == AttKind::Correlation));

        let mixed = pair_values(&t, 0, 2);
        assert_eq!(mixed.len(), 1);
        assert_eq!(mixed[0].0, AttKind::NameSimilarity);
    }

    proptest::proptest! {
        #[test]
        fn pair_values_are_symmetric(rows in proptest::collection::vec(("[0-9]{1,2}|na", "[a-c]{1}", "[0-9]{1}"), 2..15)) {
            let data: Vec<Vec<String>> = rows.iter().map(|(a, b, c)| vec![a.clone(), b.clone(), c.clone()]).collect();
            let t = Table { name: "t".into(), columns: vec!["p".into(), "q".into(), "r".into()], rows: data };
            for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                proptest::prop_assert_eq!(pair_values(&t, a, b), pair_values(&t, b, a));
            }
        }
    }
}
