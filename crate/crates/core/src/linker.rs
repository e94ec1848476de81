//! Automatic dataset relationships: row-content similarity (MinHash),
//! containment, correlation and tag-based logical clusters.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::registry::{ANALYSIS_DS_DATASET, ANALYSIS_DS_KIND};
use crate::graph::{NodeId, NodeLabel};
use crate::hashing::{row_hash, splitmix64};
use crate::lake::{Lake, DATASET_KINDS};
use crate::measures::{jaccard, max_containment, name_similarity, pearson};
use crate::profiler::{
    classify, load_tables, upsert_att_analysis, value_set, AttKind, ColumnKind, DatasetType, LoadedEntity, Table,
};
use crate::props;

pub const DEFAULT_K: usize = 128;

/// Golden-ratio increment of the SplitMix64 sequence.
const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MinHashSignature {
    pub k: usize,
    pub seed: u64,
    pub values: Vec<u64>,
}

impl MinHashSignature {
    /// Signature of the empty set: no position ever took a value.
    pub fn is_empty(&self) -> bool {
        self.values.iter().all(|&v| v == u64::MAX)
    }
}

/// Seed of the `i`-th hash function: the `i`-th output of a SplitMix64
/// sequence started at `seed`.
fn function_seed(seed: u64, i: usize) -> u64 {
    splitmix64(seed.wrapping_add((i as u64).wrapping_mul(GAMMA)))
}

/// `k` minimum values of `h_i(x) = splitmix64(x ^ seed_i)` over the set.
pub fn minhash<'a>(set: impl IntoIterator<Item = &'a u64>, k: usize, seed: u64) -> MinHashSignature {
    let seeds: Vec<u64> = (0..k).map(|i| function_seed(seed, i)).collect();
    let mut values = vec![u64::MAX; k];
    for &x in set {
        for (slot, s) in values.iter_mut().zip(&seeds) {
            let h = splitmix64(x ^ s);
            if h < *slot {
                *slot = h;
            }
        }
    }
    MinHashSignature { k, seed, values }
}

/// Fraction of positions where the signatures agree. Two empty sets score 0.
pub fn estimate_jaccard(a: &MinHashSignature, b: &MinHashSignature) -> Result<f64> {
    if a.k != b.k || a.seed != b.seed || a.values.len() != b.values.len() {
        return Err(Error::Validation(format!(
            "signatures differ in shape: k={} seed={} vs k={} seed={}",
            a.k, a.seed, b.k, b.seed
        )));
    }
    if a.k == 0 || (a.is_empty() && b.is_empty()) {
        return Ok(0.0);
    }
    let matches = a.values.iter().zip(&b.values).filter(|(x, y)| x == y).count();
    Ok(matches as f64 / a.k as f64)
}

/// One hash per distinct row across all entities.
pub fn row_hashes(tables: &[Table], seed: u64) -> HashSet<u64> {
    tables.iter().flat_map(|t| t.rows.iter().map(move |r| row_hash(r, seed))).collect()
}

/// Dataset relationship kinds, in tie-break precedence order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DsKind {
    Similarity,
    Containment,
    Correlation,
    LogicalCluster,
}

impl DsKind {
    pub const ALL: [DsKind; 4] = [DsKind::Similarity, DsKind::Containment, DsKind::Correlation, DsKind::LogicalCluster];

    pub fn as_str(self) -> &'static str {
        DATASET_KINDS[self as usize]
    }
}

/// Scores of every kind for one dataset pair. `None` marks a kind that does
/// not apply to the pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PairScores {
    pub similarity: Option<f64>,
    pub containment: Option<f64>,
    pub correlation: Option<f64>,
    pub logical_cluster: f64,
}

impl PairScores {
    pub fn get(&self, kind: DsKind) -> Option<f64> {
        match kind {
            DsKind::Similarity => self.similarity,
            DsKind::Containment => self.containment,
            DsKind::Correlation => self.correlation,
            DsKind::LogicalCluster => Some(self.logical_cluster),
        }
    }
}

/// The kind reported for a pair: the highest-valued kind meeting its
/// threshold, earlier kinds winning ties.
pub fn dominant_kind(scores: &PairScores, thresholds: &BTreeMap<DsKind, f64>) -> Option<(DsKind, f64)> {
    let mut best: Option<(DsKind, f64)> = None;
    for kind in DsKind::ALL {
        let Some(value) = scores.get(kind) else { continue };
        if value < thresholds.get(&kind).copied().unwrap_or(f64::INFINITY) {
            continue;
        }
        if best.is_none_or(|(_, v)| value > v) {
            best = Some((kind, value));
        }
    }
    best
}

/// Strongest absolute correlation between numeric columns of entities with
/// equal row counts.
pub fn max_abs_correlation(a: &[Table], b: &[Table]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for ta in a {
        for tb in b.iter().filter(|tb| tb.row_count() == ta.row_count() && ta.row_count() >= 2) {
            for i in numeric_columns(ta) {
                for j in numeric_columns(tb) {
                    let (x, y): (Vec<f64>, Vec<f64>) = ta
                        .numeric(i)
                        .into_iter()
                        .zip(tb.numeric(j))
                        .filter_map(|(p, q)| Some((p?, q?)))
                        .unzip();
                    if let Ok(r) = pearson(&x, &y) {
                        best = Some(best.map_or(r.abs(), |v: f64| v.max(r.abs())));
                    }
                }
            }
        }
    }
    best
}

fn numeric_columns(t: &Table) -> Vec<usize> {
    (0..t.columns.len()).filter(|&c| classify(t.cells(c)) == ColumnKind::Numeric).collect()
}

/// Result of linking one dataset against the rest of the lake.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LinkReport {
    /// Current automatic relationship nodes touching the dataset.
    pub relationships: Vec<NodeId>,
    /// Cross-dataset attribute analyses created or refreshed.
    pub attribute_analyses: Vec<NodeId>,
}

struct Side {
    id: NodeId,
    tables: Option<Vec<Table>>,
    rows: Option<HashSet<u64>>,
    tags: BTreeSet<String>,
}

impl Lake {
    /// Row hashes of a profiled tabular or tree dataset.
    pub fn row_hash_set(&self, dataset: NodeId) -> Result<HashSet<u64>> {
        let tables = self.tables_for_linking(dataset)?.ok_or_else(|| {
            Error::NotApplicable(format!("dataset {dataset} is unstructured and has no rows"))
        })?;
        Ok(row_hashes(&tables, self.config().seed))
    }

    pub fn tag_jaccard(&self, a: NodeId, b: NodeId) -> Result<f64> {
        self.dataset(a)?;
        self.dataset(b)?;
        let ta: HashSet<String> = self.tags_of(a)?.into_iter().collect();
        let tb: HashSet<String> = self.tags_of(b)?.into_iter().collect();
        Ok(jaccard(&ta, &tb))
    }

    fn tables_for_linking(&self, dataset: NodeId) -> Result<Option<Vec<Table>>> {
        let node = self.dataset(dataset)?;
        if node.flag("profiled") != Some(true) {
            return Err(Error::Precondition(format!("dataset {dataset} is not profiled")));
        }
        if node.text("type") == Some(DatasetType::Unstructured.as_str()) {
            return Ok(None);
        }
        Ok(Some(load_tables(&self.lake_path(&node)?)?))
    }

    fn side(&self, dataset: NodeId) -> Result<Side> {
        let tables = self.tables_for_linking(dataset)?;
        let rows = tables.as_ref().map(|t| row_hashes(t, self.config().seed));
        let tags = self.tags_of(dataset)?.into_iter().collect();
        Ok(Side { id: dataset, tables, rows, tags })
    }

    fn scores(&self, a: &Side, b: &Side) -> Result<PairScores> {
        let (k, seed) = (self.config().minhash_k, self.config().seed);
        let (similarity, containment) = match (&a.rows, &b.rows) {
            (Some(ra), Some(rb)) => {
                let s = estimate_jaccard(&minhash(ra, k, seed), &minhash(rb, k, seed))?;
                (Some(s), max_containment(ra, rb).ok())
            }
            _ => (None, None),
        };
        let correlation = match (&a.tables, &b.tables) {
            (Some(ta), Some(tb)) => max_abs_correlation(ta, tb),
            _ => None,
        };
        let ta: HashSet<&String> = a.tags.iter().collect();
        let tb: HashSet<&String> = b.tags.iter().collect();
        Ok(PairScores { similarity, containment, correlation, logical_cluster: jaccard(&ta, &tb) })
    }

    /// Scores for a dataset pair without persisting anything.
    pub fn pair_scores(&self, a: NodeId, b: NodeId) -> Result<PairScores> {
        let (sa, sb) = (self.side(a)?, self.side(b)?);
        self.scores(&sa, &sb)
    }

    fn dataset_thresholds(&self) -> Result<(BTreeMap<DsKind, f64>, BTreeMap<DsKind, NodeId>)> {
        let mut thresholds = BTreeMap::new();
        let mut ids = BTreeMap::new();
        for kind in DsKind::ALL {
            let node = self.kind_node(NodeLabel::RelationshipDS, kind.as_str())?;
            thresholds.insert(kind, node.decimal("threshold").unwrap_or(f64::INFINITY));
            ids.insert(kind, node.id);
        }
        Ok((thresholds, ids))
    }

    /// Compares `dataset` with every other profiled dataset and keeps, per
    /// pair, the single strongest relationship that meets its kind's
    /// threshold. Pairs similar enough also get cross-dataset attribute
    /// analyses. Re-running updates nodes in place; manual relationships are
    /// never touched.
    pub fn calculate_relationships(&self, dataset: NodeId) -> Result<LinkReport> {
        let me = self.side(dataset)?;
        let (thresholds, kind_ids) = self.dataset_thresholds()?;
        let others: Vec<NodeId> = self
            .datasets()
            .into_iter()
            .filter(|d| d.id != dataset && d.flag("profiled") == Some(true))
            .map(|d| d.id)
            .collect();
        let mut report = LinkReport::default();
        let at = self.now();
        for other in others {
            let them = self.side(other)?;
            let scores = self.scores(&me, &them)?;
            let winner = dominant_kind(&scores, &thresholds);
            let rel = self.store().write(|tx| {
                let existing = crate::enrichment::ds_relationships(tx, me.id, them.id);
                let mut keep = None;
                for (rel, kind) in existing {
                    let node = tx.require(rel)?;
                    if node.text("origin") == Some("manual") {
                        if winner.is_some_and(|(w, _)| kind_ids[&w] == kind) {
                            keep = Some(None);
                        }
                        continue;
                    }
                    match winner {
                        Some((w, value)) if kind_ids[&w] == kind && keep.is_none() => {
                            if node.decimal("value") != Some(value) {
                                tx.set_props(rel, props! { "value" => value, "computedAt" => at })?;
                            }
                            keep = Some(Some(rel));
                        }
                        _ => tx.set_props(rel, props! { "current" => false })?,
                    }
                }
                match (keep, winner) {
                    (Some(found), _) => Ok(found),
                    (None, Some((w, value))) => {
                        let rel = tx.put_node(
                            NodeLabel::AnalysisDSRelationship,
                            props! { "value" => value, "origin" => "automatic", "current" => true, "computedAt" => at },
                        )?;
                        tx.put_edge(ANALYSIS_DS_DATASET, rel, me.id)?;
                        tx.put_edge(ANALYSIS_DS_DATASET, rel, them.id)?;
                        tx.put_edge(ANALYSIS_DS_KIND, rel, kind_ids[&w])?;
                        Ok(Some(rel))
                    }
                    (None, None) => Ok(None),
                }
            })?;
            report.relationships.extend(rel);
            let similar = scores.similarity.is_some_and(|s| s >= thresholds[&DsKind::Similarity]);
            if similar {
                report.attribute_analyses.extend(self.cross_attribute_analysis(me.id, them.id)?);
            }
        }
        Ok(report)
    }

    /// Name similarity for every attribute pair across two datasets, and
    /// value containment for pairs of the same kind.
    fn cross_attribute_analysis(&self, a: NodeId, b: NodeId) -> Result<Vec<NodeId>> {
        let ea = self.load_entities(a)?;
        let eb = self.load_entities(b)?;
        let kinds = self.attribute_kinds()?;
        let (name_kind, name_threshold) = kinds[AttKind::NameSimilarity as usize];
        let (cont_kind, cont_threshold) = kinds[AttKind::Containment as usize];
        let columns = |entities: &[LoadedEntity]| -> Vec<(NodeId, String, ColumnKind, HashSet<String>)> {
            entities
                .iter()
                .flat_map(|e| {
                    (0..e.table.columns.len()).map(move |c| {
                        (e.attributes[c], e.table.columns[c].clone(), classify(e.table.cells(c)), value_set(&e.table, c))
                    })
                })
                .collect()
        };
        let (ca, cb) = (columns(&ea), columns(&eb));
        let mut found = Vec::new();
        for (ida, name_a, kind_a, values_a) in &ca {
            for (idb, name_b, kind_b, values_b) in &cb {
                let sim = name_similarity(name_a, name_b);
                if sim >= name_threshold {
                    found.push((*ida, *idb, name_kind, sim));
                }
                if kind_a == kind_b {
                    if let Ok(c) = max_containment(values_a, values_b) {
                        if c >= cont_threshold {
                            found.push((*ida, *idb, cont_kind, c));
                        }
                    }
                }
            }
        }
        self.store().write(|tx| {
            found
                .iter()
                .map(|&(x, y, kind, value)| upsert_att_analysis(tx, x, y, kind, value, "cross"))
                .collect()
        })
    }
}
