//! The lake handle: graph store, raw zone, configuration and clock bundled
//! together. Ingestion, profiling, linking, enrichment and the catalog are
//! all methods on [`Lake`].

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use parking_lot::Mutex;

use crate::clock::{Clock, SystemClock};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::graph::{GraphStore, Node, NodeId, NodeLabel, PropValue, Props, WriteTx};
use crate::props;

/// Attribute relationship kinds computed inside an entity.
pub const ATTRIBUTE_KINDS: [&str; 4] = ["correlation", "name-similarity", "value-similarity", "containment"];

/// Built-in dataset relationship kinds, in tie-break precedence order.
pub const DATASET_KINDS: [&str; 4] = ["similarity", "containment", "correlation", "logical-cluster"];

pub struct Lake {
    store: Arc<GraphStore>,
    config: Config,
    clock: Arc<dyn Clock>,
    /// Poll counters of generated streams, keyed by source.
    pub(crate) polls: Mutex<HashMap<NodeId, u64>>,
}

impl std::fmt::Debug for Lake {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Lake").field("store", &self.store).field("raw_zone", &self.config.raw_zone).finish()
    }
}

impl Lake {
    /// Opens the configured store for writing and seeds the relationship
    /// kinds and sensitivity levels.
    pub fn open(config: Config) -> Result<Self> {
        config.validate()?;
        let store = GraphStore::open(&config.store_path)?;
        Self::from_store(Arc::new(store), config)
    }

    /// Opens the configured store without the writer lease. Mutations fail
    /// with [`Error::ReadOnly`].
    pub fn open_read_only(config: Config) -> Result<Self> {
        config.validate()?;
        let store = GraphStore::open_read_only(&config.store_path)?;
        Self::from_store(Arc::new(store), config)
    }

    /// Volatile graph; raw bytes still go to the configured raw zone.
    pub fn in_memory(config: Config) -> Result<Self> {
        config.validate()?;
        Self::from_store(Arc::new(GraphStore::in_memory()), config)
    }

    pub fn from_store(store: Arc<GraphStore>, config: Config) -> Result<Self> {
        let lake = Lake { store, config, clock: Arc::new(SystemClock), polls: Mutex::new(HashMap::new()) };
        if lake.store.is_writable() {
            lake.seed()?;
        }
        Ok(lake)
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn store(&self) -> &GraphStore {
        &self.store
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn clock(&self) -> &dyn Clock {
        self.clock.as_ref()
    }

    pub(crate) fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    pub fn raw_zone(&self) -> &Path {
        &self.config.raw_zone
    }

    /// Creates missing kind and level nodes and refreshes thresholds that
    /// differ from the config. A no-op on an up-to-date store.
    fn seed(&self) -> Result<()> {
        let att = &self.config.thresholds.attribute;
        let ds = &self.config.thresholds.dataset;
        let att_thresholds = [att.correlation, att.name_similarity, att.value_similarity, att.containment];
        let ds_thresholds = [ds.similarity, ds.containment, ds.correlation, ds.logical_cluster];
        let ds_descriptions = [
            "Jaccard similarity of row contents (MinHash estimate)",
            "fraction of one dataset's rows found in the other",
            "strongest correlation between numeric attributes of equal-length entities",
            "Jaccard similarity of tag sets",
        ];
        self.store.write(|tx| {
            for (name, threshold) in ATTRIBUTE_KINDS.iter().zip(att_thresholds) {
                seed_kind(tx, NodeLabel::RelationshipAtt, name, threshold, props! { "name" => *name })?;
            }
            for ((name, threshold), description) in DATASET_KINDS.iter().zip(ds_thresholds).zip(ds_descriptions) {
                let fresh = props! { "name" => *name, "description" => description, "builtIn" => true };
                seed_kind(tx, NodeLabel::RelationshipDS, name, threshold, fresh)?;
            }
            for spec in &self.config.sensitivity_levels {
                let level = PropValue::Int(i64::from(spec.level));
                match tx.find_by_prop(NodeLabel::SensitivityLevel, "level", &level) {
                    Some(node) if node.text("label") == Some(spec.label.as_str()) => {}
                    Some(node) => {
                        let id = node.id;
                        tx.set_props(id, props! { "label" => spec.label.as_str() })?;
                    }
                    None => {
                        tx.put_node(
                            NodeLabel::SensitivityLevel,
                            props! { "level" => spec.level, "label" => spec.label.as_str() },
                        )?;
                    }
                }
            }
            Ok(())
        })
    }

    /// The User node for `name`, created on first use. Only users listed in
    /// the config may act.
    pub(crate) fn ensure_user(&self, tx: &mut WriteTx<'_>, name: &str) -> Result<NodeId> {
        let clearance = self
            .config
            .clearance_of(name)
            .ok_or_else(|| Error::Unauthorized(format!("unknown user `{name}`")))?;
        let key = PropValue::from(name);
        match tx.find_by_prop(NodeLabel::User, "name", &key) {
            Some(node) if node.int("clearance") == Some(i64::from(clearance)) => Ok(node.id),
            Some(node) => {
                let id = node.id;
                tx.set_props(id, props! { "clearance" => clearance })?;
                Ok(id)
            }
            None => tx.put_node(NodeLabel::User, props! { "name" => name, "clearance" => clearance }),
        }
    }

    /// Node `id` if it carries `label`.
    pub fn node_with_label(&self, id: NodeId, label: NodeLabel) -> Result<Node> {
        match self.store.node(id) {
            Some(node) if node.label == label => Ok(node),
            _ => Err(Error::NotFound(format!("{label} {id}"))),
        }
    }

    pub fn dataset(&self, id: NodeId) -> Result<Node> {
        self.node_with_label(id, NodeLabel::DatalakeDataset)
    }

    /// All dataset nodes in id order.
    pub fn datasets(&self) -> Vec<Node> {
        self.store.query(NodeLabel::DatalakeDataset, |_| true)
    }

    pub(crate) fn kind_node(&self, label: NodeLabel, name: &str) -> Result<Node> {
        let key = PropValue::from(name);
        self.store
            .read(|g| g.find_by_prop(label, "name", &key).cloned())
            .ok_or_else(|| Error::NotFound(format!("{label} `{name}`")))
    }
}

fn seed_kind(tx: &mut WriteTx<'_>, label: NodeLabel, name: &str, threshold: f64, fresh: Props) -> Result<()> {
    let key = PropValue::from(name);
    match tx.find_by_prop(label, "name", &key) {
        Some(node) if node.decimal("threshold") == Some(threshold) => Ok(()),
        Some(node) => {
            let id = node.id;
            tx.set_props(id, props! { "threshold" => threshold })
        }
        None => {
            let mut props = fresh;
            props.insert("threshold".into(), threshold.into());
            tx.put_node(label, props).map(|_| ())
        }
    }
}

/// Parses a node id given on the command line or in a URL.
pub fn parse_id(text: &str) -> Result<NodeId> {
    text.parse().map_err(|_| Error::NotFound(format!("node `{text}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeding_is_idempotent_and_tracks_config() {
        let dir = tempfile::tempdir().unwrap();
        let config = Config::rooted_at(dir.path());
        let seq = {
            let lake = Lake::open(config.clone()).unwrap();
            let stats = lake.store().stats();
            assert_eq!(stats.node_count(NodeLabel::RelationshipAtt), 4);
            assert_eq!(stats.node_count(NodeLabel::RelationshipDS), 4);
            assert_eq!(stats.node_count(NodeLabel::SensitivityLevel), 4);
            lake.store().last_seq()
        };
        {
            let lake = Lake::open(config.clone()).unwrap();
            assert_eq!(lake.store().last_seq(), seq);
        }
        let mut changed = config;
        changed.thresholds.dataset.similarity = 0.6;
        let lake = Lake::open(changed).unwrap();
        assert_eq!(lake.store().last_seq(), seq + 1);
        assert_eq!(lake.kind_node(NodeLabel::RelationshipDS, "similarity").unwrap().decimal("threshold"), Some(0.6));
    }

    #[test]
    fn unknown_users_cannot_act() {
        let lake = Lake::in_memory(Config::default()).unwrap();
        let err = lake.store().write(|tx| lake.ensure_user(tx, "mallory")).unwrap_err();
        assert!(matches!(err, Error::Unauthorized(_)));
        let a = lake.store().write(|tx| lake.ensure_user(tx, "admin")).unwrap();
        let b = lake.store().write(|tx| lake.ensure_user(tx, "admin")).unwrap();
        assert_eq!(a, b);
    }
}
