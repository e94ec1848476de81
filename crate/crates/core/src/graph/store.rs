//! Embedded property-graph store persisted as an append-only event log plus
//! an optional snapshot.
//!
//! Every mutation is validated, appended to `events.log` and flushed before it
//! is applied in memory, so a reopened store replays exactly the acknowledged
//! mutations. Writers are serialized through one lock; readers share a
//! consistent view of the last completed event.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::ops::Deref;
use std::path::{Path, PathBuf};

use chrono::Utc;
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use super::event::{to_canonical_line, GraphEvent, Mutation};
use super::model::validate_props;
use super::registry::{self, EDGE_REGISTRY, REGISTRY_VERSION};
use super::{Direction, Edge, EdgeId, Node, NodeId, NodeLabel, PropValue, Props};
use crate::error::{Error, Result};

pub const EVENT_LOG_FILE: &str = "events.log";
pub const SNAPSHOT_FILE: &str = "snapshot.jsonl";
const LOCK_FILE: &str = "LOCK";
const SNAPSHOT_FORMAT: &str = "lakemeta-graph";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: BTreeMap<String, u64>,
    pub edges: BTreeMap<String, u64>,
    pub total_nodes: u64,
    pub total_edges: u64,
}

impl GraphStats {
    pub fn node_count(&self, label: NodeLabel) -> u64 {
        self.nodes.get(label.as_str()).copied().unwrap_or(0)
    }

    pub fn edge_count(&self, label: &str) -> u64 {
        self.edges.get(label).copied().unwrap_or(0)
    }

    /// Numeric plus nominal attributes.
    pub fn attribute_count(&self) -> u64 {
        self.node_count(NodeLabel::NumericAttribute) + self.node_count(NodeLabel::NominalAttribute)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum SnapshotRecord {
    Header {
        format: String,
        #[serde(rename = "lastSeq")]
        last_seq: u64,
        #[serde(rename = "registryVersion")]
        registry_version: u32,
    },
    Node(Node),
    Edge(Edge),
}

/// In-memory graph state with label and adjacency indexes.
#[derive(Debug)]
pub struct Graph {
    nodes: BTreeMap<NodeId, Node>,
    edges: BTreeMap<EdgeId, Edge>,
    by_label: BTreeMap<NodeLabel, BTreeSet<NodeId>>,
    outgoing: HashMap<NodeId, Vec<EdgeId>>,
    incoming: HashMap<NodeId, Vec<EdgeId>>,
    last_seq: u64,
    next_node: u64,
    next_edge: u64,
}

impl Default for Graph {
    fn default() -> Self {
        Graph {
            nodes: BTreeMap::new(),
            edges: BTreeMap::new(),
            by_label: BTreeMap::new(),
            outgoing: HashMap::new(),
            incoming: HashMap::new(),
            last_seq: 0,
            next_node: 1,
            next_edge: 1,
        }
    }
}

impl Graph {
    pub fn last_seq(&self) -> u64 {
        self.last_seq
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(&id)
    }

    pub fn require(&self, id: NodeId) -> Result<&Node> {
        self.nodes.get(&id).ok_or(Error::MissingNode(id))
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Edge> {
        self.edges.get(&id)
    }

    /// All nodes carrying `label`, in id order.
    pub fn nodes_with_label(&self, label: NodeLabel) -> impl Iterator<Item = &Node> + '_ {
        self.by_label
            .get(&label)
            .into_iter()
            .flatten()
            .filter_map(move |id| self.nodes.get(id))
    }

    pub fn query(&self, label: NodeLabel, predicate: impl Fn(&Node) -> bool) -> Vec<&Node> {
        self.nodes_with_label(label).filter(|n| predicate(n)).collect()
    }

    pub fn find_by_prop(&self, label: NodeLabel, key: &str, value: &PropValue) -> Option<&Node> {
        self.nodes_with_label(label).find(|n| n.get(key) == Some(value))
    }

    pub fn edges_from(&self, id: NodeId, label: &str) -> Vec<&Edge> {
        self.adjacent(&self.outgoing, id, label)
    }

    pub fn edges_to(&self, id: NodeId, label: &str) -> Vec<&Edge> {
        self.adjacent(&self.incoming, id, label)
    }

    fn adjacent(&self, index: &HashMap<NodeId, Vec<EdgeId>>, id: NodeId, label: &str) -> Vec<&Edge> {
        index
            .get(&id)
            .into_iter()
            .flatten()
            .filter_map(|eid| self.edges.get(eid))
            .filter(|e| e.label == label)
            .collect()
    }

    /// Nodes reachable from `id` over one `edge_label` edge, in id order.
    pub fn neighbors(&self, id: NodeId, edge_label: &str, direction: Direction) -> Result<Vec<&Node>> {
        registry::signature(edge_label)?;
        self.require(id)?;
        let mut ids = BTreeSet::new();
        if matches!(direction, Direction::Out | Direction::Both) {
            ids.extend(self.edges_from(id, edge_label).iter().map(|e| e.to));
        }
        if matches!(direction, Direction::In | Direction::Both) {
            ids.extend(self.edges_to(id, edge_label).iter().map(|e| e.from));
        }
        Ok(ids.into_iter().filter_map(|n| self.nodes.get(&n)).collect())
    }

    /// First neighbor, for associations that are one-to-one by construction.
    pub fn neighbor(&self, id: NodeId, edge_label: &str, direction: Direction) -> Result<Option<&Node>> {
        Ok(self.neighbors(id, edge_label, direction)?.into_iter().next())
    }

    pub fn has_edge(&self, label: &str, from: NodeId, to: NodeId) -> bool {
        self.edges_from(from, label).iter().any(|e| e.to == to)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn stats(&self) -> GraphStats {
        let mut nodes: BTreeMap<String, u64> =
            NodeLabel::ALL.iter().map(|l| (l.as_str().to_string(), 0)).collect();
        for (label, ids) in &self.by_label {
            nodes.insert(label.as_str().to_string(), ids.len() as u64);
        }
        let mut edges: BTreeMap<String, u64> =
            EDGE_REGISTRY.iter().map(|s| (s.label.to_string(), 0)).collect();
        for edge in self.edges.values() {
            *edges.entry(edge.label.clone()).or_default() += 1;
        }
        GraphStats {
            nodes,
            edges,
            total_nodes: self.nodes.len() as u64,
            total_edges: self.edges.len() as u64,
        }
    }

    /// Full dump in the canonical encoding: a header line, then nodes and
    /// edges in id order. Equal graphs produce equal bytes.
    pub fn canonical_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        let header = SnapshotRecord::Header {
            format: SNAPSHOT_FORMAT.to_string(),
            last_seq: self.last_seq,
            registry_version: REGISTRY_VERSION,
        };
        writeln!(out, "{}", to_canonical_line(&header)?)?;
        for node in self.nodes.values() {
            writeln!(out, "{}", to_canonical_line(&SnapshotRecord::Node(node.clone()))?)?;
        }
        for edge in self.edges.values() {
            writeln!(out, "{}", to_canonical_line(&SnapshotRecord::Edge(edge.clone()))?)?;
        }
        Ok(out)
    }

    /// Full scan for referential-integrity and registry violations.
    pub fn integrity_violations(&self) -> Vec<String> {
        let mut problems = Vec::new();
        for edge in self.edges.values() {
            match (self.nodes.get(&edge.from), self.nodes.get(&edge.to)) {
                (Some(from), Some(to)) => {
                    if let Err(e) = registry::check_endpoints(&edge.label, from.label, to.label) {
                        problems.push(format!("{}: {e}", edge.id));
                    }
                }
                _ => problems.push(format!("{}: dangling endpoint", edge.id)),
            }
        }
        problems
    }

    fn validate(&self, mutation: &Mutation) -> Result<()> {
        match mutation {
            Mutation::CreateNode(node) => {
                if self.nodes.contains_key(&node.id) {
                    return Err(Error::Validation(format!("node {} already exists", node.id)));
                }
                validate_props(&node.props)
            }
            Mutation::CreateEdge(edge) => {
                if self.edges.contains_key(&edge.id) {
                    return Err(Error::Validation(format!("edge {} already exists", edge.id)));
                }
                let sig = registry::signature(&edge.label)?;
                let from = self.nodes.get(&edge.from).ok_or(Error::DanglingEndpoint(edge.from))?;
                let to = self.nodes.get(&edge.to).ok_or(Error::DanglingEndpoint(edge.to))?;
                if sig.from.contains(&from.label) && sig.to.contains(&to.label) {
                    Ok(())
                } else {
                    Err(Error::EndpointMismatch { label: edge.label.clone(), from: from.label, to: to.label })
                }
            }
            Mutation::SetProps { id, props } => {
                self.require(*id)?;
                validate_props(props)
            }
        }
    }

    fn apply(&mut self, mutation: Mutation) {
        match mutation {
            Mutation::CreateNode(node) => {
                self.next_node = self.next_node.max(node.id.0 + 1);
                self.by_label.entry(node.label).or_default().insert(node.id);
                self.nodes.insert(node.id, node);
            }
            Mutation::CreateEdge(edge) => {
                self.next_edge = self.next_edge.max(edge.id.0 + 1);
                self.outgoing.entry(edge.from).or_default().push(edge.id);
                self.incoming.entry(edge.to).or_default().push(edge.id);
                self.edges.insert(edge.id, edge);
            }
            Mutation::SetProps { id, props } => {
                if let Some(node) = self.nodes.get_mut(&id) {
                    node.props.extend(props);
                }
            }
        }
    }
}

struct Inner {
    graph: Graph,
    log: Option<BufWriter<File>>,
}

/// Handle to a graph store. Shareable across threads.
pub struct GraphStore {
    inner: RwLock<Inner>,
    dir: Option<PathBuf>,
    writable: bool,
    _lease: Option<File>,
}

impl std::fmt::Debug for GraphStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GraphStore").field("dir", &self.dir).field("writable", &self.writable).finish()
    }
}

/// Serialized writer access handed out by [`GraphStore::write`]. Reads
/// through the deref see every mutation made earlier in the same call.
pub struct WriteTx<'a> {
    graph: &'a mut Graph,
    log: Option<&'a mut BufWriter<File>>,
}

impl Deref for WriteTx<'_> {
    type Target = Graph;

    fn deref(&self) -> &Graph {
        self.graph
    }
}

impl WriteTx<'_> {
    fn commit(&mut self, mutation: Mutation) -> Result<()> {
        self.graph.validate(&mutation)?;
        let event = GraphEvent {
            seq: self.graph.last_seq + 1,
            at: crate::clock::truncate(Utc::now()),
            mutation,
        };
        if let Some(log) = self.log.as_deref_mut() {
            let mut line = to_canonical_line(&event)?;
            line.push('\n');
            log.write_all(line.as_bytes())?;
            log.flush()?;
        }
        self.graph.last_seq = event.seq;
        self.graph.apply(event.mutation);
        Ok(())
    }

    pub fn put_node(&mut self, label: NodeLabel, props: Props) -> Result<NodeId> {
        let id = NodeId(self.graph.next_node);
        self.commit(Mutation::CreateNode(Node { id, label, props }))?;
        Ok(id)
    }

    pub fn put_edge(&mut self, label: &str, from: NodeId, to: NodeId) -> Result<EdgeId> {
        let id = EdgeId(self.graph.next_edge);
        self.commit(Mutation::CreateEdge(Edge { id, label: label.to_string(), from, to }))?;
        Ok(id)
    }

    /// Creates the edge unless an identical one already exists.
    pub fn ensure_edge(&mut self, label: &str, from: NodeId, to: NodeId) -> Result<Option<EdgeId>> {
        if self.graph.has_edge(label, from, to) {
            return Ok(None);
        }
        self.put_edge(label, from, to).map(Some)
    }

    pub fn set_props(&mut self, id: NodeId, props: Props) -> Result<()> {
        self.commit(Mutation::SetProps { id, props })
    }
}

impl GraphStore {
    /// Volatile store with no backing files.
    pub fn in_memory() -> Self {
        GraphStore {
            inner: RwLock::new(Inner { graph: Graph::default(), log: None }),
            dir: None,
            writable: true,
            _lease: None,
        }
    }

    /// Opens (or creates) a store directory for writing. Takes an exclusive
    /// lease; a second writer on the same directory fails with
    /// [`Error::StoreLocked`].
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let lease = OpenOptions::new().create(true).truncate(false).write(true).open(dir.join(LOCK_FILE))?;
        if lease.try_lock().is_err() {
            return Err(Error::StoreLocked(dir));
        }
        let graph = load(&dir, true)?;
        let log = OpenOptions::new().create(true).append(true).open(dir.join(EVENT_LOG_FILE))?;
        Ok(GraphStore {
            inner: RwLock::new(Inner { graph, log: Some(BufWriter::new(log)) }),
            dir: Some(dir),
            writable: true,
            _lease: Some(lease),
        })
    }

    /// Replays a store directory without taking the writer lease. A missing
    /// directory yields an empty graph.
    pub fn open_read_only(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let graph = if dir.exists() { load(&dir, false)? } else { Graph::default() };
        Ok(GraphStore {
            inner: RwLock::new(Inner { graph, log: None }),
            dir: Some(dir),
            writable: false,
            _lease: None,
        })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn is_writable(&self) -> bool {
        self.writable
    }

    pub fn read<R>(&self, f: impl FnOnce(&Graph) -> R) -> R {
        f(&self.inner.read().graph)
    }

    /// Runs `f` with exclusive writer access. Mutations made before an error
    /// stay committed; there is no rollback.
    pub fn write<R>(&self, f: impl FnOnce(&mut WriteTx<'_>) -> Result<R>) -> Result<R> {
        if !self.writable {
            return Err(Error::ReadOnly);
        }
        let mut guard = self.inner.write();
        let Inner { graph, log } = &mut *guard;
        let mut tx = WriteTx { graph, log: log.as_mut() };
        f(&mut tx)
    }

    pub fn put_node(&self, label: NodeLabel, props: Props) -> Result<NodeId> {
        self.write(|tx| tx.put_node(label, props))
    }

    pub fn put_edge(&self, label: &str, from: NodeId, to: NodeId) -> Result<EdgeId> {
        self.write(|tx| tx.put_edge(label, from, to))
    }

    pub fn set_props(&self, id: NodeId, props: Props) -> Result<()> {
        self.write(|tx| tx.set_props(id, props))
    }

    pub fn node(&self, id: NodeId) -> Option<Node> {
        self.read(|g| g.node(id).cloned())
    }

    pub fn query(&self, label: NodeLabel, predicate: impl Fn(&Node) -> bool) -> Vec<Node> {
        self.read(|g| g.query(label, predicate).into_iter().cloned().collect())
    }

    pub fn neighbors(&self, id: NodeId, edge_label: &str, direction: Direction) -> Result<Vec<Node>> {
        self.read(|g| Ok(g.neighbors(id, edge_label, direction)?.into_iter().cloned().collect()))
    }

    pub fn stats(&self) -> GraphStats {
        self.read(Graph::stats)
    }

    pub fn last_seq(&self) -> u64 {
        self.read(Graph::last_seq)
    }

    pub fn canonical_bytes(&self) -> Result<Vec<u8>> {
        self.read(Graph::canonical_bytes)
    }

    /// Writes the full graph to `snapshot.jsonl` in the store directory.
    /// Reopening loads the snapshot and replays only later events.
    pub fn snapshot(&self) -> Result<PathBuf> {
        let dir = self.dir.as_ref().ok_or_else(|| Error::Validation("in-memory store has no directory".into()))?;
        if !self.writable {
            return Err(Error::ReadOnly);
        }
        let path = dir.join(SNAPSHOT_FILE);
        self.export_snapshot(&path)?;
        Ok(path)
    }

    /// Writes the canonical dump to an arbitrary path, atomically.
    pub fn export_snapshot(&self, path: &Path) -> Result<()> {
        let bytes = self.canonical_bytes()?;
        let tmp = path.with_extension("tmp");
        {
            let mut file = File::create(&tmp)?;
            file.write_all(&bytes)?;
            file.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }
}

fn load(dir: &Path, writable: bool) -> Result<Graph> {
    let mut graph = Graph::default();
    let snapshot_path = dir.join(SNAPSHOT_FILE);
    if snapshot_path.exists() {
        load_snapshot(&snapshot_path, &mut graph)?;
    }
    let log_path = dir.join(EVENT_LOG_FILE);
    if log_path.exists() {
        replay_log(&log_path, &mut graph, writable)?;
    }
    Ok(graph)
}

fn load_snapshot(path: &Path, graph: &mut Graph) -> Result<()> {
    let corrupt = |reason: String| Error::CorruptSnapshot { path: path.to_path_buf(), reason };
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| corrupt("empty snapshot".into()))?;
    match serde_json::from_str(header).map_err(|e| corrupt(e.to_string()))? {
        SnapshotRecord::Header { format, last_seq, registry_version } => {
            if format != SNAPSHOT_FORMAT {
                return Err(corrupt(format!("unexpected format `{format}`")));
            }
            if registry_version != REGISTRY_VERSION {
                return Err(corrupt(format!(
                    "registry version {registry_version}, expected {REGISTRY_VERSION}"
                )));
            }
            graph.last_seq = last_seq;
        }
        _ => return Err(corrupt("missing header".into())),
    }
    for (idx, line) in lines.enumerate() {
        let record: SnapshotRecord =
            serde_json::from_str(line).map_err(|e| corrupt(format!("line {}: {e}", idx + 2)))?;
        let mutation = match record {
            SnapshotRecord::Node(node) => Mutation::CreateNode(node),
            SnapshotRecord::Edge(edge) => Mutation::CreateEdge(edge),
            SnapshotRecord::Header { .. } => return Err(corrupt(format!("line {}: repeated header", idx + 2))),
        };
        graph.validate(&mutation).map_err(|e| corrupt(format!("line {}: {e}", idx + 2)))?;
        graph.apply(mutation);
    }
    Ok(())
}

fn replay_log(path: &Path, graph: &mut Graph, writable: bool) -> Result<()> {
    let bytes = fs::read(path)?;
    let complete_len = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    if complete_len < bytes.len() {
        tracing::warn!(
            path = %path.display(),
            dropped_bytes = bytes.len() - complete_len,
            "event log ends with a partial line; truncating"
        );
        if writable {
            OpenOptions::new().write(true).open(path)?.set_len(complete_len as u64)?;
        }
    }
    let text = std::str::from_utf8(&bytes[..complete_len]).map_err(|e| Error::CorruptLog {
        seq: graph.last_seq + 1,
        line: 0,
        reason: e.to_string(),
    })?;

    let snapshot_seq = graph.last_seq;
    let mut previous = 0u64;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let event: GraphEvent = serde_json::from_str(line).map_err(|e| Error::CorruptLog {
            seq: claimed_seq(line).unwrap_or(previous + 1),
            line: line_no,
            reason: e.to_string(),
        })?;
        if event.seq <= previous {
            return Err(Error::CorruptLog {
                seq: event.seq,
                line: line_no,
                reason: format!("sequence not increasing after {previous}"),
            });
        }
        previous = event.seq;
        if event.seq <= snapshot_seq {
            continue;
        }
        graph
            .validate(&event.mutation)
            .map_err(|e| Error::CorruptLog { seq: event.seq, line: line_no, reason: e.to_string() })?;
        graph.last_seq = event.seq;
        graph.apply(event.mutation);
    }
    Ok(())
}

/// Best-effort recovery of the `seq` field from an unparseable line.
fn claimed_seq(line: &str) -> Option<u64> {
    let value: serde_json::Value = serde_json::from_str(line).ok()?;
    value.get("seq")?.as_u64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::registry::*;
    use crate::props;

    #[test]
    fn put_node_is_counted_and_queryable() {
        let store = GraphStore::in_memory();
        assert_eq!(store.stats().node_count(NodeLabel::Tag), 0);
        let id = store.put_node(NodeLabel::Tag, props!("name" => "cancer")).unwrap();
        assert_eq!(store.stats().node_count(NodeLabel::Tag), 1);
        let found = store.query(NodeLabel::Tag, |n| n.text("name") == Some("cancer"));
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].id, id);
    }

    #[test]
    fn empty_store_has_zero_stats_and_empty_queries() {
        let store = GraphStore::in_memory();
        let stats = store.stats();
        assert_eq!(stats.total_nodes, 0);
        assert!(stats.nodes.values().all(|&c| c == 0));
        assert!(stats.edges.values().all(|&c| c == 0));
        assert_eq!(stats.nodes.len(), NodeLabel::ALL.len());
        assert!(store.query(NodeLabel::DatalakeDataset, |_| true).is_empty());
    }

    #[test]
    fn edges_are_checked_against_registry() {
        let store = GraphStore::in_memory();
        let ds = store.put_node(NodeLabel::DatalakeDataset, props!("name" => "d")).unwrap();
        let tag = store.put_node(NodeLabel::Tag, props!("name" => "t")).unwrap();
        let ingest = store.put_node(NodeLabel::Ingest, props!()).unwrap();
        store.put_edge(DATASET_TAG, ds, tag).unwrap();
        let tags = store.neighbors(ds, DATASET_TAG, Direction::Out).unwrap();
        assert_eq!(tags[0].id, tag);
        assert_eq!(store.neighbors(tag, DATASET_TAG, Direction::In).unwrap()[0].id, ds);

        assert!(matches!(store.put_edge(DATASET_TAG, ds, ingest), Err(Error::EndpointMismatch { .. })));
        assert!(matches!(store.put_edge(DATASET_TAG, ds, NodeId(999)), Err(Error::DanglingEndpoint(_))));
        assert!(matches!(store.put_edge("Dataset-Anything", ds, tag), Err(Error::UnknownEdgeLabel(_))));
        assert_eq!(store.stats().total_edges, 1);
    }

    #[test]
    fn stream_origin_edge_links_sources() {
        let store = GraphStore::in_memory();
        let src = store.put_node(NodeLabel::DatasetSource, props!("name" => "sensor")).unwrap();
        let origin = store.put_node(NodeLabel::DatasetSource, props!("name" => "gateway")).unwrap();
        store.put_edge(SOURCE_OF_STREAM, src, origin).unwrap();
        let reached = store.neighbors(src, SOURCE_OF_STREAM, Direction::Out).unwrap();
        assert_eq!(reached.len(), 1);
        assert_eq!(reached[0].text("name"), Some("gateway"));
    }

    #[test]
    fn set_props_merges_and_overwrites() {
        let store = GraphStore::in_memory();
        let ds = store.put_node(NodeLabel::DatalakeDataset, props!("name" => "d")).unwrap();
        store.set_props(ds, props!("description" => "first")).unwrap();
        store.set_props(ds, props!("description" => "second", "format" => "image/jpeg")).unwrap();
        let node = store.node(ds).unwrap();
        assert_eq!(node.text("description"), Some("second"));
        assert_eq!(node.text("format"), Some("image/jpeg"));
        assert_eq!(node.text("name"), Some("d"));
        assert!(matches!(store.set_props(NodeId(42), props!("x" => 1i64)), Err(Error::MissingNode(_))));
    }

    #[test]
    fn reopen_replays_events() {
        let dir = tempfile::tempdir().unwrap();
        let before;
        {
            let store = GraphStore::open(dir.path()).unwrap();
            for i in 0..10 {
                store.put_node(NodeLabel::Tag, props!("name" => format!("t{i}"))).unwrap();
            }
            assert_eq!(store.last_seq(), 10);
            before = store.canonical_bytes().unwrap();
        }
        let store = GraphStore::open(dir.path()).unwrap();
        assert_eq!(store.stats().node_count(NodeLabel::Tag), 10);
        assert_eq!(store.canonical_bytes().unwrap(), before);
        // ids keep increasing after replay
        let id = store.put_node(NodeLabel::Tag, props!("name" => "t10")).unwrap();
        assert_eq!(id, NodeId(11));
    }

    #[test]
    fn second_writer_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let _first = GraphStore::open(dir.path()).unwrap();
        assert!(matches!(GraphStore::open(dir.path()), Err(Error::StoreLocked(_))));
        let reader = GraphStore::open_read_only(dir.path()).unwrap();
        assert!(matches!(reader.put_node(NodeLabel::Tag, props!()), Err(Error::ReadOnly)));
    }

    #[test]
    fn corrupt_middle_line_reports_its_seq() {
        let dir = tempfile::tempdir().unwrap();
        {
            let store = GraphStore::open(dir.path()).unwrap();
            for i in 0..5 {
                store.put_node(NodeLabel::Tag, props!("name" => format!("t{i}"))).unwrap();
            }
        }
        let path = dir.path().join(EVENT_LOG_FILE);
        let text = fs::read_to_string(&path).unwrap();
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        lines[2] = lines[2].replace("\"payload\":{", "\"payload\":{{");
        fs::write(&path, lines.join("\n") + "\n").unwrap();
        match GraphStore::open(dir.path()) {
            Err(Error::CorruptLog { seq, line, .. }) => {
                assert_eq!(seq, 3);
                assert_eq!(line, 3);
            }
            other => panic!("expected corrupt log error, got {other:?}"),
        }
    }

    #[test]
    fn partial_trailing_line_is_truncated() {
        let dir = tempfile::tempdir().unwrap();
        {
            let store = GraphStore::open(dir.path()).unwrap();
            store.put_node(NodeLabel::Tag, props!("name" => "a")).unwrap();
            store.put_node(NodeLabel::Tag, props!("name" => "b")).unwrap();
        }
        let path = dir.path().join(EVENT_LOG_FILE);
        let mut file = OpenOptions::new().append(true).open(&path).unwrap();
        file.write_all(br#"{"at":"2024-01-01T00:00:00Z","kind":"create-node","pay"#).unwrap();
        drop(file);
        let store = GraphStore::open(dir.path()).unwrap();
        assert_eq!(store.stats().node_count(NodeLabel::Tag), 2);
        assert!(fs::read_to_string(&path).unwrap().ends_with("}\n"));
        store.put_node(NodeLabel::Tag, props!("name" => "c")).unwrap();
        drop(store);
        assert_eq!(GraphStore::open(dir.path()).unwrap().stats().node_count(NodeLabel::Tag), 3);
    }

    #[test]
    fn snapshot_plus_tail_events() {
        let dir = tempfile::tempdir().unwrap();
        {
            let store = GraphStore::open(dir.path()).unwrap();
            let ds = store.put_node(NodeLabel::DatalakeDataset, props!("name" => "d")).unwrap();
            let tag = store.put_node(NodeLabel::Tag, props!("name" => "t")).unwrap();
            store.put_edge(DATASET_TAG, ds, tag).unwrap();
            store.snapshot().unwrap();
            store.put_node(NodeLabel::Tag, props!("name" => "u")).unwrap();
            store.set_props(ds, props!("description" => "after")).unwrap();
            store.put_node(NodeLabel::Tag, props!("name" => "v")).unwrap();
        }
        let store = GraphStore::open(dir.path()).unwrap();
        assert_eq!(store.last_seq(), 6);
        assert_eq!(store.stats().node_count(NodeLabel::Tag), 3);
        assert_eq!(store.stats().edge_count(DATASET_TAG), 1);
        let ds = store.query(NodeLabel::DatalakeDataset, |_| true).remove(0);
        assert_eq!(ds.text("description"), Some("after"));

        // the snapshot alone reproduces its own prefix of the history
        let snap = fs::read_to_string(dir.path().join(SNAPSHOT_FILE)).unwrap();
        assert!(snap.starts_with(r#"{"format":"lakemeta-graph","lastSeq":3,"record":"header","registryVersion":1}"#));
    }

    #[test]
    fn integrity_scan_is_clean_after_mutations() {
        let store = GraphStore::in_memory();
        let ds = store.put_node(NodeLabel::DatalakeDataset, props!()).unwrap();
        let e = store.put_node(NodeLabel::EntityClass, props!()).unwrap();
        let a = store.put_node(NodeLabel::NumericAttribute, props!()).unwrap();
        store.put_edge(DATASET_ENTITY, ds, e).unwrap();
        store.put_edge(ENTITY_ATTRIBUTE, e, a).unwrap();
        assert!(store.read(|g| g.integrity_violations()).is_empty());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

        #[test]
        fn decimals_survive_replay_bit_for_bit(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL) {
            let dir = tempfile::tempdir().unwrap();
            {
                let store = GraphStore::open(dir.path()).unwrap();
                store.put_node(NodeLabel::VeracityIndex, props!("composite" => x)).unwrap();
            }
            let store = GraphStore::open_read_only(dir.path()).unwrap();
            let node = store.query(NodeLabel::VeracityIndex, |_| true).remove(0);
            proptest::prop_assert_eq!(node.decimal("composite").map(f64::to_bits), Some(x.to_bits()));
        }
    }
}
