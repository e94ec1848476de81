//! Typed property graph holding every class and association of the metadata
//! model.

pub mod event;
mod model;
pub mod registry;
mod store;

pub use event::{GraphEvent, Mutation};
pub use model::{Direction, Edge, EdgeId, Node, NodeId, NodeLabel, PropValue, Props};
pub use store::{Graph, GraphStats, GraphStore, WriteTx, EVENT_LOG_FILE, SNAPSHOT_FILE};
