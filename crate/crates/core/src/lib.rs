pub mod catalog;
pub mod cli;
pub mod clock;
pub mod config;
pub mod enrichment;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod hashing;
pub mod ingestion;
pub mod lake;
pub mod linker;
pub mod measures;
pub mod profiler;

pub use config::Config;
pub use error::{Error, Result};
pub use lake::Lake;
