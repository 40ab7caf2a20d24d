//! Mining maximal connected complete subgraphs (MCCSs) from the K-partite
//! graph of a multi-relational database, and ranking them by how surprising
//! they are under a maximum-entropy model of the node degrees.
//!
//! The pipeline: [`schema`] ingests CSV tables, [`graph`] builds the K-partite
//! graph, [`miner`] enumerates patterns, [`maxent`] fits the background model
//! and [`score`] ranks. [`synth`] plants patterns and generates random
//! graphs; [`cli`] wires it all into the `mccs` binary.

pub mod cli;
pub mod error;
pub mod graph;
pub mod maxent;
pub mod miner;
pub mod schema;
pub mod score;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{build_graph, KPartiteGraph, NodeRef};
pub use maxent::{FitOptions, MaxEntModel};
pub use miner::{mine, MineOptions, Pattern};
pub use schema::{ingest, parse_schema, MultiRelationalDatabase, SchemaDescriptor};
pub use score::{rank, RankOptions, RankedPattern};

