//! Surrogate temporal networks from egocentric temporal neighborhoods.
//!
//! The pipeline mines neighborhood signatures from a discrete-time contact
//! network ([`etn`]), fits per-bucket prefix → extension distributions
//! ([`model`]), grows new networks layer by layer ([`gen`]) and scores them
//! against the original with topological ([`metrics`]) and dynamical
//! ([`dynamics`]) probes.

pub mod bucket;
pub mod dynamics;
pub mod etn;
pub mod gen;
pub mod metrics;
pub mod model;
pub mod par;
pub mod rng;
pub mod synthetic;
pub mod tempgraph;

pub use bucket::{BucketKey, Bucketing, Periodicity};
pub use etn::{extract_etn, mine_counts, Etn, EtnCounts, EtnPrefix, EtnSignature};
pub use gen::{expansion_alpha, generate, GenConfig, Generated};
pub use model::{fit, LocalModel, ModelMeta};
pub use tempgraph::{aggregate, hour_slices, parse_edge_list, write_edge_list, AggregatedGraph, Snapshot, TemporalGraph};
