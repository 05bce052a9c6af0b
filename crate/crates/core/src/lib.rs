//! Coengagement networks: projection of directed engagement data onto the
//! accounts being engaged, under tunable audience-size (`n`) and
//! engagement-frequency (`s`) thresholds, with clustering, parameter sweeps
//! and structural diagnostics.

pub mod analysis;
pub mod clustering;
pub mod error;
pub mod io;
pub mod model;
pub mod projection;
pub mod summary;
pub mod sweep;
pub mod synth;

pub use clustering::{label_clusters, louvain, modularity, ClusterAssignment, LandmarkSet};
pub use error::{Error, Result};
pub use model::{
    intern_nodes, CoEdge, CoengagementGraph, EngagementGraph, EngagementGraphBuilder, Interner,
    NodeId, ProjectionParams,
};
pub use projection::{project, qualifying_targets, ProjectOptions, Projection, ProjectionReport};
pub use summary::Summary;
pub use sweep::{sweep, ExistenceMap, Salience, SweepOptions};
