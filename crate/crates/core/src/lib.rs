//! Community detection across two partially aligned networks.
//!
//! Two layers are combined by aggregation, linking or a relaxed random
//! walk, partitioned by minimizing the two-level map equation, and scored
//! against a reference with variation of information, Jaccard matrices and
//! oracle accuracy.

pub mod assignment;
pub mod error;
pub mod experiments;
pub mod flow;
pub mod graph;
pub mod mapeq;
pub mod metrics;
pub mod multilayer;
pub mod seedsel;

pub use assignment::{CommunityAssignment, Element, ElementSet, Layer, LayeredAssignment};
pub use error::{Error, Result};
pub use graph::{Graph, GraphBuilder, VertexId, VertexKind};
