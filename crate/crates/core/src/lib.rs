//! Average Gromov hyperbolicity of finite weighted similarity spaces and
//! approximate tree embeddings built from a vertex-weighted regularity
//! partition, clique repair and a recursive threshold hierarchy.

pub mod cliques;
pub mod error;
pub mod exact;
pub mod fixtures;
pub mod graph;
pub mod hyperbolicity;
pub mod io;
pub mod linalg;
pub mod regularity;
pub mod space;
pub mod spinglass;
pub mod tree;
pub mod treebuild;

pub use error::{Error, ErrorFamily, Result};
pub use graph::WeightedGraph;
pub use space::{MetricSpace, SimilaritySpace};
pub use tree::CompatibleTree;
