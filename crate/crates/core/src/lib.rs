//! Spring-electrical graph embedding.
//!
//! Nodes live in an `n`-dimensional feature space. Connected nodes attract
//! like springs and every pair of nodes repels like equal charges; training
//! moves all nodes synchronously until the total squared net force (the
//! energy) stabilizes. The crate also provides the evaluation tooling used
//! around the embedding: label prediction with Micro/Macro-F1, layout
//! quality measures, and a PCA projection for plotting.

pub mod embedding;
pub mod error;
pub mod eval;
pub mod force;
pub mod graph;
pub mod layout;
pub mod pca;
pub mod trainer;

pub use embedding::{parse_embedding, EmbeddingMatrix, NamedEmbedding};
pub use error::{Error, Result};
pub use force::{ForceParams, ForceVector};
pub use graph::{grid_graph, parse_edge_list, parse_labels, Graph, LabelMap, NodeId};
pub use trainer::{train, SpeedSchedule, StopReason, TrainConfig, TrainState};
