//! Augmented trees over self-similar sets and point clouds, natural reversible
//! random walks on them, and the potential theory those walks induce.

pub mod energy;
pub mod error;
pub mod hypergraph;
pub mod linalg;
pub mod model;
pub mod network;
pub mod partition;
pub mod potential;
pub mod resistance;

pub mod cli;

pub use error::{Error, Result};
pub use hypergraph::AugmentedTree;
pub use model::ModelSpec;
pub use network::Network;
pub use partition::IndexTree;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
