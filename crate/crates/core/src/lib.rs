//! Critical-node identification in complex networks.
//!
//! The pipeline labels nodes by SIR simulation, trains a GraphSAGE +
//! Transformer influence regressor on synthetic networks, adapts it to a real
//! network with K-Means/uncertainty active learning, and turns the resulting
//! ranking into influence-maximization seed sets under a diversity
//! constraint. Rankings are scored with Kendall's tau and top-k Jaccard
//! against Monte Carlo oracles.

pub mod active;
pub mod autodiff;
pub mod error;
pub mod features;
pub mod fixtures;
pub mod generators;
pub mod graph;
pub mod metrics;
pub mod model;
pub mod propagation;
pub mod rng;
pub mod seeding;
pub mod table;

pub use error::{Error, Result};
pub use graph::{DegreeStats, Graph};
