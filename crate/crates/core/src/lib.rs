//! Linear maps between face-embedding spaces and cross-system verification.
//!
//! Given embeddings of the same images from two systems, [`linalg::ridge_fit`]
//! learns a matrix carrying one space into the other, and
//! [`protocol::evaluate`] measures fold-based verification accuracy of the
//! mapped comparison. [`experiments`] sweeps the number of corresponding pairs
//! and the rank of the map; [`synthetic`] generates worlds with known linear
//! structure for testing.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod protocol;
pub mod seed;
pub mod synthetic;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    EmbeddingSet, EntityId, EvalConfig, EvaluationReport, Fold, FoldResult, Label, LinearMap,
    MappingMode, Pair, PairProtocol, PairSubsample, SyntheticSystem, SyntheticWorld,
};
