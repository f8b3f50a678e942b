//! Reduced-rank adaptive filtering with Krylov subspaces and adaptive
//! projected subgradient updates.

pub mod error;
pub mod experiment;
pub mod filters;
pub mod linalg;
pub mod scenarios;
pub mod stats;
pub mod tolerances;
pub mod verify;

pub use error::{Error, Result};
pub use filters::{AdaptiveFilter, StepOutput};
pub use linalg::{BasisMatrix, DenseVector, HalfSpace, SymMatrix};
pub use stats::{EstimatorMode, StatEstimates};
