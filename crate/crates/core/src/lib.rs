//! Data-pooling for many small data-driven stochastic optimization problems.
//!
//! Each subproblem's empirical distribution is shrunk toward an anchor
//! distribution; the amount of pooling is picked by a modified leave-one-out
//! criterion computed from the data alone.

pub mod benchmarks;
pub mod error;
pub mod experiments;
pub mod measure;
pub mod oracle;
pub mod par;
pub mod pooling;
pub mod problem;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
pub use measure::{empirical_distribution, shrunken_measure, Counts, Distribution};
pub use problem::{CostModel, Dataset, Decision, SubproblemInstance};
