//! Separable nonnegative matrix factorization.
//!
//! Greedy column extraction with strongly convex selector functions, an
//! outlier-robust two-stage variant, PPI/VCA/SiVM baselines, synthetic
//! benchmark generators and recovery metrics.

pub mod baselines;
pub mod error;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod outliers;
pub mod rng;
pub mod selectors;
pub mod spa;
pub mod synth;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;
pub use selectors::{SelectorKind, SelectorSpec};
pub use spa::{extract, ExtractionOptions, ExtractionResult, Variant};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
