//! Exact and simulated analysis of channel decoding with a fixed decoding
//! metric that may disagree with the true channel law.
//!
//! The crate is organised around one tail quantity: for a metric `q`, an
//! input distribution `mu` and a received word `y`,
//!
//! ```text
//! phi(c, mu, y) = sum of mu(x') over all x' with q_n(x', y) >= c
//! ```
//!
//! Everything else is built on top of it:
//!
//! * [`model`] — channels, metrics, codebooks, input distributions, and the
//!   exact combinatorics of type classes.
//! * [`exactprob`] — exact error probabilities for max-metric and threshold
//!   decoders, and the finite-blocklength identities and bounds that tie
//!   them to `phi`.
//! * [`lmrate`] — convex solvers for the single-letter and product-space
//!   rate bounds, matched capacity, erasures-only rate, and metric deviation
//!   exponents.
//! * [`spectrum`] — exact tail convolutions on a metric lattice, seeded
//!   sampling of spectrum statistics, and quantile proxies for their
//!   probabilistic limits.
//! * [`mcdecode`] — Monte Carlo decoding simulation, per-message worst-case
//!   error, and the codebook expurgation check.
//!
//! All rates and exponents are in bits (logs base 2).

pub mod exactprob;
pub mod lmrate;
pub mod mcdecode;
pub mod model;
pub mod spectrum;
pub mod util;

use thiserror::Error;

/// Errors shared by all modules.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("row {row} sums to {sum:.17}, expected 1 within {tol:e}")]
    NotStochastic { row: usize, sum: f64, tol: f64 },
    #[error("negative entry {value:.17} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("{0}")]
    Domain(String),
    #[error("table of {size} entries exceeds cap {cap}")]
    TooLarge { size: usize, cap: usize },
    #[error("metric admits no rational lattice embedding with denominator <= {max_den}")]
    NoLattice { max_den: u64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no convergence within {iterations} iterations (gap {gap:e})")]
    IterationLimit { iterations: usize, gap: f64 },
    #[error("unsupported combination: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
