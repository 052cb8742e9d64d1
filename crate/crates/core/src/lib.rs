//! A finite-window laboratory for the membrane model with δ-pinning.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`]: windows in `Z^d`, zero-extended fields, `Δ` and `Δ²`.
//! * [`linalg`]: banded Cholesky factors, sparse matrices and conjugate gradients.
//! * [`solver`]: the Bilaplacian restricted to a free region, its Green
//!   function, Gaussian sampling and the random-walk representation.
//! * [`pinning`]: the law of the pinned set, its Gibbs sampler and its
//!   Bernoulli brackets.
//! * [`geometry`]: interior points, the node-weighted metric, shells,
//!   cutoffs and weighted Sobolev norms.
//! * [`percolation`]: Bernoulli environments and the block renormalisation.
//! * [`fit`] and [`experiments`]: the experiment drivers behind the CLI.

pub mod error;
pub mod experiments;
pub mod fit;
pub mod geometry;
pub mod lattice;
pub mod linalg;
pub mod percolation;
pub mod pinning;
pub mod solver;

pub use error::{Error, Result};
