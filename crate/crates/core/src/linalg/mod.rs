//! Linear algebra used by the solvers: banded Cholesky factors with cheap
//! single-index modifications, compressed sparse rows with conjugate
//! gradients, and a plain dense matrix.

mod banded;
mod dense;
mod sparse;

pub use banded::{BandedCholesky, SymBandMatrix};
pub use dense::{cholesky_log_det, DenseMatrix};
pub use sparse::{conjugate_gradient, CgSolution, CsrMatrix};
