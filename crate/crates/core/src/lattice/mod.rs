//! Lattice geometry, zero-extended scalar fields and discrete calculus.

mod field;
pub mod ops;
mod window;

pub use field::ScalarField;
pub use ops::{
    bilaplacian, bilaplacian_by_stencil, bilaplacian_stencil, forward_difference,
    gradient_tensor_norms, inner, iterated_difference, laplacian, laplacian_second_differences,
    outer_boundary, product, StencilEntry,
};
pub use window::{graph_distance, neighbors, Direction, LatticeWindow, Site};
