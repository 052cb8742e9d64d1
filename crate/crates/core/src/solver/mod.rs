//! The Bilaplacian on a free region: assembly, Green functions, Gaussian
//! sampling, the random-walk representation on `Z^d`, and the exact matrix
//! forms of the domain Markov property.

mod checks;
mod green;
mod operator;
mod random_walk;
mod region;
mod sample;

pub use checks::{
    conditional_decomposition_check, variance_monotonicity_check, DecompositionReport,
    MonotonicityReport,
};
pub use green::{
    default_iteration_cap, field_from_free, green_column, green_dense, Backend, GreenFactor,
    GreenMatrix, DEFAULT_DENSE_LIMIT, DEFAULT_TOL,
};
pub use operator::{assemble, PrecisionOperator};
pub use random_walk::{
    g_ref, g_ref_entry, lclt_tail, parse_g_ref_table, rw_green, rw_green_plateau,
    step_distribution, GRef, RwPlateau, MAX_STEPS,
};
pub use region::FreeRegion;
pub use sample::{sample_field, FieldSampler};
