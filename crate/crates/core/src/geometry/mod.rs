//! Interior points, the node-weighted metric `d̂_A`, shells `C_n`, cutoff
//! functions and weighted Sobolev norms.

pub mod corpus;
mod distance;
mod interior;
mod sets;
mod shells;
mod sobolev;

pub use distance::{brute_force_distance, weighted_distance, weighted_distance_from, DistanceField};
pub use interior::{distance_weight, interior_points, site_weight, InteriorSet, WeightField};
pub use sets::{enlarge, SiteSet};
pub use shells::{annuli, auto_step, cutoff_eta, shells, CutoffFunction, ShellDecomposition, DEFAULT_SHELL_STEP};
pub use sobolev::{
    h_field, hessian_energy, norm_support, sobolev_density, sobolev_norm, sobolev_tail_series, xn_bound_check,
    SobolevReport, SobolevRow, SobolevSplit, XnReport, XnRow, SOBOLEV_CSV_HEADER, XN_TOL,
};
