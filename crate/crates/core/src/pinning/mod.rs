//! The law `ζ_W^ε` of the pinned set: exact enumeration, partition-function
//! ratios, Bernoulli brackets, a heat-bath sampler and the mixture estimator
//! of pinned covariances.

mod config;
mod estimator;
mod gibbs;
mod measure;

pub use config::PinConfiguration;
pub use estimator::{endpoint_conditioned, pinned_cov_estimator, mean_and_stderr, CovEstimate, PinSampler};
pub use gibbs::{
    gibbs_sample, heat_bath_kernel, ChainBackend, ChainStats, GibbsChain, GibbsOptions, GibbsSample,
    DENSE_CHAIN_LIMIT,
};
pub use measure::{
    bernoulli_sample, bernoulli_sample_with, c_minus, c_plus, check_strong_domination,
    conditional_pin_prob, conditional_variance, partition_ratio, pin_prob_from_variance, rho,
    rho_bounds, safe_rho_minus, zeta_exact, DominationReport, DominationViolation, ExactPinMeasure,
    RhoBounds, Side, DOMINATION_TOL, EXACT_LIMIT,
};
