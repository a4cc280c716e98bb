//! Exact probability mass functions on the non-negative integers, the
//! negative binomial family and its power-law mixture.

mod mixed;
mod negative_binomial;
mod pmf;
mod sampler;

pub use mixed::{k_kmax_for, k_pmf, k_pmf_adaptive, k_sample, k_slice_pmf, k_tail, PAParams};
pub use negative_binomial::{
    nb_falling_factorial_moment, nb_pmf, nb_pmf_adaptive, nb_sample, NBParams,
};
pub use pmf::{compensated_sum, IntegerPmf, NORMALIZATION_TOL};
pub use sampler::PmfSampler;

/// Tail mass targeted by adaptive truncation unless the caller asks otherwise.
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;
