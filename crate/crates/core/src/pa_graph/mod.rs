//! The linear preferential attachment model.
//!
//! `G_n^{1,ε}` grows one vertex at a time; vertex `s` sends a single edge to
//! itself or to an earlier vertex with probability proportional to total
//! degree plus `ε`. `G_n^{m,δ}` is obtained by generating `G_{nm}^{1,δ/m}` and
//! merging consecutive blocks of `m` vertices.
//!
//! Vertices are numbered from 1. Accessors that return per-vertex vectors
//! index them from 0, so entry `v - 1` belongs to vertex `v`.

mod conditioned;
mod coupling;
mod exact;
mod generate;

pub use conditioned::{
    enumerate_conditioned, generate_conditioned, ConditionedGraph, IPrimeWeight, I_PRIME,
};
pub use coupling::{
    coupling_samples, sample_block_degree, sample_equilibrium_coupling, CoupledRun, EquilibriumCoupling,
    OffB,
};
pub use exact::{
    conditional_attachment_probability, exact_W_pmf, exact_W_pmf_m1, exact_W_pmf_m1_adaptive,
    exact_block_degree_pmf, exact_block_degree_pmf_adaptive, exact_degree_pmf_m1,
    exact_degree_pmf_m1_adaptive, expected_attachment, expected_in_degree,
    mean_in_degree_m1, projected_dp_cost, DegreeQuery, DEFAULT_STATE_CAP,
};
pub use generate::{collapse, collapsed_in_degrees, generate_m1, sample_W, PAGraphM1};

/// First and last `m = 1` vertex of collapsed vertex `i`.
pub(crate) fn block(m: usize, i: usize) -> (usize, usize) {
    (m * (i - 1) + 1, m * i)
}
