//! The equilibrium coupling used to bound `d_TV(W_{n,i}, NB)`.
//!
//! `(K, L)` is drawn with probability proportional to `E X_{K,L}` over
//! `L` in the block of vertex `i` and `K >= L`. The conditioned construction
//! for `(K, L)` then runs alongside an unconditioned graph, both driven by one
//! uniform per step. Only attachments into the block and `i′` matter, and
//! their probabilities depend only on the block's total in-degree and on
//! `i′`'s, so each run tracks three counters from step `m(i - 1) + 1` on. At
//! every step the uniform is compared with the cumulative thresholds
//! `[block][i′]` of the conditioned run and `[block]` of the unconditioned
//! one, so the two agree whenever their block weights do.
//!
//! On `B_{K,L}` the coupled value is `W^{*} = W_{n,i}(K, L)`. Off it, the
//! default draws `W^{*}` from the urn law `U_{m+δ,T}` at the realized total
//! `T = W_{n,i}(K, L) + W_{nm,i′}`. Given `T = t`, `W_{n,i}(K, L)` on `B` is
//! urn distributed, so `W^{*}` given `T = t` is exactly `U_{m+δ,t}`; as `T`
//! has the size-biased law, `W^{*}` has the equilibrium law. An independent
//! equilibrium draw off `B` ([`OffB::IndependentEquilibrium`]) would need `B`
//! independent of `T`, which fails, and its marginal is visibly off.

use rand::Rng;
use rayon::prelude::*;

use super::block;
use super::exact::{exact_block_degree_pmf_adaptive, expected_attachment, DegreeQuery};
use crate::distributions::{IntegerPmf, PAParams, PmfSampler};
use crate::error::Result;
use crate::rng::stream_rng;
use crate::stein::CouplingSample;
use crate::transforms::{r_equilibrium, urn_sample, UrnSpec};

/// How `W^{*}` is drawn off `B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OffB {
    /// `U_{m+δ,T}` at the realized conditioned total `T`.
    #[default]
    UrnOnTotal,
    /// A draw from the equilibrium law of `W_{n,i}`, independent of the run.
    IndependentEquilibrium,
}

/// Precomputed laws for repeated draws of the coupling at one `(n, i)`.
#[derive(Debug, Clone)]
pub struct EquilibriumCoupling {
    query: DegreeQuery,
    pairs: Vec<(usize, usize)>,
    pair_sampler: PmfSampler,
    law: IntegerPmf,
    equilibrium: IntegerPmf,
    equilibrium_sampler: PmfSampler,
    off_b: OffB,
}

/// Outcome of one coupled run for a fixed `(k, l)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoupledRun {
    /// `W_{n,i}` in the unconditioned graph.
    pub unconditioned: u64,
    /// `W_{n,i}(k, l)`.
    pub conditioned: u64,
    /// `W_{nm,i′}(k, l)`, including the edge from `k`.
    pub i_prime: u64,
    pub on_b: bool,
}

impl EquilibriumCoupling {
    /// Uses the exact law of `W_{n,i}` from the block chain.
    pub fn new(query: DegreeQuery) -> Result<Self> {
        let query = DegreeQuery::new(query.n, query.i, query.params)?;
        let law = exact_block_degree_pmf_adaptive(query)?;
        Self::with_law(query, law)
    }

    /// Uses a caller-supplied law of `W_{n,i}` for the off-`B` draws.
    pub fn with_law(query: DegreeQuery, law: IntegerPmf) -> Result<Self> {
        let query = DegreeQuery::new(query.n, query.i, query.params)?;
        let PAParams { m, .. } = query.params;
        let eps = query.params.epsilon();
        let vertices = query.n * m;
        let (first, last) = block(m, query.i);
        let mut pairs = Vec::new();
        let mut weights = Vec::new();
        for l in first..=last {
            for k in l..=vertices {
                pairs.push((k, l));
                weights.push(expected_attachment(k, l, eps)?);
            }
        }
        let pair_sampler = PmfSampler::from_weights(&weights)?;
        let equilibrium = r_equilibrium(&law, query.params.shape())?;
        let equilibrium_sampler = PmfSampler::new(&equilibrium)?;
        Ok(Self { query, pairs, pair_sampler, law, equilibrium, equilibrium_sampler, off_b: OffB::default() })
    }

    pub fn with_off_b(mut self, off_b: OffB) -> Self {
        self.off_b = off_b;
        self
    }

    pub fn query(&self) -> DegreeQuery {
        self.query
    }

    /// Law of `W_{n,i}` used off `B`.
    pub fn law(&self) -> &IntegerPmf {
        &self.law
    }

    /// Its `(m + δ)`-equilibrium transform.
    pub fn equilibrium(&self) -> &IntegerPmf {
        &self.equilibrium
    }

    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        self.pairs[self.pair_sampler.sample(rng)]
    }

    /// Runs the conditioned construction for `(k, l)` coupled to an
    /// unconditioned graph.
    pub fn run<R: Rng + ?Sized>(&self, k: usize, l: usize, rng: &mut R) -> CoupledRun {
        let DegreeQuery { n, i, params } = self.query;
        let m = params.m;
        let eps = params.epsilon();
        let w = 1.0 + eps;
        let (first, last) = block(m, i);
        let (mut plain, mut cond, mut ip) = (0u64, 0u64, 0u64);
        let mut on_b = true;
        for j in first..=n * m {
            let born = (j - first + 1).min(m) as f64 * w;
            let normal = j as f64 * (2.0 + eps) - 1.0;
            if j == l {
                ip = 1;
            }
            let u: f64 = rng.random();
            if u * normal < plain as f64 + born {
                plain += 1;
            }
            if j == k {
                continue;
            }
            let (denom, i_prime_weight) = if j < l {
                (normal, 0.0)
            } else if j < k {
                (j as f64 * (2.0 + eps), ip as f64)
            } else {
                (normal, ip as f64)
            };
            let block_weight = cond as f64 + born;
            let x = u * denom;
            let hit = if x < block_weight {
                cond += 1;
                true
            } else if x < block_weight + i_prime_weight {
                ip += 1;
                true
            } else {
                false
            };
            if hit && j <= last {
                on_b = false;
            }
        }
        CoupledRun { unconditioned: plain, conditioned: cond, i_prime: ip, on_b }
    }

    fn off_b_draw<R: Rng + ?Sized>(&self, run: CoupledRun, rng: &mut R) -> u64 {
        match self.off_b {
            OffB::UrnOnTotal => {
                let total = (run.conditioned + run.i_prime) as usize;
                let spec = UrnSpec { r: self.query.params.shape(), n: total };
                urn_sample(spec, rng).expect("total counts the edge from k")
            }
            OffB::IndependentEquilibrium => self.equilibrium_sampler.sample(rng) as u64,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CouplingSample {
        let (k, l) = self.sample_pair(rng);
        let run = self.run(k, l, rng);
        let w_star = if run.on_b {
            run.conditioned
        } else {
            self.off_b_draw(run, rng)
        };
        CouplingSample { w: run.unconditioned, w_star, on_b: run.on_b }
    }
}

/// One draw of the coupling at `(n, i)`. Builds the laws each call; use
/// [`EquilibriumCoupling`] or [`coupling_samples`] for many draws.
pub fn sample_equilibrium_coupling<R: Rng + ?Sized>(
    n: usize,
    i: usize,
    params: PAParams,
    rng: &mut R,
) -> Result<CouplingSample> {
    let coupling = EquilibriumCoupling::new(DegreeQuery::new(n, i, params)?)?;
    Ok(coupling.sample(rng))
}

/// `replicas` draws, replica `t` using stream `t` of `seed`.
pub fn coupling_samples(coupling: &EquilibriumCoupling, replicas: usize, seed: u64) -> Vec<CouplingSample> {
    (0..replicas as u64)
        .into_par_iter()
        .map(|t| coupling.sample(&mut stream_rng(seed, t)))
        .collect()
}

/// `W_{n,i}` from the block's own chain, without building the graph.
pub fn sample_block_degree<R: Rng + ?Sized>(n: usize, i: usize, params: PAParams, rng: &mut R) -> Result<u64> {
    let DegreeQuery { n, i, params } = DegreeQuery::new(n, i, params)?;
    let eps = params.epsilon();
    let (first, _) = block(params.m, i);
    let mut deg = 0u64;
    for j in first..=n * params.m {
        let born = (j - first + 1).min(params.m) as f64 * (1.0 + eps);
        let u: f64 = rng.random();
        if u * (j as f64 * (2.0 + eps) - 1.0) < deg as f64 + born {
            deg += 1;
        }
    }
    Ok(deg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{empirical_pmf, tv_exact};
    use crate::pa_graph::exact::expected_in_degree;

    fn query(n: usize, i: usize, m: usize, delta: f64) -> DegreeQuery {
        DegreeQuery::new(n, i, PAParams::new(m, delta).unwrap()).unwrap()
    }

    #[test]
    fn pair_weights_sum_to_the_mean() {
        for (n, i, m, d) in [(30, 4, 1, 0.0), (20, 3, 2, 1.0)] {
            let q = query(n, i, m, d);
            let (first, last) = block(m, i);
            let eps = q.params.epsilon();
            let total: f64 = (first..=last)
                .flat_map(|l| (l..=n * m).map(move |k| (k, l)))
                .map(|(k, l)| expected_attachment(k, l, eps).unwrap())
                .sum();
            assert!((total - expected_in_degree(q).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn block_sampler_matches_exact_law() {
        let q = query(60, 5, 2, 1.0);
        let mut rng = stream_rng(21, 0);
        let draws: Vec<u64> =
            (0..100_000).map(|_| sample_block_degree(60, 5, q.params, &mut rng).unwrap()).collect();
        let exact = exact_block_degree_pmf_adaptive(q).unwrap();
        assert!(tv_exact(&empirical_pmf(&draws).unwrap(), &exact).value < 0.01);
    }

    #[test]
    fn marginals_match_their_laws() {
        let q = query(200, 8, 1, 0.0);
        let coupling = EquilibriumCoupling::new(q).unwrap();
        let samples = coupling_samples(&coupling, 100_000, 5);
        let w: Vec<u64> = samples.iter().map(|s| s.w).collect();
        let w_star: Vec<u64> = samples.iter().map(|s| s.w_star).collect();
        let tv_w = tv_exact(&empirical_pmf(&w).unwrap(), coupling.law()).value;
        let tv_star = tv_exact(&empirical_pmf(&w_star).unwrap(), coupling.equilibrium()).value;
        assert!(tv_w < 0.01, "{tv_w}");
        assert!(tv_star < 0.01, "{tv_star}");

        // B is not independent of the conditioned total.
        let independent = coupling.clone().with_off_b(OffB::IndependentEquilibrium);
        let w_star: Vec<u64> = coupling_samples(&independent, 100_000, 5).iter().map(|s| s.w_star).collect();
        let tv_independent = tv_exact(&empirical_pmf(&w_star).unwrap(), coupling.equilibrium()).value;
        assert!(tv_independent > 0.015, "{tv_independent}");
    }

    #[test]
    fn sample_once() {
        let params = PAParams::new(2, 0.5).unwrap();
        let s = sample_equilibrium_coupling(10, 2, params, &mut stream_rng(1, 1)).unwrap();
        assert!(s.w <= 20 && s.w_star <= 20);
    }
}
