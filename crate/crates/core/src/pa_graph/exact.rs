use rayon::prelude::*;
use serde::Serialize;

use super::block;
use super::generate::check_epsilon;
use crate::distributions::{compensated_sum, IntegerPmf, PAParams};
use crate::error::{domain, Error, Result};
use crate::numerics::{gamma_ratio, GammaRatioQuery};

/// Starting state cap of the degree DP.
pub const DEFAULT_STATE_CAP: usize = 512;

/// Largest tail a fixed-cap DP may leave before it is reported as too small.
const CAP_TAIL_LIMIT: f64 = 1e-8;

/// Tail the adaptive DP drives below by doubling its cap.
const ADAPTIVE_TAIL: f64 = 1e-10;

/// Vertex `i` of `G_n^{m,δ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegreeQuery {
    pub n: usize,
    pub i: usize,
    pub params: PAParams,
}

impl DegreeQuery {
    pub fn new(n: usize, i: usize, params: PAParams) -> Result<Self> {
        params.validate()?;
        if i == 0 || i > n {
            return domain(format!("vertex {i} is not in 1..={n}"));
        }
        Ok(Self { n, i, params })
    }
}

/// `(1 + ε) / (2 + ε)`, the exponent offset in the martingale normalization.
fn offset_a(epsilon: f64) -> f64 {
    (1.0 + epsilon) / (2.0 + epsilon)
}

/// `Γ(x - 1 + a) / Γ(x)` for `x >= 1`.
fn birth_factor(x: f64, a: f64) -> f64 {
    gamma_ratio(GammaRatioQuery { z: x, a: a - 1.0, b: 0.0 }).expect("x >= 1 and a > 0")
}

/// `μ_{n,i} = E W_{n,i}`, from the martingale
/// `(W_{t,j} + 1 + ε) Γ(t + a) / Γ(t + 1)` with `a = (1 + ε)/(2 + ε)`.
pub fn expected_in_degree(q: DegreeQuery) -> Result<f64> {
    let DegreeQuery { n, i, params } = DegreeQuery::new(q.n, q.i, q.params)?;
    let eps = params.epsilon();
    let a = offset_a(eps);
    let nm = (n * params.m) as f64;
    let growth = gamma_ratio(GammaRatioQuery::new(nm, 1.0, a)?)?;
    let (first, last) = block(params.m, i);
    let births = compensated_sum((first..=last).map(|x| birth_factor(x as f64, a)));
    Ok((1.0 + eps) * growth * births - params.shape())
}

/// Mean in-degree of vertex `j` of `G_steps^{1,ε}`; zero before the vertex exists.
pub fn mean_in_degree_m1(steps: usize, j: usize, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    if j == 0 || steps + 1 < j {
        return domain(format!("vertex {j} does not exist after {steps} steps"));
    }
    if steps + 1 == j {
        return Ok(0.0);
    }
    let a = offset_a(epsilon);
    let growth = gamma_ratio(GammaRatioQuery::new(steps as f64, 1.0, a)?)?;
    Ok((1.0 + epsilon) * (growth * birth_factor(j as f64, a) - 1.0))
}

/// `E X_{k,l}`, the probability that vertex `k` attaches to `l` in `G^{1,ε}`.
pub fn expected_attachment(k: usize, l: usize, epsilon: f64) -> Result<f64> {
    if l == 0 || l > k {
        return domain(format!("vertex {k} cannot attach to {l}"));
    }
    let mu = mean_in_degree_m1(k - 1, l, epsilon)?;
    Ok((mu + 1.0 + epsilon) / (k as f64 * (2.0 + epsilon) - 1.0))
}

/// `P(X_{j,s} = 1 | X_{k,l} = 1, G_{j-1})` for `l, s <= j < k`, given the
/// in-degree of `s` after step `j - 1` (zero for `s = j`).
pub fn conditional_attachment_probability(j: usize, s: usize, l: usize, in_degree_s: u64, epsilon: f64) -> f64 {
    let bump = f64::from(u8::from(s == l));
    (bump + in_degree_s as f64 + epsilon + 1.0) / (j as f64 * (2.0 + epsilon))
}

fn check_vertex(n: usize, j: usize, epsilon: f64) -> Result<()> {
    check_epsilon(epsilon)?;
    if j == 0 || j > n {
        return domain(format!("vertex {j} is not in 1..={n}"));
    }
    Ok(())
}

/// Exact law of the in-degree of vertex `j` in `G_n^{1,ε}`.
///
/// The in-degree is a birth chain: at step `s > j` it grows by one with
/// probability `(d + 1 + ε) / (s(2 + ε) - 1)`, and at step `j` it starts at
/// one (self-loop) with probability `(1 + ε) / (j(2 + ε) - 1)`. Mass pushed
/// past `state_cap` is absorbed into the tail, which must stay below `1e-8`.
pub fn exact_degree_pmf_m1(n: usize, j: usize, epsilon: f64, state_cap: usize) -> Result<IntegerPmf> {
    check_vertex(n, j, epsilon)?;
    let q = DegreeQuery { n, i: j, params: PAParams { m: 1, delta: epsilon } };
    exact_block_degree_pmf(q, state_cap)
}

/// As [`exact_degree_pmf_m1`], doubling the cap from [`DEFAULT_STATE_CAP`]
/// until the tail is below `1e-10`.
pub fn exact_degree_pmf_m1_adaptive(n: usize, j: usize, epsilon: f64) -> Result<IntegerPmf> {
    check_vertex(n, j, epsilon)?;
    exact_block_degree_pmf_adaptive(DegreeQuery { n, i: j, params: PAParams { m: 1, delta: epsilon } })
}

/// Exact law of `W_{n,i}` for any `m`.
///
/// Every vertex of the block carries weight `d + 1 + ε` once born, so the
/// block's total in-degree `W` grows at step `s` with probability
/// `(W + c_s (1 + ε)) / (s(2 + ε) - 1)`, where `c_s` counts block vertices
/// born by step `s`. That is again a birth chain.
pub fn exact_block_degree_pmf(q: DegreeQuery, state_cap: usize) -> Result<IntegerPmf> {
    let q = DegreeQuery::new(q.n, q.i, q.params)?;
    if state_cap == 0 {
        return domain("state cap must be positive");
    }
    let pmf = block_dp(q, state_cap);
    if pmf.tail_mass() > CAP_TAIL_LIMIT {
        return Err(Error::Truncation(format!(
            "vertex {} of n={}: state cap {state_cap} leaves tail {:e}",
            q.i,
            q.n,
            pmf.tail_mass()
        )));
    }
    Ok(pmf)
}

/// [`exact_block_degree_pmf`] with the cap doubled until the tail is below `1e-10`.
pub fn exact_block_degree_pmf_adaptive(q: DegreeQuery) -> Result<IntegerPmf> {
    let q = DegreeQuery::new(q.n, q.i, q.params)?;
    let mut cap = DEFAULT_STATE_CAP;
    loop {
        let pmf = block_dp(q, cap);
        if pmf.tail_mass() < ADAPTIVE_TAIL || cap > q.n * q.params.m {
            return Ok(pmf);
        }
        cap *= 2;
    }
}

fn block_dp(q: DegreeQuery, cap: usize) -> IntegerPmf {
    let DegreeQuery { n, i, params } = q;
    let m = params.m;
    let eps = params.epsilon();
    let w = 1.0 + eps;
    let vertices = n * m;
    let (first, _) = block(m, i);
    let top = cap.min(vertices - first + 1);
    let mut probs = vec![0.0; top + 1];
    probs[0] = 1.0;
    let mut tail = 0.0;
    // Highest state that can carry mass before the current step.
    let mut reach = 0;
    for s in first..=vertices {
        let denom = s as f64 * (2.0 + eps) - 1.0;
        let offset = (s - first + 1).min(m) as f64 * w;
        if reach == top && top == cap {
            let up = probs[top] * (top as f64 + offset) / denom;
            tail += up;
            probs[top] -= up;
        }
        for d in (0..=reach.min(top - 1)).rev() {
            let up = probs[d] * (d as f64 + offset) / denom;
            probs[d + 1] += up;
            probs[d] -= up;
        }
        reach = (reach + 1).min(top);
    }
    IntegerPmf::from_parts(probs, tail).trimmed()
}

/// Exact law of `W_n` for `m = 1`: the average of the per-vertex laws.
///
/// Vertices are processed in parallel and summed in index order, so the
/// result does not depend on the thread count.
#[allow(non_snake_case)]
pub fn exact_W_pmf_m1(n: usize, epsilon: f64, state_cap: usize) -> Result<IntegerPmf> {
    exact_W_pmf(n, PAParams::new(1, epsilon)?, state_cap)
}

/// [`exact_W_pmf_m1`] with per-vertex adaptive caps.
#[allow(non_snake_case)]
pub fn exact_W_pmf_m1_adaptive(n: usize, epsilon: f64) -> Result<IntegerPmf> {
    check_vertex(n, 1, epsilon)?;
    let params = PAParams::new(1, epsilon)?;
    let laws: Result<Vec<IntegerPmf>> = (1..=n)
        .into_par_iter()
        .map(|i| exact_block_degree_pmf_adaptive(DegreeQuery { n, i, params }))
        .collect();
    average(laws?)
}

/// Exact law of `W_n` for any `m`, from the block chains.
#[allow(non_snake_case)]
pub fn exact_W_pmf(n: usize, params: PAParams, state_cap: usize) -> Result<IntegerPmf> {
    params.validate()?;
    if n == 0 {
        return domain("a graph needs at least one vertex");
    }
    let laws: Result<Vec<IntegerPmf>> = (1..=n)
        .into_par_iter()
        .map(|i| exact_block_degree_pmf(DegreeQuery { n, i, params }, state_cap))
        .collect();
    average(laws?)
}

fn average(laws: Vec<IntegerPmf>) -> Result<IntegerPmf> {
    let weights = vec![1.0 / laws.len() as f64; laws.len()];
    IntegerPmf::mixture(&weights, &laws)
}

/// Number of state updates the DP for `W_n` performs at a given cap.
pub fn projected_dp_cost(n: usize, params: PAParams, state_cap: usize) -> f64 {
    let vertices = n * params.m;
    (1..=n)
        .map(|i| {
            let steps = vertices - block(params.m, i).0 + 1;
            steps as f64 * (state_cap.min(steps) + 1) as f64
        })
        .sum()
}
