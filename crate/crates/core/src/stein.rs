//! Stein's method for the negative binomial distribution.
//!
//! `Y ~ NB(r, p)` is characterized by `E[(1 - p)(r + Y) g(Y + 1) - Y g(Y)] = 0`
//! for bounded `g`. For a target set `A`, the Stein equation
//!
//! ```text
//! (1 - p)(r + k) g(k + 1) - k g(k) = 1[k ∈ A] - P(Y ∈ A)
//! ```
//!
//! has a solution `g_A` whose smoothness controls the total variation
//! distance to `NB(r, p)` of any law that is close to its own
//! `r`-equilibrium transform.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;

use crate::distributions::{compensated_sum, IntegerPmf, NBParams};
use crate::error::{domain, Error, Result};
use crate::transforms::d_r;

/// Additive slack allowed when certifying the solution bounds.
pub const CERTIFICATION_SLOP: f64 = 1e-9;

/// Orders of magnitude (natural log) by which a backward-recursion seed is
/// pushed past the region of interest.
const SEED_DECAY_LN: f64 = 45.0;

/// Largest excursion of the backward seed beyond `kmax`.
const MAX_SEED_OFFSET: usize = 5_000_000;

/// A subset of the non-negative integers: finitely many members plus,
/// optionally, every integer from some point on.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct TargetSet {
    members: BTreeSet<usize>,
    cofinite_from: Option<usize>,
}

impl TargetSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// All of `{0, 1, ...}`.
    pub fn everything() -> Self {
        Self { members: BTreeSet::new(), cofinite_from: Some(0) }
    }

    pub fn finite<I: IntoIterator<Item = usize>>(members: I) -> Self {
        Self { members: members.into_iter().collect(), cofinite_from: None }
    }

    /// `members ∪ {from, from + 1, ...}`.
    pub fn with_cofinite_tail(mut self, from: usize) -> Self {
        self.cofinite_from = Some(from);
        self
    }

    /// `count` distinct members drawn uniformly from `{0, ..., max}`.
    pub fn random<R: Rng + ?Sized>(count: usize, max: usize, rng: &mut R) -> Result<Self> {
        if count > max + 1 {
            return domain(format!("cannot draw {count} distinct members from 0..={max}"));
        }
        Ok(Self::finite(sample(rng, max + 1, count)))
    }

    pub fn contains(&self, k: usize) -> bool {
        self.cofinite_from.is_some_and(|from| k >= from) || self.members.contains(&k)
    }

    pub fn members(&self) -> &BTreeSet<usize> {
        &self.members
    }

    pub fn cofinite_from(&self) -> Option<usize> {
        self.cofinite_from
    }

    /// `P(Y ∈ A)` for `Y ~ NB(r, p)`.
    pub fn probability(&self, params: NBParams) -> f64 {
        match self.cofinite_from {
            None => compensated_sum(self.members.iter().map(|&k| params.pmf_at(k))),
            Some(from) => {
                let below = compensated_sum(
                    (0..from).filter(|k| !self.members.contains(k)).map(|k| params.pmf_at(k)),
                );
                (1.0 - below).clamp(0.0, 1.0)
            }
        }
    }
}

/// `g_A` on `{0, ..., kmax}` with the convention `g(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteinSolution {
    pub params: NBParams,
    pub target: TargetSet,
    pub g: Vec<f64>,
    pub kmax: usize,
    /// `P(Y ∈ A)`.
    pub target_probability: f64,
}

impl SteinSolution {
    /// `(1 - p)(r + k) g(k + 1) - k g(k) - (1[k ∈ A] - P(Y ∈ A))` for `k < kmax`.
    pub fn residuals(&self) -> Vec<f64> {
        let NBParams { r, p } = self.params;
        (0..self.kmax)
            .map(|k| {
                let kf = k as f64;
                let lhs = (1.0 - p) * (r + kf) * self.g[k + 1] - kf * self.g[k];
                lhs - self.rhs(k)
            })
            .collect()
    }

    fn rhs(&self, k: usize) -> f64 {
        f64::from(u8::from(self.target.contains(k))) - self.target_probability
    }
}

/// `E[(1 - p)(r + W) g(W + 1) - W g(W)]` for `W` distributed as `pmf`.
pub fn stein_operator_expectation(params: NBParams, g: &[f64], pmf: &IntegerPmf) -> Result<f64> {
    params.validate()?;
    if g.len() < pmf.len() + 1 {
        return domain(format!("g has {} entries, needs {}", g.len(), pmf.len() + 1));
    }
    let NBParams { r, p } = params;
    Ok(compensated_sum(pmf.probs().iter().enumerate().map(|(k, w)| {
        let kf = k as f64;
        w * ((1.0 - p) * (r + kf) * g[k + 1] - kf * g[k])
    })))
}

fn require_p_below_one(params: NBParams) -> Result<()> {
    params.validate()?;
    if params.p >= 1.0 {
        return domain("the Stein equation needs p < 1");
    }
    Ok(())
}

/// Solves the Stein equation for `A` on `{0, ..., kmax}`.
///
/// The forward recursion `g(k + 1) = (k g(k) + 1[k ∈ A] - P(Y ∈ A)) / ((1 - p)(r + k))`
/// from `g(0) = 0` contracts errors only while `k <= (1 - p) r / p`; past
/// that its error grows like `(1 - p)^{-k}`. Above the mean the same
/// equation is therefore run backward, `g(k) = ((1 - p)(r + k) g(k + 1) - rhs) / k`,
/// from a zero seed placed far enough out that the seed error, which decays
/// like `k P(Y = k)`, is below `e^{-45}` of its smallest value on `[1, kmax]`.
pub fn solve_stein_equation(params: NBParams, target: &TargetSet, kmax: usize) -> Result<SteinSolution> {
    require_p_below_one(params)?;
    let NBParams { r, p } = params;
    let q = 1.0 - p;
    let prob_a = target.probability(params);
    let rhs = |k: usize| f64::from(u8::from(target.contains(k))) - prob_a;

    let mut g = vec![0.0; kmax + 1];
    let switch = ((q * r / p).floor() as usize).min(kmax);
    for k in 0..switch {
        let kf = k as f64;
        g[k + 1] = (kf * g[k] + rhs(k)) / (q * (r + kf));
    }
    if switch < kmax {
        let seed_at = backward_seed_index(params, kmax)?;
        let mut next = 0.0;
        for k in (switch + 1..seed_at).rev() {
            let kf = k as f64;
            let gk = (q * (r + kf) * next - rhs(k)) / kf;
            if k <= kmax {
                g[k] = gk;
            }
            next = gk;
        }
    }
    Ok(SteinSolution { params, target: target.clone(), g, kmax, target_probability: prob_a })
}

/// First index past `kmax` where `ln(k P(Y = k))` has dropped
/// [`SEED_DECAY_LN`] below its minimum over `[1, kmax]`.
fn backward_seed_index(params: NBParams, kmax: usize) -> Result<usize> {
    let ln_weight = |k: usize| (k as f64).ln() + params.ln_pmf(k);
    let floor = (1..=kmax.max(1)).map(ln_weight).fold(f64::INFINITY, f64::min) - SEED_DECAY_LN;
    let mode = params.mean().ceil() as usize + 1;
    let mut k = kmax + 1;
    while k <= mode || ln_weight(k) > floor {
        k += 1;
        if k > kmax + MAX_SEED_OFFSET {
            return Err(Error::Resource(format!("backward seed for {params:?} beyond {MAX_SEED_OFFSET} steps")));
        }
    }
    Ok(k)
}

/// Independent route to `g_A` through the covariance representation
///
/// ```text
/// (k + 1) g(k + 1) = [P(Y ∈ A, Y <= k) P(Y >= k + 1) - P(Y ∈ A, Y >= k + 1) P(Y <= k)] / P(Y = k + 1)
/// ```
///
/// with upper tails summed from the top so small differences keep their
/// relative precision. Fails with a truncation error when `P(Y = k + 1)`
/// underflows.
pub fn stein_solution_alternative(params: NBParams, target: &TargetSet, kmax: usize) -> Result<Vec<f64>> {
    require_p_below_one(params)?;
    let top = tail_sum_extent(params, kmax + 1);
    let pmf: Vec<f64> = (0..=top).map(|k| params.pmf_at(k)).collect();
    let in_a: Vec<f64> = pmf.iter().enumerate().map(|(k, w)| if target.contains(k) { *w } else { 0.0 }).collect();

    // suffix[k] = sum_{j >= k} over the computed range
    let suffix = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; v.len() + 1];
        for k in (0..v.len()).rev() {
            out[k] = out[k + 1] + v[k];
        }
        out
    };
    let upper = suffix(&pmf);
    let upper_a = suffix(&in_a);

    let mut g = vec![0.0; kmax + 1];
    let mut lower = 0.0;
    let mut lower_a = 0.0;
    for k in 0..kmax {
        lower += pmf[k];
        lower_a += in_a[k];
        let denom = pmf[k + 1];
        if !(denom > 1e-290) {
            return Err(Error::Truncation(format!(
                "P(Y = {}) = {denom:e} underflows for {params:?}; lower kmax",
                k + 1
            )));
        }
        let num = lower_a * upper[k + 1] - upper_a[k + 1] * lower;
        g[k + 1] = num / denom / (k as f64 + 1.0);
    }
    Ok(g)
}

/// Index past which the pmf is below `e^{-45}` of `P(Y = from)`.
fn tail_sum_extent(params: NBParams, from: usize) -> usize {
    let reference = params.ln_pmf(from);
    let mode = params.mean().ceil() as usize + 1;
    let mut k = from;
    while k <= mode || params.ln_pmf(k) > reference - SEED_DECAY_LN {
        k += 1;
    }
    k
}

/// One of the four smoothness bounds on `g_A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionBound {
    /// `|(k + 1) g(k + 1)| <= max{1, r} e / p`
    ScaledSolution,
    /// `|Δg(k)| <= min{1/((1 - p)(r + k)), 1/k}`
    Increment,
    /// `|D_r g(k)| <= (max{r, 1} e + 1) / (r (1 - p))`
    EquilibriumOperator,
    /// `|Δ D_r g(k)| <= min{1 + 2/r, (2 - p)/(r (1 - p))}`
    EquilibriumIncrement,
}

impl SolutionBound {
    pub const ALL: [SolutionBound; 4] = [
        SolutionBound::ScaledSolution,
        SolutionBound::Increment,
        SolutionBound::EquilibriumOperator,
        SolutionBound::EquilibriumIncrement,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SolutionBound::ScaledSolution => "scaled_solution",
            SolutionBound::Increment => "increment",
            SolutionBound::EquilibriumOperator => "equilibrium_operator",
            SolutionBound::EquilibriumIncrement => "equilibrium_increment",
        }
    }
}

/// Outcome of checking one bound over `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub bound: SolutionBound,
    /// `min_k (bound(k) - |value(k)|)`; negative means violated.
    pub min_slack: f64,
    /// The `k` attaining `min_slack`.
    pub worst_k: usize,
    pub pass: bool,
}

/// Slack of every bound for one solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionBoundsReport {
    pub params: NBParams,
    pub checks: Vec<BoundCheck>,
}

impl SolutionBoundsReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Evaluates the four bounds on every `k` the stored solution covers.
pub fn solution_bound_slacks(sol: &SteinSolution) -> SolutionBoundsReport {
    let NBParams { r, p } = sol.params;
    let q = 1.0 - p;
    let g = &sol.g;
    let e = std::f64::consts::E;
    let dr = |k: usize| d_r(g, r, k);
    let checks = SolutionBound::ALL
        .iter()
        .map(|&bound| {
            let (range, eval): (std::ops::Range<usize>, Box<dyn Fn(usize) -> (f64, f64)>) = match bound {
                SolutionBound::ScaledSolution => (
                    0..sol.kmax,
                    Box::new(|k| ((k as f64 + 1.0) * g[k + 1], r.max(1.0) * e / p)),
                ),
                SolutionBound::Increment => (
                    0..sol.kmax,
                    Box::new(|k| {
                        let kf = k as f64;
                        let b = 1.0 / (q * (r + kf));
                        (g[k + 1] - g[k], if k == 0 { b } else { b.min(1.0 / kf) })
                    }),
                ),
                SolutionBound::EquilibriumOperator => {
                    (0..sol.kmax, Box::new(|k| (dr(k), (r.max(1.0) * e + 1.0) / (r * q))))
                }
                SolutionBound::EquilibriumIncrement => (
                    0..sol.kmax.saturating_sub(1),
                    Box::new(|k| (dr(k + 1) - dr(k), (1.0 + 2.0 / r).min((2.0 - p) / (r * q)))),
                ),
            };
            let (min_slack, worst_k) = range
                .map(|k| {
                    let (value, limit) = eval(k);
                    (limit - value.abs(), k)
                })
                .fold((f64::INFINITY, 0), |acc, x| if x.0 < acc.0 { x } else { acc });
            BoundCheck { bound, min_slack, worst_k, pass: min_slack >= -CERTIFICATION_SLOP }
        })
        .collect();
    SolutionBoundsReport { params: sol.params, checks }
}

/// Certifies the four bounds, failing with the offending `(k, A, params)`.
pub fn certify_solution_bounds(sol: &SteinSolution) -> Result<SolutionBoundsReport> {
    let report = solution_bound_slacks(sol);
    if let Some(bad) = report.checks.iter().find(|c| !c.pass) {
        return Err(Error::Certification(format!(
            "{} bound violated by {:e} at k={} for A={:?}, params={:?}",
            bad.bound.name(),
            -bad.min_slack,
            bad.worst_k,
            sol.target,
            sol.params
        )));
    }
    Ok(report)
}

/// One draw of `(W, W^{*r}, 1_B)` from an equilibrium coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CouplingSample {
    pub w: u64,
    pub w_star: u64,
    pub on_b: bool,
}

/// `c_{r,p} = min{(r + 2)(1 - p), 2 - p}`.
pub fn coupling_constant(r: f64, p: f64) -> f64 {
    ((r + 2.0) * (1.0 - p)).min(2.0 - p)
}

/// Monte Carlo estimates of the two total variation bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TvUpperBound {
    /// `c_{r,p} E[1_B |W* - W|] + 2 (e max{1, r} + 1) P(B^c)`
    pub bound_b: f64,
    /// `2 (e max{1, r} + 1) P(W* != W)`
    pub bound_simple: f64,
    /// Standard errors of the two sample means.
    pub bound_b_se: f64,
    pub bound_simple_se: f64,
    pub p_neq: f64,
    pub p_bc: f64,
}

/// Plug-in estimate of the coupling bounds from a sample of couplings.
pub fn tv_upper_bound(samples: &[CouplingSample], r: f64, p: f64) -> Result<TvUpperBound> {
    if samples.is_empty() {
        return domain("coupling bound needs at least one sample");
    }
    NBParams::new(r, p)?;
    let c = coupling_constant(r, p);
    let off_b = 2.0 * (std::f64::consts::E * r.max(1.0) + 1.0);
    let b_terms: Vec<f64> = samples
        .iter()
        .map(|s| if s.on_b { c * s.w_star.abs_diff(s.w) as f64 } else { off_b })
        .collect();
    let neq: Vec<f64> = samples.iter().map(|s| f64::from(u8::from(s.w_star != s.w))).collect();
    let (mean_b, se_b) = mean_and_se(&b_terms);
    let (p_neq, se_neq) = mean_and_se(&neq);
    let p_bc = samples.iter().filter(|s| !s.on_b).count() as f64 / samples.len() as f64;
    Ok(TvUpperBound {
        bound_b: mean_b,
        bound_simple: off_b * p_neq,
        bound_b_se: se_b,
        bound_simple_se: off_b * se_neq,
        p_neq,
        p_bc,
    })
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = compensated_sum(values.iter().map(|v| (v - mean).powi(2))) / (n - 1.0);
    (mean, (var / n).sqrt())
}
