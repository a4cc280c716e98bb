//! Distributional transformations on integer laws.
//!
//! For a law `X` with mean `μ > 0`, the size bias `X^s` has
//! `P(X^s = k) = k P(X = k) / μ`. The Pólya urn variable `U_{r,n}` counts
//! white balls drawn in `n - 1` draws from an urn that starts with weight `r`
//! of white and one black ball, every draw being returned with one more ball
//! of its colour. The `r`-equilibrium transformation is `X^{*r} = U_{r,X^s}`;
//! `X^{*r}` has the law of `X` exactly when `X` is negative binomial with
//! shape `r`.
//!
//! Everything here is exact finite arithmetic on pmfs. A truncated input is
//! only accepted when its tail is negligible, and the dropped tail is
//! recorded on the output.

use rand::Rng;
use serde::Serialize;

use crate::distributions::{IntegerPmf, NBParams};
use crate::error::{domain, Error, Result};
use crate::metrics::tv_exact;

/// Largest input tail that size biasing will silently drop.
pub const SIZE_BIAS_MAX_TAIL: f64 = 1e-8;

/// Smallest mean accepted by [`size_bias`].
pub const MIN_MEAN: f64 = 1e-12;

/// `U_{r,n}`: white draws among `n - 1` draws of a Pólya urn with initial
/// white weight `r` and one black ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UrnSpec {
    pub r: f64,
    pub n: usize,
}

impl UrnSpec {
    pub fn new(r: f64, n: usize) -> Result<Self> {
        let spec = Self { r, n };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r > 0.0) {
            return domain(format!("urn white weight must be positive, got {}", self.r));
        }
        if self.n == 0 {
            return domain("urn index n must be at least 1");
        }
        Ok(())
    }
}

/// `P(X^s = k) = k P(X = k) / E X`.
pub fn size_bias(pmf: &IntegerPmf) -> Result<IntegerPmf> {
    if pmf.tail_mass() >= SIZE_BIAS_MAX_TAIL {
        return Err(Error::Precondition(format!(
            "size bias of a law with tail mass {:e} is not determined by its explicit entries",
            pmf.tail_mass()
        )));
    }
    let mean = pmf.mean();
    if !(mean > MIN_MEAN) {
        return domain(format!("size bias needs a positive mean, got {mean:e}"));
    }
    let probs: Vec<f64> = pmf.probs().iter().enumerate().map(|(k, p)| k as f64 * p / mean).collect();
    let discarded = pmf.tail_mass() + pmf.discarded_tail();
    Ok(IntegerPmf::from_parts(probs, 0.0).trimmed().with_discarded_tail(discarded))
}

/// Successive laws `P_1, P_2, ...` of `U_{r,1}, U_{r,2}, ...`, advanced by
/// `P_{k+1}(u) = P_k(u - 1) (r + u - 1)/(r + k) + P_k(u) (1 - (r + u)/(r + k))`.
#[derive(Debug, Clone)]
pub struct UrnLaws {
    r: f64,
    index: usize,
    probs: Vec<f64>,
}

impl UrnLaws {
    pub fn new(r: f64) -> Result<Self> {
        UrnSpec::new(r, 1)?;
        Ok(Self { r, index: 1, probs: vec![1.0] })
    }

    /// Current index `n`; [`Self::probs`] is the law of `U_{r,n}`.
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn advance(&mut self) {
        let k = self.index as f64;
        let denom = self.r + k;
        self.probs.push(0.0);
        // Walk downward so P_k(u - 1) is still the old value when read.
        for u in (0..self.probs.len()).rev() {
            let stay = self.probs[u] * (1.0 - (self.r + u as f64) / denom);
            let up = if u > 0 { self.probs[u - 1] * (self.r + u as f64 - 1.0) / denom } else { 0.0 };
            self.probs[u] = stay + up;
        }
        self.index += 1;
    }
}

/// Exact law of `U_{r,n}` on `{0, ..., n - 1}`.
pub fn urn_pmf(spec: UrnSpec) -> Result<IntegerPmf> {
    spec.validate()?;
    let mut laws = UrnLaws::new(spec.r)?;
    while laws.index() < spec.n {
        laws.advance();
    }
    Ok(IntegerPmf::from_parts(laws.probs, 0.0))
}

/// Simulates the urn draw by draw.
pub fn urn_sample<R: Rng + ?Sized>(spec: UrnSpec, rng: &mut R) -> Result<u64> {
    spec.validate()?;
    let mut white = 0u64;
    for k in 1..spec.n {
        let u: f64 = rng.random();
        if u < (spec.r + white as f64) / (spec.r + k as f64) {
            white += 1;
        }
    }
    Ok(white)
}

/// `E[U (U - 1) ... (U - k + 1)] = r (n - 1) ... (n - k) / (r + k)`.
pub fn urn_falling_factorial_moment(spec: UrnSpec, k: usize) -> Result<f64> {
    spec.validate()?;
    if k == 0 {
        return domain("factorial moment order must be at least 1");
    }
    if k >= spec.n {
        return Ok(0.0);
    }
    let falling: f64 = (1..=k).map(|j| (spec.n - j) as f64).product();
    Ok(spec.r * falling / (spec.r + k as f64))
}

/// The law of `U_{r,X^s}`, with the mixture over `X^s` taken exactly.
pub fn r_equilibrium(pmf: &IntegerPmf, r: f64) -> Result<IntegerPmf> {
    let biased = size_bias(pmf)?;
    let mut laws = UrnLaws::new(r)?;
    let kmax = biased.kmax();
    let mut out = vec![0.0; kmax.max(1)];
    for k in 1..=kmax {
        while laws.index() < k {
            laws.advance();
        }
        let w = biased.get(k);
        if w == 0.0 {
            continue;
        }
        for (acc, p) in out.iter_mut().zip(laws.probs()) {
            *acc += w * p;
        }
    }
    Ok(IntegerPmf::from_parts(out, 0.0).with_discarded_tail(biased.discarded_tail()))
}

/// Half-L1 distance between a law and its `r`-equilibrium transform.
pub fn equilibrium_residual(pmf: &IntegerPmf, r: f64) -> Result<f64> {
    let eq = r_equilibrium(pmf, r)?;
    Ok(tv_exact(pmf, &eq).value)
}

/// Distance between `NB(r, p)` on `{0, ..., kmax}` (renormalized) and its
/// `r`-equilibrium transform. Small values certify the fixed point at this
/// truncation.
pub fn fixed_point_residual(params: NBParams, kmax: usize) -> Result<f64> {
    params.validate()?;
    if params.p >= 1.0 {
        return domain("fixed point residual needs p < 1");
    }
    let pmf = crate::distributions::nb_pmf(params, kmax)?.renormalized()?;
    equilibrium_residual(&pmf, params.r)
}

/// `D_r g(k) = (k/r + 1) g(k + 1) - (k/r) g(k)`.
pub fn d_r(g: &[f64], r: f64, k: usize) -> f64 {
    let kf = k as f64;
    (kf / r + 1.0) * g[k + 1] - (kf / r) * g[k]
}
