//! The mixed negative binomial law `K(m, δ)`: `NB(m + δ, U^{1/(2 + δ/m)})`
//! with `U` uniform on `(0, 1)`.
//!
//! Its point probabilities are
//!
//! ```text
//! P(Z = l) = (2 + δ/m) Γ(l + m + δ) Γ(m + 2 + δ + δ/m) / (Γ(m + δ) Γ(l + m + 3 + δ + δ/m))
//! ```
//!
//! and, because consecutive terms telescope, the tail has the closed form
//! `P(Z >= L) = [Γ(m + 2 + δ + δ/m) / Γ(m + δ)] Γ(L + m + δ) / Γ(L + m + 2 + δ + δ/m)`,
//! a power law of exponent `2 + δ/m`.

use rand::distr::{Distribution, Open01};
use rand::Rng;
use serde::Serialize;

use super::negative_binomial::{nb_sample, NBParams};
use super::pmf::compensated_sum;
use super::IntegerPmf;
use crate::error::{domain, Result};
use crate::numerics::{gamma_ratio, ln_gamma_ratio, log_gamma, GammaRatioQuery};

/// Parameters `(m, δ)` of the preferential attachment model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PAParams {
    pub m: usize,
    pub delta: f64,
}

impl PAParams {
    pub fn new(m: usize, delta: f64) -> Result<Self> {
        let params = Self { m, delta };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return domain("m must be at least 1");
        }
        if !(self.delta.is_finite() && self.delta > -(self.m as f64)) {
            return domain(format!("delta must exceed -m, got m={} delta={}", self.m, self.delta));
        }
        Ok(())
    }

    /// `δ/m`, the offset of the underlying `m = 1` model.
    pub fn epsilon(&self) -> f64 {
        self.delta / self.m as f64
    }

    /// Shape `m + δ` of the limiting negative binomial mixture.
    pub fn shape(&self) -> f64 {
        self.m as f64 + self.delta
    }

    /// `3 + δ/m`.
    pub fn tail_exponent(&self) -> f64 {
        3.0 + self.epsilon()
    }

    /// `1 / (2 + δ/m)`.
    pub fn mixing_exponent(&self) -> f64 {
        1.0 / (2.0 + self.epsilon())
    }

    /// `c_{m,δ} = (2 + δ/m) Γ(m + 2 + δ + δ/m) / Γ(m + δ)`, so that
    /// `P(Z = l) ~ c_{m,δ} l^{-(3 + δ/m)}`.
    pub fn tail_constant(&self) -> f64 {
        (2.0 + self.epsilon()) * self.head_ratio()
    }

    /// `Γ(m + 2 + δ + δ/m) / Γ(m + δ)`.
    fn head_ratio(&self) -> f64 {
        gamma_ratio(GammaRatioQuery { z: self.shape(), a: 2.0 + self.epsilon(), b: 0.0 })
            .expect("validated PA parameters")
    }
}

/// `P(Z >= from)` for `Z ~ K(m, δ)`.
pub fn k_tail(params: PAParams, from: usize) -> Result<f64> {
    params.validate()?;
    let r = params.shape();
    let c = 2.0 + params.epsilon();
    let ratio = gamma_ratio(GammaRatioQuery::new(from as f64 + r, 0.0, c)?)?;
    Ok(params.head_ratio() * ratio)
}

/// `K(m, δ)` on `{0, ..., kmax}`.
pub fn k_pmf(params: PAParams, kmax: usize) -> Result<IntegerPmf> {
    params.validate()?;
    let r = params.shape();
    let c = 3.0 + params.epsilon();
    let lead = (2.0 + params.epsilon()).ln() + params.head_ratio().ln();
    let probs: Vec<f64> = (0..=kmax)
        .map(|l| {
            let q = GammaRatioQuery { z: l as f64 + r, a: 0.0, b: c };
            (lead + ln_gamma_ratio(q).expect("validated")).exp()
        })
        .collect();
    let tail = k_tail(params, kmax + 1)?;
    let pmf = IntegerPmf::from_parts(probs, tail);
    debug_assert!((compensated_sum(pmf.probs().iter().copied()) + tail - 1.0).abs() < 1e-11);
    Ok(pmf)
}

/// Smallest truncation point with `P(Z > kmax) < tail_tol`.
pub fn k_kmax_for(params: PAParams, tail_tol: f64) -> Result<usize> {
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return domain("tail tolerance must lie in (0, 1)");
    }
    let mut hi = 1usize;
    while k_tail(params, hi + 1)? >= tail_tol {
        hi = hi.checked_mul(2).ok_or_else(|| crate::Error::Resource("tail too heavy".into()))?;
    }
    let mut lo = 0usize;
    // Invariant: tail(hi + 1) < tol; tail(lo + 1) unknown.
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if k_tail(params, mid + 1)? < tail_tol {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(hi)
}

/// `K(m, δ)` truncated where its tail first drops below `tail_tol`.
pub fn k_pmf_adaptive(params: PAParams, tail_tol: f64) -> Result<IntegerPmf> {
    params.validate()?;
    k_pmf(params, k_kmax_for(params, tail_tol)?)
}

/// One draw of `NB(m + δ, U^{1/(2 + δ/m)})`, `U` uniform on the open unit interval.
pub fn k_sample<R: Rng + ?Sized>(params: PAParams, rng: &mut R) -> Result<u64> {
    params.validate()?;
    let u: f64 = Open01.sample(rng);
    let p = u.powf(params.mixing_exponent());
    nb_sample(NBParams { r: params.shape(), p }, rng)
}

/// Law of `NB(m + δ, U^{1/(2 + δ/m)})` with `U` uniform on `(lo, hi)`, a
/// sub-interval of the unit interval, on `{0, ..., kmax}`.
///
/// With `x = u^{1/(2 + δ/m)}` and `α = m + δ + 2 + δ/m`, the slice pmf is
/// `K(l) [I_{x_hi}(α, l + 1) - I_{x_lo}(α, l + 1)] / (hi - lo)`, where the
/// regularized incomplete beta differences follow the upward recurrence
/// `I_x(α, b + 1) = I_x(α, b) + x^α (1 - x)^b Γ(α + b) / (Γ(α) Γ(b + 1))`.
pub fn k_slice_pmf(params: PAParams, lo: f64, hi: f64, kmax: usize) -> Result<IntegerPmf> {
    params.validate()?;
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return domain(format!("slice ({lo}, {hi}) is not a sub-interval of (0, 1)"));
    }
    let k = k_pmf(params, kmax)?;
    let c = params.mixing_exponent();
    let alpha = params.shape() + 2.0 + params.epsilon();
    let (x_lo, x_hi) = (lo.powf(c), hi.powf(c));
    let ln_gamma_alpha = log_gamma(alpha)?;
    // ln [x^α (1 - x)^b Γ(α + b) / (Γ(α) Γ(b + 1))]
    let ln_step = |x: f64, b: f64| -> f64 {
        if x <= 0.0 || x >= 1.0 {
            return f64::NEG_INFINITY;
        }
        let ln_coeff = ln_gamma_ratio(GammaRatioQuery { z: b, a: alpha, b: 1.0 }).expect("b >= 1")
            - ln_gamma_alpha;
        alpha * x.ln() + b * (-x).ln_1p() + ln_coeff
    };
    let width = hi - lo;
    let mut diff = x_hi.powf(alpha) - x_lo.powf(alpha);
    let mut probs = Vec::with_capacity(kmax + 1);
    for l in 0..=kmax {
        probs.push(k.get(l) * diff.max(0.0) / width);
        let b = l as f64 + 1.0;
        diff += ln_step(x_hi, b).exp() - ln_step(x_lo, b).exp();
    }
    let tail = (1.0 - compensated_sum(probs.iter().copied())).max(0.0);
    Ok(IntegerPmf::from_parts(probs, tail))
}
