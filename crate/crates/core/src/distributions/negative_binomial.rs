use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::Serialize;

use super::pmf::{compensated_sum, rising};
use super::IntegerPmf;
use crate::error::{domain, Error, Result};
use crate::numerics::{ln_gamma_ratio, log_gamma, GammaRatioQuery};

/// Parameters of `NB(r, p)`: the number of failures before the `r`-th
/// success, `P(k) = Γ(r + k) / (k! Γ(r)) (1 - p)^k p^r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NBParams {
    pub r: f64,
    pub p: f64,
}

impl NBParams {
    pub fn new(r: f64, p: f64) -> Result<Self> {
        let params = Self { r, p };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r > 0.0) {
            return domain(format!("NB shape must be positive, got r={}", self.r));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return domain(format!("NB success probability must lie in (0, 1], got p={}", self.p));
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.r * (1.0 - self.p) / self.p
    }

    /// `ln P(Y = k)`; `-inf` outside the support.
    pub fn ln_pmf(&self, k: usize) -> f64 {
        if self.p == 1.0 {
            return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
        }
        let kf = k as f64;
        let ln_rising = ln_gamma_ratio(GammaRatioQuery { z: self.r, a: kf, b: 0.0 })
            .expect("validated NB parameters");
        let ln_fact = log_gamma(kf + 1.0).expect("k + 1 >= 1");
        ln_rising - ln_fact + kf * (-self.p).ln_1p() + self.r * self.p.ln()
    }

    pub fn pmf_at(&self, k: usize) -> f64 {
        self.ln_pmf(k).exp()
    }

    /// Upper bound on `P(Y > k)` from the geometric decay of the pmf ratio,
    /// valid once the ratio is below one.
    fn tail_bound_after(&self, k: usize, pk: f64) -> Option<f64> {
        let q = 1.0 - self.p;
        let ratio = q * (self.r + k as f64) / (k as f64 + 1.0);
        // The ratio is monotone in k with limit q, so its supremum beyond k
        // is the larger of the two.
        let sup = ratio.max(q);
        (sup < 1.0).then(|| pk * sup / (1.0 - sup))
    }
}

/// `NB(r, p)` on `{0, ..., kmax}`, evaluated in log space, with
/// `tail_mass = 1 - sum(probs)`.
pub fn nb_pmf(params: NBParams, kmax: usize) -> Result<IntegerPmf> {
    params.validate()?;
    let probs: Vec<f64> = (0..=kmax).map(|k| params.pmf_at(k)).collect();
    let tail = (1.0 - compensated_sum(probs.iter().copied())).max(0.0);
    Ok(IntegerPmf::from_parts(probs, tail))
}

/// `NB(r, p)` truncated at the first `kmax` past the mode whose remaining
/// tail is provably below `tail_tol`.
pub fn nb_pmf_adaptive(params: NBParams, tail_tol: f64) -> Result<IntegerPmf> {
    params.validate()?;
    if !(tail_tol > 0.0) {
        return domain("tail tolerance must be positive");
    }
    let mode_guard = (params.mean() + 1.0).ceil() as usize;
    let mut probs = Vec::new();
    for k in 0.. {
        let pk = params.pmf_at(k);
        probs.push(pk);
        if k >= mode_guard || params.p == 1.0 {
            if let Some(bound) = params.tail_bound_after(k, pk) {
                if bound < tail_tol {
                    break;
                }
            }
        }
    }
    let tail = (1.0 - compensated_sum(probs.iter().copied())).max(0.0);
    Ok(IntegerPmf::from_parts(probs, tail))
}

/// One draw from `NB(r, p)`.
///
/// Exact gamma-Poisson mixture: `Λ ~ Gamma(r, (1 - p) / p)` then
/// `Y | Λ ~ Poisson(Λ)`. Both component samplers (Marsaglia-Tsang gamma,
/// PTRS Poisson) are exact rejection algorithms.
pub fn nb_sample<R: Rng + ?Sized>(params: NBParams, rng: &mut R) -> Result<u64> {
    params.validate()?;
    if params.p == 1.0 {
        return Ok(0);
    }
    let scale = (1.0 - params.p) / params.p;
    let gamma = Gamma::new(params.r, scale).map_err(|e| Error::Domain(e.to_string()))?;
    let lambda: f64 = gamma.sample(rng);
    if lambda <= 0.0 {
        return Ok(0);
    }
    if lambda >= Poisson::<f64>::MAX_LAMBDA {
        return domain(format!("Poisson rate {lambda:e} exceeds the sampler range"));
    }
    let poisson = Poisson::new(lambda).map_err(|e| Error::Domain(e.to_string()))?;
    Ok(poisson.sample(rng) as u64)
}

/// `E[Y (Y - 1) ... (Y - k + 1)] = r (r + 1) ... (r + k - 1) ((1 - p) / p)^k`.
pub fn nb_falling_factorial_moment(params: NBParams, k: usize) -> Result<f64> {
    params.validate()?;
    if k == 0 {
        return domain("factorial moment order must be at least 1");
    }
    if params.p == 1.0 {
        return Ok(0.0);
    }
    Ok(rising(params.r, k) * ((1.0 - params.p) / params.p).powi(k as i32))
}
