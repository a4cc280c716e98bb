use rand::distr::{Distribution, Open01};
use rand::Rng;

use super::IntegerPmf;
use crate::error::{domain, Result};

/// Inverse-CDF sampler over the explicit entries of a pmf.
#[derive(Debug, Clone)]
pub struct PmfSampler {
    cumulative: Vec<f64>,
}

impl PmfSampler {
    /// Samples from the pmf conditioned on its explicit support.
    pub fn new(pmf: &IntegerPmf) -> Result<Self> {
        Self::from_weights(pmf.probs())
    }

    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in weights {
            if !(w.is_finite() && *w >= 0.0) {
                return domain("sampler weights must be non-negative");
            }
            acc += w;
            cumulative.push(acc);
        }
        if !(acc > 0.0) {
            return domain("sampler weights sum to zero");
        }
        Ok(Self { cumulative })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty");
        let u: f64 = Open01.sample(rng);
        let target = u * total;
        let idx = self.cumulative.partition_point(|c| *c <= target);
        idx.min(self.cumulative.len() - 1)
    }
}
