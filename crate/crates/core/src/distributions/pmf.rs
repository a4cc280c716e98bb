use serde::Serialize;
use std::io::{self, Write};

use crate::error::{domain, Result};

/// Allowed deviation of `sum(probs) + tail_mass` from one.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// A probability mass function on `{0, 1, ...}` truncated at `len() - 1`,
/// with the mass beyond the truncation point carried in `tail_mass`.
///
/// `discarded_tail` records tail mass that an upstream transform had to drop
/// because it could not be pushed through (size biasing a truncated law, for
/// instance). It is a record of what was lost, not an error bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegerPmf {
    probs: Vec<f64>,
    tail_mass: f64,
    discarded_tail: f64,
}

impl IntegerPmf {
    pub fn new(probs: Vec<f64>, tail_mass: f64) -> Result<Self> {
        if let Some((k, p)) = probs.iter().enumerate().find(|(_, p)| !(p.is_finite() && **p >= 0.0)) {
            return domain(format!("probability at k={k} is {p}"));
        }
        if !(tail_mass.is_finite() && tail_mass >= 0.0) {
            return domain(format!("tail mass {tail_mass} is not a probability"));
        }
        let total = compensated_sum(probs.iter().copied()) + tail_mass;
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return domain(format!("pmf total {total} is not 1 within {NORMALIZATION_TOL:e}"));
        }
        Ok(Self { probs, tail_mass, discarded_tail: 0.0 })
    }

    /// Builds a pmf from non-negative weights with no tail, normalizing them.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total = compensated_sum(weights.iter().copied());
        if !(total.is_finite() && total > 0.0) {
            return domain("weights must have a positive finite total");
        }
        Self::new(weights.into_iter().map(|w| w / total).collect(), 0.0)
    }

    pub fn point_mass(k: usize) -> Self {
        let mut probs = vec![0.0; k + 1];
        probs[k] = 1.0;
        Self { probs, tail_mass: 0.0, discarded_tail: 0.0 }
    }

    /// `probs` and `tail_mass` are trusted to be normalized by construction.
    pub(crate) fn from_parts(probs: Vec<f64>, tail_mass: f64) -> Self {
        debug_assert!(probs.iter().all(|p| *p >= 0.0));
        Self { probs, tail_mass: tail_mass.max(0.0), discarded_tail: 0.0 }
    }

    pub(crate) fn with_discarded_tail(mut self, discarded: f64) -> Self {
        self.discarded_tail = discarded;
        self
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn discarded_tail(&self) -> f64 {
        self.discarded_tail
    }

    /// Number of explicit entries (`kmax + 1`).
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn kmax(&self) -> usize {
        self.probs.len().saturating_sub(1)
    }

    /// Probability of `k`, zero beyond the truncation point.
    pub fn get(&self, k: usize) -> f64 {
        self.probs.get(k).copied().unwrap_or(0.0)
    }

    /// Mean over the explicit entries (ignores the tail).
    pub fn mean(&self) -> f64 {
        compensated_sum(self.probs.iter().enumerate().map(|(k, p)| k as f64 * p))
    }

    /// `E[X (X - 1) ... (X - order + 1)]` over the explicit entries.
    pub fn falling_factorial_moment(&self, order: usize) -> f64 {
        compensated_sum(self.probs.iter().enumerate().map(|(k, p)| falling(k as f64, order) * p))
    }

    /// Drops the tail and rescales the explicit entries to sum to one.
    pub fn renormalized(&self) -> Result<Self> {
        let mut out = Self::from_weights(self.probs.clone())?;
        out.discarded_tail = self.tail_mass + self.discarded_tail;
        Ok(out)
    }

    /// Trailing zero entries removed.
    pub fn trimmed(mut self) -> Self {
        while self.probs.len() > 1 && self.probs.last() == Some(&0.0) {
            self.probs.pop();
        }
        self
    }

    /// Finite mixture `sum_j weights[j] * components[j]`; weights must sum to one.
    pub fn mixture(weights: &[f64], components: &[IntegerPmf]) -> Result<Self> {
        if weights.len() != components.len() || weights.is_empty() {
            return domain("mixture needs one weight per component");
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return domain("mixture weights must be non-negative");
        }
        let len = components.iter().map(|c| c.len()).max().unwrap_or(0);
        let mut probs = vec![0.0; len];
        let mut tail = 0.0;
        let mut discarded = 0.0;
        for (w, c) in weights.iter().zip(components) {
            for (acc, p) in probs.iter_mut().zip(&c.probs) {
                *acc += w * p;
            }
            tail += w * c.tail_mass;
            discarded += w * c.discarded_tail;
        }
        let mut out = Self::new(probs, tail)?;
        out.discarded_tail = discarded;
        Ok(out)
    }

    /// CSV with header `k,prob`, one row per entry and a final `tail,<mass>` row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "k,prob")?;
        for (k, p) in self.probs.iter().enumerate() {
            writeln!(out, "{k},{p:e}")?;
        }
        writeln!(out, "tail,{:e}", self.tail_mass)
    }
}

/// `x (x - 1) ... (x - order + 1)`.
pub(crate) fn falling(x: f64, order: usize) -> f64 {
    (0..order).map(|j| x - j as f64).product()
}

/// `x (x + 1) ... (x + order - 1)`.
pub(crate) fn rising(x: f64, order: usize) -> f64 {
    (0..order).map(|j| x + j as f64).product()
}
