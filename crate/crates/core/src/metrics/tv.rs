use serde::Serialize;

use crate::distributions::{compensated_sum, IntegerPmf};
use crate::error::{domain, Result};

/// A total variation value with an error bracket from truncated tails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TvDistance {
    /// `(1/2) sum_k |p_k - q_k| + (1/2) |p.tail - q.tail|`, clamped to `[0, 1]`.
    pub value: f64,
    /// The true distance lies within `value ± bracket`.
    pub bracket: f64,
}

/// Total variation distance between two truncated pmfs, entries aligned by
/// index and tails compared as a single lump.
pub fn tv_exact(p: &IntegerPmf, q: &IntegerPmf) -> TvDistance {
    let len = p.len().max(q.len());
    let body = compensated_sum((0..len).map(|k| (p.get(k) - q.get(k)).abs()));
    let value = 0.5 * body + 0.5 * (p.tail_mass() - q.tail_mass()).abs();
    TvDistance { value: value.clamp(0.0, 1.0), bracket: 0.5 * (p.tail_mass() + q.tail_mass()) }
}

/// Upper bound `r ε / (p - ε)` on `d_TV(NB(r, p), NB(r, p - ε))`.
pub fn tv_nb_shift_bound(r: f64, p: f64, eps: f64) -> Result<f64> {
    if !(r > 0.0 && 0.0 <= eps && eps < p && p <= 1.0) {
        return domain(format!("shift bound needs r > 0 and 0 <= eps < p <= 1, got r={r} p={p} eps={eps}"));
    }
    Ok(r * eps / (p - eps))
}

/// Normalized histogram of the samples.
pub fn empirical_pmf(samples: &[u64]) -> Result<IntegerPmf> {
    let Some(&max) = samples.iter().max() else {
        return domain("empirical pmf of an empty sample");
    };
    let mut counts = vec![0u64; max as usize + 1];
    for &s in samples {
        counts[s as usize] += 1;
    }
    IntegerPmf::from_counts(&counts)
}

impl IntegerPmf {
    /// Normalized histogram from per-value counts.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return domain("histogram with no observations");
        }
        let n = total as f64;
        IntegerPmf::new(counts.iter().map(|&c| c as f64 / n).collect(), 0.0)
    }
}
