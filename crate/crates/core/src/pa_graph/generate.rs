use rand::Rng;
use serde::Serialize;

use crate::distributions::PAParams;
use crate::error::{domain, Result};

/// Attachment record of `G_n^{1,ε}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PAGraphM1 {
    n: usize,
    epsilon: f64,
    /// `targets[s - 1]` is the vertex that vertex `s` attaches to.
    targets: Vec<usize>,
}

impl PAGraphM1 {
    /// Wraps an explicit attachment record after checking `1 <= targets[s] <= s`.
    pub fn from_targets(epsilon: f64, targets: Vec<usize>) -> Result<Self> {
        check_epsilon(epsilon)?;
        if targets.is_empty() {
            return domain("a graph needs at least one vertex");
        }
        for (idx, &t) in targets.iter().enumerate() {
            if t == 0 || t > idx + 1 {
                return domain(format!("vertex {} cannot attach to {t}", idx + 1));
            }
        }
        Ok(Self { n: targets.len(), epsilon, targets })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// Target of vertex `s` (1-based).
    pub fn target(&self, s: usize) -> usize {
        self.targets[s - 1]
    }

    pub fn in_degrees(&self) -> Vec<u64> {
        let mut deg = vec![0u64; self.n];
        for &t in &self.targets {
            deg[t - 1] += 1;
        }
        deg
    }
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon.is_finite() && epsilon > -1.0) {
        return domain(format!("epsilon must exceed -1, got {epsilon}"));
    }
    Ok(())
}

/// Draws the target of vertex `s` given the targets of the earlier edges.
///
/// Vertex `v < s` must be chosen with probability `(d_v + 1 + ε) / (s(2 + ε) - 1)`
/// and `s` itself with `(1 + ε) / (s(2 + ε) - 1)`, where `d_v` is the in-degree.
/// Split the normalizer `s(2 + ε) - 1 = (s - 1) + s(1 + ε)`: a point `u`
/// uniform on it lands in the first part with probability
/// `(s - 1) / (s(2 + ε) - 1)`, and then `floor(u)` indexes a uniform earlier
/// edge, whose endpoint is `v` with probability `d_v / (s - 1)`. Otherwise
/// `u` picks one of the `s` vertices uniformly, each with weight `1 + ε`.
/// Summing the two parts gives exactly the rule above for every `ε > -1`.
///
/// `endpoints` may contain labels outside `1..=s` (the conditioned
/// construction stores its extra vertex there); they are weighted by their
/// multiplicity with no offset.
#[inline]
pub(crate) fn draw_target<R: Rng + ?Sized>(endpoints: &[usize], s: usize, epsilon: f64, rng: &mut R) -> usize {
    let edges = endpoints.len() as f64;
    let total = edges + s as f64 * (1.0 + epsilon);
    let u = rng.random::<f64>() * total;
    if u < edges {
        endpoints[u as usize]
    } else {
        (1 + ((u - edges) / (1.0 + epsilon)) as usize).min(s)
    }
}

/// Grows `G_n^{1,ε}` in `O(n)`.
pub fn generate_m1<R: Rng + ?Sized>(n: usize, epsilon: f64, rng: &mut R) -> Result<PAGraphM1> {
    check_epsilon(epsilon)?;
    if n == 0 {
        return domain("a graph needs at least one vertex");
    }
    let mut targets = Vec::with_capacity(n);
    targets.push(1);
    for s in 2..=n {
        let t = draw_target(&targets, s, epsilon, rng);
        targets.push(t);
    }
    Ok(PAGraphM1 { n, epsilon, targets })
}

/// In-degrees of `G_{n/m}^{m,δ}` from `G_n^{1,δ/m}`.
pub fn collapse(g: &PAGraphM1, m: usize) -> Result<Vec<u64>> {
    if m == 0 || !g.n.is_multiple_of(m) {
        return domain(format!("cannot collapse {} vertices into blocks of {m}", g.n));
    }
    Ok(g.in_degrees().chunks(m).map(|c| c.iter().sum()).collect())
}

/// In-degree sequence of one draw of `G_n^{m,δ}`.
pub fn collapsed_in_degrees<R: Rng + ?Sized>(n: usize, params: PAParams, rng: &mut R) -> Result<Vec<u64>> {
    params.validate()?;
    let g = generate_m1(n * params.m, params.epsilon(), rng)?;
    collapse(&g, params.m)
}

/// In-degree of a uniformly chosen vertex of a fresh `G_n^{m,δ}`.
#[allow(non_snake_case)]
pub fn sample_W<R: Rng + ?Sized>(n: usize, params: PAParams, rng: &mut R) -> Result<u64> {
    let degrees = collapsed_in_degrees(n, params, rng)?;
    Ok(degrees[rng.random_range(0..n)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn single_vertex_is_a_loop() {
        let g = generate_m1(1, 0.3, &mut stream_rng(1, 0)).unwrap();
        assert_eq!(g.targets(), &[1]);
        assert_eq!(g.in_degrees(), vec![1]);
    }

    #[test]
    fn second_vertex_self_loop_rate() {
        let mut rng = stream_rng(2, 0);
        let trials = 300_000;
        let loops = (0..trials)
            .filter(|_| generate_m1(2, 0.0, &mut rng).unwrap().target(2) == 2)
            .count();
        let freq = loops as f64 / trials as f64;
        // 1/3 with standard error 8.6e-4
        assert!((freq - 1.0 / 3.0).abs() < 4e-3, "{freq}");
    }

    #[test]
    fn edges_are_conserved() {
        let mut rng = stream_rng(3, 0);
        for (n, eps) in [(10, 0.0), (1000, -0.7), (5000, 3.0)] {
            let g = generate_m1(n, eps, &mut rng).unwrap();
            assert_eq!(g.in_degrees().iter().sum::<u64>(), n as u64);
            assert!(g.targets().iter().enumerate().all(|(i, &t)| t >= 1 && t <= i + 1));
        }
    }

    #[test]
    fn collapse_examples() {
        let g = PAGraphM1::from_targets(0.5, vec![1, 1, 2, 3, 3, 1]).unwrap();
        assert_eq!(collapse(&g, 1).unwrap(), g.in_degrees());
        assert_eq!(collapse(&g, 2).unwrap(), vec![4, 2, 0]);
        assert_eq!(collapse(&g, 6).unwrap(), vec![6]);
        assert!(collapse(&g, 4).is_err());

        let mut rng = stream_rng(4, 0);
        for m in 1..5 {
            let params = PAParams::new(m, 0.5).unwrap();
            assert_eq!(collapsed_in_degrees(1, params, &mut rng).unwrap(), vec![m as u64]);
            let degs = collapsed_in_degrees(300, params, &mut rng).unwrap();
            assert_eq!(degs.iter().sum::<u64>(), 300 * m as u64);
        }
    }

    #[test]
    fn rejects_bad_targets() {
        assert!(PAGraphM1::from_targets(0.0, vec![1, 3]).is_err());
        assert!(PAGraphM1::from_targets(0.0, vec![0]).is_err());
        assert!(PAGraphM1::from_targets(-1.0, vec![1]).is_err());
        assert!(generate_m1(0, 0.0, &mut stream_rng(0, 0)).is_err());
    }

    #[test]
    fn two_vertex_w_law() {
        let params = PAParams::new(1, 0.0).unwrap();
        let mut rng = stream_rng(5, 0);
        let trials = 300_000;
        let mut counts = [0u64; 3];
        for _ in 0..trials {
            counts[sample_W(2, params, &mut rng).unwrap() as usize] += 1;
        }
        // P(W=0) = 1/2 * 2/3, P(W=1) = 1/2 * 1/3 + 1/2 * 1/3, P(W=2) = 1/2 * 2/3
        let want = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
        for (c, w) in counts.iter().zip(want) {
            assert!((*c as f64 / trials as f64 - w).abs() < 4e-3);
        }
        assert_eq!(sample_W(1, PAParams::new(3, 1.0).unwrap(), &mut rng).unwrap(), 3);
    }
}
