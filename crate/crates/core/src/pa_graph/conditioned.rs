//! `G_{nm}^{1,δ/m}` conditioned on vertex `k` attaching to `l`.
//!
//! The construction grows the graph normally up to `l - 1`. It then adds an
//! extra vertex `i′` holding `k`'s edge. `i′` absorbs the unit of degree that
//! the conditioning adds to `l`, so every attachment to `l` or `i′` here is an
//! attachment to `l` in the conditioned graph. For `l <= j < k` vertex `j`
//! chooses among `1..=j` and `i′` with weights `d + 1 + ε` (`1 + ε` for `j`
//! itself) and `i′` weighted by its in-degree; the normalizer is `j(2 + ε)`.
//! Vertex `k` receives nothing before step `k` and takes no step of its own
//! unless `k = l`, in which case it attaches to `i′` at step `k`. After `k`
//! growth is the usual preferential attachment over `1..=j` and `i′`.
//!
//! Whether `i′` carries an `ε` offset after step `k` is not fixed by the
//! description above; only the weight equal to its in-degree keeps the
//! normalizer at `j(2 + ε) - 1` and reproduces the conditional law, and that
//! is what [`generate_conditioned`] uses. [`IPrimeWeight::StandardOffset`]
//! exists so the alternative can be enumerated and rejected.

use rand::Rng;
use serde::Serialize;

use super::block;
use super::generate::{check_epsilon, draw_target};
use crate::distributions::PAParams;
use crate::error::{domain, Result};

/// Label of the extra vertex `i′` in attachment records.
pub const I_PRIME: usize = 0;

/// Largest `nm` [`enumerate_conditioned`] accepts.
const MAX_ENUMERATION_VERTICES: usize = 9;

/// Weight of `i′` once vertex `k` has been placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IPrimeWeight {
    /// In-degree only.
    NoOffset,
    /// In-degree plus `ε`, as for ordinary vertices.
    StandardOffset,
}

/// One outcome of the conditioned construction on `nm` vertices plus `i′`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionedGraph {
    vertices: usize,
    epsilon: f64,
    k: usize,
    l: usize,
    /// `targets[s - 1]` for `s = 1..=nm`; `targets[k - 1] == I_PRIME`.
    targets: Vec<usize>,
}

impl ConditionedGraph {
    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// In-degrees of vertices `1..=nm`, excluding `i′`.
    pub fn in_degrees(&self) -> Vec<u64> {
        let mut deg = vec![0u64; self.vertices];
        for &t in &self.targets {
            if t != I_PRIME {
                deg[t - 1] += 1;
            }
        }
        deg
    }

    /// `W_{nm,i′}`, counting the edge from `k`.
    pub fn i_prime_degree(&self) -> u64 {
        self.targets.iter().filter(|&&t| t == I_PRIME).count() as u64
    }

    /// `W_{n,i}(k,l)`: in-degree of collapsed vertex `i`, excluding `i′`.
    pub fn block_degree(&self, m: usize, i: usize) -> u64 {
        let (first, last) = block(m, i);
        self.in_degrees()[first - 1..last].iter().sum()
    }

    /// The event `B_{k,l}`: no vertex of block `i` other than `k` attaches
    /// inside the block or to `i′`.
    pub fn on_b(&self, m: usize, i: usize) -> bool {
        let (first, last) = block(m, i);
        (first..=last)
            .filter(|&s| s != self.k)
            .all(|s| {
                let t = self.targets[s - 1];
                t != I_PRIME && !(first..=last).contains(&t)
            })
    }

    /// The attachment record with `i′` merged back into `l`.
    pub fn merged_targets(&self) -> Vec<usize> {
        self.targets.iter().map(|&t| if t == I_PRIME { self.l } else { t }).collect()
    }
}

fn check_indices(vertices: usize, k: usize, l: usize, epsilon: f64) -> Result<()> {
    check_epsilon(epsilon)?;
    if l == 0 || l > k || k > vertices {
        return domain(format!("need 1 <= l <= k <= {vertices}, got k={k}, l={l}"));
    }
    Ok(())
}

/// Conditioned construction for collapsed vertex `i = ceil(l / m)` of
/// `G_n^{m,δ}`, in `O(nm)`.
pub fn generate_conditioned<R: Rng + ?Sized>(
    n: usize,
    params: PAParams,
    k: usize,
    l: usize,
    rng: &mut R,
) -> Result<ConditionedGraph> {
    params.validate()?;
    let vertices = n * params.m;
    let eps = params.epsilon();
    check_indices(vertices, k, l, eps)?;
    // `endpoints` lists the head of every edge placed so far, `i′` included;
    // with it the usual sampler realizes both normalizers, since vertex `k`
    // is absent from `1..=j` for `j < k` and `i′` has no offset.
    let mut endpoints: Vec<usize> = Vec::with_capacity(vertices + 1);
    let mut targets = vec![0usize; vertices];
    for j in 1..=vertices {
        if j == l {
            endpoints.push(I_PRIME);
        }
        if j == k {
            targets[j - 1] = I_PRIME;
            continue;
        }
        let t = draw_target(&endpoints, j, eps, rng);
        targets[j - 1] = t;
        endpoints.push(t);
    }
    Ok(ConditionedGraph { vertices, epsilon: eps, k, l, targets })
}

/// What vertex `j` does in the conditioned construction.
enum Step {
    Fixed,
    Weighted(Vec<(usize, f64)>),
}

/// Attachment law of vertex `j` given the in-degrees so far (`in_degree[0]`
/// belongs to `i′` and already counts `k`'s edge).
fn step_law(j: usize, k: usize, l: usize, epsilon: f64, in_degree: &[u64], variant: IPrimeWeight) -> Step {
    if j == k {
        return Step::Fixed;
    }
    let w = 1.0 + epsilon;
    let mut law: Vec<(usize, f64)> = (1..j).map(|v| (v, in_degree[v] as f64 + w)).collect();
    law.push((j, w));
    if j >= l {
        let offset = match variant {
            IPrimeWeight::StandardOffset if j > k => epsilon,
            _ => 0.0,
        };
        law.push((I_PRIME, in_degree[I_PRIME] as f64 + offset));
    }
    let total: f64 = law.iter().map(|(_, w)| w).sum();
    for entry in &mut law {
        entry.1 /= total;
    }
    Step::Weighted(law)
}

/// Every outcome of the conditioned construction on `vertices <= 9`
/// vertices with its probability.
pub fn enumerate_conditioned(
    vertices: usize,
    epsilon: f64,
    k: usize,
    l: usize,
    variant: IPrimeWeight,
) -> Result<Vec<(ConditionedGraph, f64)>> {
    check_indices(vertices, k, l, epsilon)?;
    if vertices > MAX_ENUMERATION_VERTICES {
        return domain(format!("enumeration is limited to {MAX_ENUMERATION_VERTICES} vertices"));
    }
    let mut out = Vec::new();
    let mut in_degree = vec![0u64; vertices + 1];
    in_degree[I_PRIME] = 1;
    let mut targets = Vec::with_capacity(vertices);
    let ctx = Walk { vertices, epsilon, k, l, variant };
    ctx.descend(1, 1.0, &mut targets, &mut in_degree, &mut out);
    Ok(out)
}

struct Walk {
    vertices: usize,
    epsilon: f64,
    k: usize,
    l: usize,
    variant: IPrimeWeight,
}

impl Walk {
    fn descend(
        &self,
        j: usize,
        prob: f64,
        targets: &mut Vec<usize>,
        in_degree: &mut [u64],
        out: &mut Vec<(ConditionedGraph, f64)>,
    ) {
        if j > self.vertices {
            let graph = ConditionedGraph {
                vertices: self.vertices,
                epsilon: self.epsilon,
                k: self.k,
                l: self.l,
                targets: targets.clone(),
            };
            out.push((graph, prob));
            return;
        }
        match step_law(j, self.k, self.l, self.epsilon, in_degree, self.variant) {
            Step::Fixed => {
                // k's edge was counted in i′ from the start
                targets.push(I_PRIME);
                self.descend(j + 1, prob, targets, in_degree, out);
                targets.pop();
            }
            Step::Weighted(law) => {
                for (t, p) in law {
                    if p == 0.0 {
                        continue;
                    }
                    targets.push(t);
                    in_degree[t] += 1;
                    self.descend(j + 1, prob * p, targets, in_degree, out);
                    in_degree[t] -= 1;
                    targets.pop();
                }
            }
        }
    }
}
