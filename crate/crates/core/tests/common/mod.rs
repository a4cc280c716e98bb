//! Brute-force enumeration of the unconditioned `m = 1` growth process,
//! written from the attachment rule alone.

#![allow(dead_code)]

use std::collections::BTreeMap;

/// Every attachment record of `G_vertices^{1,ε}` with its probability.
/// `targets[s - 1]` is the head of vertex `s`'s edge.
pub fn enumerate_graphs(vertices: usize, epsilon: f64) -> Vec<(Vec<usize>, f64)> {
    let mut out = Vec::new();
    let mut targets = Vec::new();
    // total degree (in + out) of each vertex, 1-based
    let mut degree = vec![0u64; vertices + 1];
    walk(1, vertices, epsilon, 1.0, &mut targets, &mut degree, &mut out);
    out
}

fn walk(
    s: usize,
    vertices: usize,
    eps: f64,
    prob: f64,
    targets: &mut Vec<usize>,
    degree: &mut [u64],
    out: &mut Vec<(Vec<usize>, f64)>,
) {
    if s > vertices {
        out.push((targets.clone(), prob));
        return;
    }
    let denom = s as f64 * (2.0 + eps) - 1.0;
    for v in 1..=s {
        let p = if v == s { (1.0 + eps) / denom } else { (degree[v] as f64 + eps) / denom };
        targets.push(v);
        degree[s] += 1; // out-edge
        degree[v] += 1; // in-edge
        walk(s + 1, vertices, eps, prob * p, targets, degree, out);
        degree[v] -= 1;
        degree[s] -= 1;
        targets.pop();
    }
}

pub fn in_degrees(targets: &[usize]) -> Vec<u64> {
    let mut deg = vec![0u64; targets.len()];
    for &t in targets {
        deg[t - 1] += 1;
    }
    deg
}

/// In-degree of collapsed vertex `i` (blocks of `m`).
pub fn block_degree(targets: &[usize], m: usize, i: usize) -> u64 {
    in_degrees(targets)[m * (i - 1)..m * i].iter().sum()
}

/// Law of the graph given that vertex `k` attaches to `l`.
pub fn condition_on_edge(graphs: &[(Vec<usize>, f64)], k: usize, l: usize) -> BTreeMap<Vec<usize>, f64> {
    let mass: f64 = graphs.iter().filter(|(t, _)| t[k - 1] == l).map(|(_, p)| p).sum();
    graphs
        .iter()
        .filter(|(t, _)| t[k - 1] == l)
        .map(|(t, p)| (t.clone(), p / mass))
        .collect()
}

/// Law of a statistic as a dense vector.
pub fn law_of<I: IntoIterator<Item = (u64, f64)>>(items: I) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for (v, p) in items {
        let v = v as usize;
        if v >= out.len() {
            out.resize(v + 1, 0.0);
        }
        out[v] += p;
    }
    out
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    (0..a.len().max(b.len()))
        .map(|k| (a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max)
}

pub fn half_l1<K: Ord + Clone>(a: &BTreeMap<K, f64>, b: &BTreeMap<K, f64>) -> f64 {
    let mut keys: Vec<&K> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    0.5 * keys.iter().map(|k| (a.get(*k).unwrap_or(&0.0) - b.get(*k).unwrap_or(&0.0)).abs()).sum::<f64>()
}

/// `(m, δ)` pairs covered by the enumeration checks.
pub const ENUMERATION_PARAMS: [(usize, f64); 3] = [(1, 0.0), (1, 0.5), (2, 1.0)];

/// Largest `nm` enumerated.
pub const MAX_VERTICES: usize = 6;

use pa_stein::pa_graph::{
    conditional_attachment_probability, enumerate_conditioned, expected_attachment, expected_in_degree,
    DegreeQuery, IPrimeWeight,
};
use pa_stein::transforms::{size_bias, urn_pmf, UrnSpec};
use pa_stein::{IntegerPmf, PAParams};

/// Largest deviations found by [`enumeration_errors`].
#[derive(Debug, Default, Clone, Copy)]
pub struct EnumerationErrors {
    /// Enumerated `E X_{k,l}` against the closed form.
    pub attachment: f64,
    /// Conditional attachment probabilities against the product formula.
    pub conditional_step: f64,
    /// Conditioned construction (with `i′` merged into `l`) against the
    /// conditional graph law, half-L1.
    pub conditioned_law: f64,
    /// `W_{n,i}(k,l) + W_{i′}` against `L(W_{n,i} | X_{k,l} = 1)`.
    pub conditional_degree: f64,
    /// Mixture over `(K, L)` against the size-biased law of `W_{n,i}`.
    pub size_bias: f64,
    /// `P(W(k,l) = w, B, T = t)` against `P(U_{m+δ,t} = w) P(B, T = t)`,
    /// per `(k, l)` and for the mixture.
    pub urn: f64,
    /// Smallest half-L1 gap between the offset variant of the construction
    /// and the conditional graph law over cases where it could differ.
    pub offset_variant_gap: f64,
    pub cases: usize,
}

/// Runs every enumeration identity for `(m, δ)` over all `n` with `nm <= 6`.
pub fn enumeration_errors(m: usize, delta: f64) -> EnumerationErrors {
    let params = PAParams::new(m, delta).unwrap();
    let eps = params.epsilon();
    let r = params.shape();
    let mut errs = EnumerationErrors { offset_variant_gap: f64::INFINITY, ..Default::default() };
    for n in 1..=MAX_VERTICES / m {
        let vertices = n * m;
        let graphs = enumerate_graphs(vertices, eps);

        for k in 1..=vertices {
            for l in 1..=k {
                let p: f64 = graphs.iter().filter(|(t, _)| t[k - 1] == l).map(|(_, p)| p).sum();
                let want = expected_attachment(k, l, eps).unwrap();
                errs.attachment = errs.attachment.max((p - want).abs());
                errs.conditional_step = errs.conditional_step.max(step_error(&graphs, k, l, eps));

                let conditional = condition_on_edge(&graphs, k, l);
                let built = enumerate_conditioned(vertices, eps, k, l, IPrimeWeight::NoOffset).unwrap();
                let mut merged: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
                for (g, p) in &built {
                    *merged.entry(g.merged_targets()).or_default() += p;
                }
                errs.conditioned_law = errs.conditioned_law.max(half_l1(&merged, &conditional));

                if eps != 0.0 && k < vertices {
                    let alt = enumerate_conditioned(vertices, eps, k, l, IPrimeWeight::StandardOffset).unwrap();
                    let mut merged: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
                    for (g, p) in &alt {
                        *merged.entry(g.merged_targets()).or_default() += p;
                    }
                    errs.offset_variant_gap = errs.offset_variant_gap.min(half_l1(&merged, &conditional));
                }
            }
        }

        for i in 1..=n {
            errs.cases += 1;
            let (first, last) = (m * (i - 1) + 1, m * i);
            let plain = law_of(graphs.iter().map(|(t, p)| (block_degree(t, m, i), *p)));
            let mu = expected_in_degree(DegreeQuery::new(n, i, params).unwrap()).unwrap();
            let mut mixture: Vec<f64> = Vec::new();
            // joint[(t, w, on_b)] over the (K, L) mixture
            let mut joint: BTreeMap<(u64, u64, bool), f64> = BTreeMap::new();
            for l in first..=last {
                for k in l..=vertices {
                    let weight = expected_attachment(k, l, eps).unwrap() / mu;
                    let built = enumerate_conditioned(vertices, eps, k, l, IPrimeWeight::NoOffset).unwrap();
                    let total_law = law_of(built.iter().map(|(g, p)| (g.block_degree(m, i) + g.i_prime_degree(), *p)));
                    let conditional = condition_on_edge(&graphs, k, l);
                    let want = law_of(conditional.iter().map(|(t, p)| (block_degree(t, m, i), *p)));
                    errs.conditional_degree = errs.conditional_degree.max(max_abs_diff(&total_law, &want));
                    accumulate(&mut mixture, &total_law, weight);

                    let mut own: BTreeMap<(u64, u64, bool), f64> = BTreeMap::new();
                    for (g, p) in &built {
                        let key = (g.block_degree(m, i) + g.i_prime_degree(), g.block_degree(m, i), g.on_b(m, i));
                        *own.entry(key).or_default() += p;
                        *joint.entry(key).or_default() += weight * p;
                    }
                    errs.urn = errs.urn.max(urn_error(&own, r));
                }
            }
            let biased = size_bias(&IntegerPmf::new(plain, 0.0).unwrap()).unwrap();
            errs.size_bias = errs.size_bias.max(max_abs_diff(&mixture, biased.probs()));
            errs.urn = errs.urn.max(urn_error(&joint, r));
        }
    }
    errs
}

fn accumulate(acc: &mut Vec<f64>, law: &[f64], weight: f64) {
    if law.len() > acc.len() {
        acc.resize(law.len(), 0.0);
    }
    for (a, p) in acc.iter_mut().zip(law) {
        *a += weight * p;
    }
}

/// `max |P(W = w, B, T = t) - P(U_{r,t} = w) P(B, T = t)|`.
fn urn_error(joint: &BTreeMap<(u64, u64, bool), f64>, r: f64) -> f64 {
    let mut on_b_mass: BTreeMap<u64, f64> = BTreeMap::new();
    for (&(t, _, on_b), p) in joint {
        if on_b {
            *on_b_mass.entry(t).or_default() += p;
        }
    }
    let mut worst = 0.0f64;
    for (&t, &mass) in &on_b_mass {
        let urn = urn_pmf(UrnSpec::new(r, t as usize).unwrap()).unwrap();
        for w in 0..t {
            let got = joint.get(&(t, w, true)).copied().unwrap_or(0.0);
            worst = worst.max((got - urn.get(w as usize) * mass).abs());
        }
    }
    worst
}

/// Largest error of `P(X_{j,s} = 1 | X_{k,l} = 1, G_{j-1})` against the
/// closed form, over `l, s <= j < k` and every prefix `G_{j-1}`.
fn step_error(graphs: &[(Vec<usize>, f64)], k: usize, l: usize, eps: f64) -> f64 {
    let mut worst = 0.0f64;
    for j in l.max(1)..k {
        let mut prefix_mass: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        let mut step_mass: BTreeMap<(Vec<usize>, usize), f64> = BTreeMap::new();
        for (t, p) in graphs.iter().filter(|(t, _)| t[k - 1] == l) {
            let prefix = t[..j - 1].to_vec();
            *prefix_mass.entry(prefix.clone()).or_default() += p;
            *step_mass.entry((prefix, t[j - 1])).or_default() += p;
        }
        for (prefix, mass) in &prefix_mass {
            let degrees = in_degrees_padded(prefix, j);
            for s in 1..=j {
                let got = step_mass.get(&(prefix.clone(), s)).copied().unwrap_or(0.0) / mass;
                let want = conditional_attachment_probability(j, s, l, degrees[s - 1], eps);
                worst = worst.max((got - want).abs());
            }
        }
    }
    worst
}

fn in_degrees_padded(prefix: &[usize], len: usize) -> Vec<u64> {
    let mut deg = vec![0u64; len];
    for &t in prefix {
        deg[t - 1] += 1;
    }
    deg
}
