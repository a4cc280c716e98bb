use std::fmt;
use std::io::{self, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::tv::tv_exact;
use crate::distributions::{
    k_kmax_for, k_pmf, k_slice_pmf, nb_pmf_adaptive, IntegerPmf, NBParams, PAParams,
};
use crate::error::{domain, Error, Result};
use crate::pa_graph::{
    collapsed_in_degrees, coupling_samples, exact_W_pmf, exact_block_degree_pmf_adaptive,
    expected_in_degree, projected_dp_cost, DegreeQuery, EquilibriumCoupling, DEFAULT_STATE_CAP,
};
use crate::rng::{derive_seed, stream_rng};
use crate::stein::tv_upper_bound;

/// Tail mass at which `K(m, δ)` is truncated for distance computations.
pub const K_TAIL_TOL: f64 = 1e-10;

/// Tail mass at which negative binomial comparison laws are truncated.
const NB_TAIL_TOL: f64 = 1e-13;

/// Longest `K(m, δ)` support the experiments will materialize.
const MAX_K_SUPPORT: usize = 50_000_000;

const BOOTSTRAP_LABEL: u64 = 0xB007;

/// How a distance was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExactDp,
    MonteCarlo,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::ExactDp => "exact_dp",
            Method::MonteCarlo => "monte_carlo",
        })
    }
}

/// `d_TV(L(W_n), K(m, δ))` at one `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRecord {
    pub n: usize,
    pub m: usize,
    pub delta: f64,
    pub method: Method,
    pub dtv: f64,
    /// Bootstrap standard error; zero for exact records.
    pub stderr: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceConfig {
    pub params: PAParams,
    pub n_values: Vec<usize>,
    pub method: Method,
    /// Graphs per `n` in Monte Carlo mode.
    pub graphs: usize,
    pub seed: u64,
    pub state_cap: usize,
    /// Largest projected number of DP state updates per `n` in exact mode.
    pub step_budget: f64,
    pub bootstrap_resamples: usize,
}

impl ConvergenceConfig {
    pub fn new(params: PAParams, n_values: Vec<usize>, method: Method) -> Self {
        Self {
            params,
            n_values,
            method,
            graphs: 200,
            seed: 0,
            state_cap: DEFAULT_STATE_CAP,
            step_budget: 1e11,
            bootstrap_resamples: 200,
        }
    }
}

/// `K(m, δ)` truncated at [`K_TAIL_TOL`].
fn limit_law(params: PAParams) -> Result<IntegerPmf> {
    let kmax = k_kmax_for(params, K_TAIL_TOL)?;
    if kmax > MAX_K_SUPPORT {
        return Err(Error::Resource(format!("K({}, {}) needs {kmax} support points", params.m, params.delta)));
    }
    k_pmf(params, kmax)
}

/// Distance of `L(W_n)` from its limit at each configured `n`.
///
/// Exact mode averages the block chain laws of all `n` vertices. Monte Carlo
/// mode pools the in-degrees of every vertex over `graphs` independent
/// graphs and bootstraps over graphs for the standard error.
pub fn convergence_experiment(config: &ConvergenceConfig) -> Result<Vec<ConvergenceRecord>> {
    let params = config.params;
    params.validate()?;
    if config.n_values.is_empty() || config.n_values.contains(&0) {
        return domain("n values must be positive and non-empty");
    }
    if config.method == Method::ExactDp {
        for &n in &config.n_values {
            let cost = projected_dp_cost(n, params, config.state_cap);
            if cost > config.step_budget {
                return Err(Error::Resource(format!(
                    "exact DP at n={n} needs {cost:.3e} state updates, budget is {:.3e}",
                    config.step_budget
                )));
            }
        }
    } else if config.graphs == 0 {
        return domain("Monte Carlo mode needs at least one graph");
    }
    let limit = limit_law(params)?;
    config
        .n_values
        .iter()
        .map(|&n| {
            let (dtv, stderr) = match config.method {
                Method::ExactDp => {
                    let law = exact_W_pmf(n, params, config.state_cap)?;
                    (tv_exact(&law, &limit).value, 0.0)
                }
                Method::MonteCarlo => monte_carlo_distance(n, config, &limit)?,
            };
            Ok(ConvergenceRecord {
                n,
                m: params.m,
                delta: params.delta,
                method: config.method,
                dtv,
                stderr,
                seed: config.seed,
            })
        })
        .collect()
}

fn monte_carlo_distance(n: usize, config: &ConvergenceConfig, limit: &IntegerPmf) -> Result<(f64, f64)> {
    let cell_seed = derive_seed(config.seed, n as u64);
    let histograms: Result<Vec<Vec<u64>>> = (0..config.graphs as u64)
        .into_par_iter()
        .map(|g| {
            let degrees = collapsed_in_degrees(n, config.params, &mut stream_rng(cell_seed, g))?;
            Ok(histogram(&degrees))
        })
        .collect();
    let histograms = histograms?;
    let pooled = sum_histograms(histograms.iter());
    let dtv = tv_exact(&IntegerPmf::from_counts(&pooled)?, limit).value;

    let boot_seed = derive_seed(cell_seed, BOOTSTRAP_LABEL);
    let graphs = histograms.len();
    let resampled: Result<Vec<f64>> = (0..config.bootstrap_resamples as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(boot_seed, b);
            let picks = (0..graphs).map(|_| &histograms[rng.random_range(0..graphs)]);
            let counts = sum_histograms(picks);
            Ok(tv_exact(&IntegerPmf::from_counts(&counts)?, limit).value)
        })
        .collect();
    let resampled = resampled?;
    Ok((dtv, sample_sd(&resampled)))
}

fn histogram(values: &[u64]) -> Vec<u64> {
    let max = values.iter().copied().max().unwrap_or(0) as usize;
    let mut counts = vec![0u64; max + 1];
    for &v in values {
        counts[v as usize] += 1;
    }
    counts
}

fn sum_histograms<'a>(hists: impl Iterator<Item = &'a Vec<u64>>) -> Vec<u64> {
    let mut total: Vec<u64> = Vec::new();
    for h in hists {
        if h.len() > total.len() {
            total.resize(h.len(), 0);
        }
        for (t, c) in total.iter_mut().zip(h) {
            *t += c;
        }
    }
    total
}

fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// CSV with header `n,m,delta,method,dtv,stderr,seed`.
pub fn write_records_csv<W: Write>(records: &[ConvergenceRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "n,m,delta,method,dtv,stderr,seed")?;
    for r in records {
        writeln!(out, "{},{},{},{},{:e},{:e},{}", r.n, r.m, r.delta, r.method, r.dtv, r.stderr, r.seed)?;
    }
    Ok(())
}

/// One link of the triangle-inequality chain from `L(W_n)` to `K(m, δ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionTerm {
    pub name: &'static str,
    /// Distance between the two mixtures over the uniform vertex `I`.
    pub mixed: f64,
    /// Mean over `I` of the conditional distances, an upper bound on `mixed`.
    pub conditional_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub n: usize,
    pub m: usize,
    pub delta: f64,
    /// `d_TV(L(W_n), K(m, δ))`.
    pub total: f64,
    pub terms: [DecompositionTerm; 3],
}

/// The three distances whose sum bounds `d_TV(L(W_n), K(m, δ))`:
///
/// 1. `L(W_{n,I})` against `NB(m + δ, (m + δ)/(μ_{n,I} + m + δ))`,
/// 2. that mixture against `NB(m + δ, (I/n)^{1/(2 + δ/m)})`,
/// 3. the latter against `K(m, δ)`, whose restriction to `U ∈ ((i-1)/n, i/n)`
///    is the conditional counterpart for `I = i`.
pub fn decomposition_check(n: usize, params: PAParams) -> Result<DecompositionReport> {
    params.validate()?;
    if n == 0 {
        return domain("a graph needs at least one vertex");
    }
    let r = params.shape();
    let c = params.mixing_exponent();
    let limit = limit_law(params)?;
    let kmax = limit.kmax();
    let per_vertex: Result<Vec<_>> = (1..=n)
        .into_par_iter()
        .map(|i| {
            let q = DegreeQuery::new(n, i, params)?;
            let law = exact_block_degree_pmf_adaptive(q)?;
            let mu = expected_in_degree(q)?;
            let fitted = nb_pmf_adaptive(NBParams::new(r, r / (mu + r))?, NB_TAIL_TOL)?;
            let p_limit = (i as f64 / n as f64).powf(c).min(1.0);
            let limiting = nb_pmf_adaptive(NBParams::new(r, p_limit)?, NB_TAIL_TOL)?;
            let lo = (i - 1) as f64 / n as f64;
            let slice = k_slice_pmf(params, lo, i as f64 / n as f64, kmax)?;
            let conditional = [
                tv_exact(&law, &fitted).value,
                tv_exact(&fitted, &limiting).value,
                tv_exact(&limiting, &slice).value,
            ];
            Ok((law, fitted, limiting, conditional))
        })
        .collect();
    let per_vertex = per_vertex?;
    let weights = vec![1.0 / n as f64; n];
    let mix = |pick: fn(&(IntegerPmf, IntegerPmf, IntegerPmf, [f64; 3])) -> &IntegerPmf| {
        let comps: Vec<IntegerPmf> = per_vertex.iter().map(|v| pick(v).clone()).collect();
        IntegerPmf::mixture(&weights, &comps)
    };
    let law = mix(|v| &v.0)?;
    let fitted = mix(|v| &v.1)?;
    let limiting = mix(|v| &v.2)?;
    let mean = |idx: usize| per_vertex.iter().map(|v| v.3[idx]).sum::<f64>() / n as f64;
    let terms = [
        DecompositionTerm { name: "degree_vs_fitted_nb", mixed: tv_exact(&law, &fitted).value, conditional_mean: mean(0) },
        DecompositionTerm {
            name: "fitted_nb_vs_limit_nb",
            mixed: tv_exact(&fitted, &limiting).value,
            conditional_mean: mean(1),
        },
        DecompositionTerm { name: "limit_nb_vs_k", mixed: tv_exact(&limiting, &limit).value, conditional_mean: mean(2) },
    ];
    Ok(DecompositionReport { n, m: params.m, delta: params.delta, total: tv_exact(&law, &limit).value, terms })
}

/// Exact distance and coupling bound at one vertex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem31Row {
    pub i: usize,
    pub mu: f64,
    /// `d_TV(L(W_{n,i}), NB(m + δ, (m + δ)/(μ_{n,i} + m + δ)))`.
    pub dtv: f64,
    pub i_dtv: f64,
    pub bound_b: f64,
    pub bound_b_se: f64,
    pub bound_simple: f64,
    pub bound_simple_se: f64,
    pub p_neq: f64,
    pub p_bc: f64,
    /// `dtv <= bound_b + 4 se`.
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem31Report {
    pub n: usize,
    pub m: usize,
    pub delta: f64,
    pub replicas: usize,
    pub seed: u64,
    pub rows: Vec<Theorem31Row>,
    /// `max / min` of `i · dtv` over the rows.
    pub spread: f64,
}

impl Theorem31Report {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Exact `d_TV(L(W_{n,i}), NB)` and its equilibrium-coupling bound for each
/// `i`; vertex `i` draws its replicas from stream seed `derive_seed(seed, i)`.
pub fn theorem31_check(
    n: usize,
    i_list: &[usize],
    params: PAParams,
    replicas: usize,
    seed: u64,
) -> Result<Theorem31Report> {
    params.validate()?;
    if i_list.is_empty() || replicas == 0 {
        return domain("need at least one vertex and one replica");
    }
    let r = params.shape();
    let rows = i_list
        .iter()
        .map(|&i| {
            let q = DegreeQuery::new(n, i, params)?;
            let mu = expected_in_degree(q)?;
            let p = r / (mu + r);
            let coupling = EquilibriumCoupling::new(q)?;
            let nb = nb_pmf_adaptive(NBParams::new(r, p)?, NB_TAIL_TOL)?;
            let dtv = tv_exact(coupling.law(), &nb).value;
            let samples = coupling_samples(&coupling, replicas, derive_seed(seed, i as u64));
            let bound = tv_upper_bound(&samples, r, p)?;
            Ok(Theorem31Row {
                i,
                mu,
                dtv,
                i_dtv: i as f64 * dtv,
                bound_b: bound.bound_b,
                bound_b_se: bound.bound_b_se,
                bound_simple: bound.bound_simple,
                bound_simple_se: bound.bound_simple_se,
                p_neq: bound.p_neq,
                p_bc: bound.p_bc,
                pass: dtv <= bound.bound_b + 4.0 * bound.bound_b_se,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let spread = spread(rows.iter().map(|r| r.i_dtv));
    Ok(Theorem31Report { n, m: params.m, delta: params.delta, replicas, seed, rows, spread })
}

/// `max / min` of positive values; infinite if any value is zero.
pub fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// `i |μ_{n,i}/(m + δ) + 1 - (n/i)^{1/(2 + δ/m)}| / (n/i)^{1/(2 + δ/m)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanBandPoint {
    pub n: usize,
    pub i: usize,
    pub value: f64,
}

/// The scaled error of the mean's power-law approximation at every `i <= n`
/// with both taken from `grid`.
pub fn mean_band(params: PAParams, grid: &[usize]) -> Result<Vec<MeanBandPoint>> {
    let mut out = Vec::new();
    for &n in grid {
        for &i in grid.iter().filter(|&&i| i <= n) {
            let mu = expected_in_degree(DegreeQuery::new(n, i, params)?)?;
            let scale = (n as f64 / i as f64).powf(params.mixing_exponent());
            let value = i as f64 * (mu / params.shape() + 1.0 - scale).abs() / scale;
            out.push(MeanBandPoint { n, i, value });
        }
    }
    Ok(out)
}
