//! End-to-end acceptance run. Each criterion prints one `PASS`/`FAIL` line
//! to stderr with its measurement and wall time; the test fails if any
//! criterion misses its tolerance or its time budget.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

use pa_stein::distributions::{nb_pmf, nb_pmf_adaptive, DEFAULT_TAIL_TOL};
use pa_stein::metrics::{
    convergence_experiment, fit_rate, mean_band, spread, theorem31_check, tv_exact, tv_nb_shift_bound,
    ConvergenceConfig, Method,
};
use pa_stein::pa_graph::{exact_degree_pmf_m1, expected_in_degree, DegreeQuery};
use pa_stein::rng::stream_rng;
use pa_stein::stein::{certify_solution_bounds, solve_stein_equation, stein_solution_alternative, TargetSet};
use pa_stein::transforms::{d_r, fixed_point_residual, r_equilibrium};
use pa_stein::{IntegerPmf, NBParams, PAParams};
use rand::Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Verdict,
}

fn fixed_point() -> Verdict {
    let mut worst = 0.0f64;
    for r in [0.5, 1.0, 2.0, 5.0] {
        for p in [0.2, 0.5, 0.8] {
            let params = NBParams::new(r, p).unwrap();
            let kmax = nb_pmf_adaptive(params, DEFAULT_TAIL_TOL).unwrap().kmax();
            worst = worst.max(fixed_point_residual(params, kmax).unwrap());
        }
    }
    verdict(worst < 1e-6, format!("max residual {worst:.3e}"))
}

fn equilibrium_identity() -> Verdict {
    let mut rng = stream_rng(2, 0);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let len = rng.random_range(2..40);
        let weights: Vec<f64> = (0..len).map(|_| rng.random::<f64>()).collect();
        let pmf = IntegerPmf::from_weights(weights).unwrap();
        let r = rng.random_range(0.1..8.0);
        let eq = r_equilibrium(&pmf, r).unwrap();
        let mu = pmf.mean();
        for _ in 0..20 {
            let g: Vec<f64> = (0..len + 2).map(|_| rng.random_range(-5.0..5.0)).collect();
            let sup = g.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            let lhs: f64 = mu * eq.probs().iter().enumerate().map(|(k, w)| w * d_r(&g, r, k)).sum::<f64>();
            let rhs: f64 = pmf.probs().iter().enumerate().map(|(k, w)| k as f64 * w * g[k]).sum();
            worst = worst.max((lhs - rhs).abs() / sup);
        }
    }
    verdict(worst <= 1e-9, format!("max |gap| / sup|g| {worst:.3e}"))
}

fn stein_solutions() -> Verdict {
    let mut rng = stream_rng(3, 0);
    let mut min_slack = f64::INFINITY;
    let mut oracle_gap = 0.0f64;
    for _ in 0..100 {
        let r = rng.random_range(0.2..5.0);
        let p = rng.random_range(0.1..0.95);
        let params = NBParams::new(r, p).unwrap();
        let kmax = nb_pmf_adaptive(params, DEFAULT_TAIL_TOL).unwrap().kmax();
        let size = rng.random_range(1..=kmax + 1);
        let target = TargetSet::random(size, kmax, &mut rng).unwrap();
        let sol = solve_stein_equation(params, &target, kmax).unwrap();
        match certify_solution_bounds(&sol) {
            Ok(report) => {
                for c in &report.checks {
                    min_slack = min_slack.min(c.min_slack);
                }
            }
            Err(e) => return verdict(false, format!("r={r} p={p}: {e}")),
        }
        let alt = stein_solution_alternative(params, &target, kmax).unwrap();
        for (a, g) in alt.iter().zip(&sol.g) {
            oracle_gap = oracle_gap.max((a - g).abs());
        }
    }
    verdict(
        min_slack >= -1e-9 && oracle_gap <= 1e-9,
        format!("min slack {min_slack:.3e}, oracle gap {oracle_gap:.3e}"),
    )
}

fn enumeration() -> Verdict {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for (m, delta) in common::ENUMERATION_PARAMS {
        let e = common::enumeration_errors(m, delta);
        for v in [e.attachment, e.conditional_step, e.conditioned_law, e.conditional_degree, e.size_bias, e.urn] {
            worst = worst.max(v);
        }
        cases += e.cases;
    }
    verdict(worst <= 1e-10, format!("max error {worst:.3e} over {cases} cases"))
}

fn mean_formula() -> Verdict {
    let mut mean_gap = 0.0f64;
    for eps in [0.0, 0.5, -0.5] {
        let params = PAParams::new(1, eps).unwrap();
        for n in [10, 100, 500, 1000, 2000] {
            for i in [1, 2, 5, 10, n / 2, n] {
                // A cap of n + 1 states holds the whole support.
                let dp = exact_degree_pmf_m1(n, i, eps, n + 1).unwrap();
                let mu = expected_in_degree(DegreeQuery::new(n, i, params).unwrap()).unwrap();
                mean_gap = mean_gap.max((dp.mean() - mu).abs());
            }
        }
    }
    let grid: Vec<usize> = (0..14).map(|e| 1usize << e).collect();
    let mut band = 0.0f64;
    for delta in [0.0, 0.5, -0.5, 2.0] {
        let pts = mean_band(PAParams::new(1, delta).unwrap(), &grid).unwrap();
        band = band.max(spread(pts.iter().map(|p| p.value)));
    }
    verdict(mean_gap <= 1e-8 && band < 4.0, format!("mean gap {mean_gap:.3e}, band spread {band:.3}"))
}

fn exact_rate() -> Verdict {
    let grid = vec![64, 128, 256, 512, 1024];
    let config = ConvergenceConfig::new(PAParams::new(1, 0.0).unwrap(), grid, Method::ExactDp);
    let records = convergence_experiment(&config).unwrap();
    let decreasing = records.windows(2).all(|w| w[1].dtv < w[0].dtv);
    let (slope, _) = fit_rate(&records).unwrap();
    let band = spread(records.iter().map(|r| r.n as f64 * r.dtv / (r.n as f64).ln()));
    verdict(
        decreasing && (-1.3..=-0.7).contains(&slope) && band < 4.0,
        format!("decreasing {decreasing}, slope {slope:.3}, n dtv / ln n spread {band:.3}"),
    )
}

fn monte_carlo_rate() -> Verdict {
    let mut config = ConvergenceConfig::new(PAParams::new(2, 1.0).unwrap(), vec![2000], Method::MonteCarlo);
    config.graphs = 200;
    config.seed = 7;
    let record = &convergence_experiment(&config).unwrap()[0];
    verdict(record.dtv < 0.05, format!("dtv {:.4} (se {:.4})", record.dtv, record.stderr))
}

fn coupling_shape() -> Verdict {
    let i_list: Vec<usize> = (2..=8).map(|e| 1usize << e).collect();
    let report = theorem31_check(4096, &i_list, PAParams::new(1, 0.0).unwrap(), 100_000, 8).unwrap();
    let worst = report
        .rows
        .iter()
        .map(|r| (r.dtv - r.bound_b) / r.bound_b_se.max(f64::MIN_POSITIVE))
        .fold(f64::NEG_INFINITY, f64::max);
    verdict(
        report.pass() && report.spread < 6.0,
        format!("i dtv spread {:.3}, worst (dtv - bound) / se {worst:.2}", report.spread),
    )
}

fn nb_shift() -> Verdict {
    let a = nb_pmf(NBParams::new(1.0, 0.5).unwrap(), 400).unwrap();
    let b = nb_pmf(NBParams::new(1.0, 0.4).unwrap(), 400).unwrap();
    let tv = tv_exact(&a, &b).value;
    let mut rng = stream_rng(9, 0);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..50 {
        let r = rng.random_range(0.2..6.0);
        let p = rng.random_range(0.1..0.95);
        let eps = rng.random_range(0.0..0.9 * p);
        let tol = 1e-14;
        let x = nb_pmf_adaptive(NBParams::new(r, p).unwrap(), tol).unwrap();
        let y = nb_pmf_adaptive(NBParams::new(r, p - eps).unwrap(), tol).unwrap();
        let t = tv_exact(&x, &y);
        worst = worst.max(t.value - t.bracket - tv_nb_shift_bound(r, p, eps).unwrap());
    }
    verdict(
        (tv - 0.11).abs() <= 1e-10 && tv <= 0.25 && worst <= 0.0,
        format!("tv {tv:.12}, max (tv - bound) {worst:.3e}"),
    )
}

fn cli(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_pa-stein")).args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn reproducibility() -> Verdict {
    let exact = ["converge", "--m", "1", "--delta", "0", "--n-list", "64,128,256", "--mode", "exact"];
    let exact_same = cli(&exact) == cli(&exact);
    let mc: [&[&str]; 4] = [
        &["converge", "--m", "2", "--delta", "1", "--n-list", "100,200", "--mode", "mc", "--graphs", "40", "--seed", "5"],
        &["simulate", "--n", "300", "--m", "2", "--delta", "0.5", "--graphs", "6", "--seed", "5"],
        &["coupling", "--n", "200", "--i", "8", "--replicas", "5000", "--seed", "5"],
        &["theorem31", "--n", "200", "--i-list", "4,8", "--replicas", "5000", "--seed", "5"],
    ];
    let mut mc_same = true;
    for args in mc {
        let one = cli(&[&["--threads", "1"], args].concat());
        let four = cli(&[&["--threads", "4"], args].concat());
        mc_same &= one == four;
    }
    verdict(exact_same && mc_same, format!("exact identical {exact_same}, mc identical across threads {mc_same}"))
}

const CRITERIA: [Criterion; 10] = [
    Criterion { id: 1, name: "fixed point", budget: Duration::from_secs(10), run: fixed_point },
    Criterion { id: 2, name: "equilibrium identity", budget: Duration::from_secs(5), run: equilibrium_identity },
    Criterion { id: 3, name: "stein solutions", budget: Duration::from_secs(30), run: stein_solutions },
    Criterion { id: 4, name: "enumeration oracles", budget: Duration::from_secs(60), run: enumeration },
    Criterion { id: 5, name: "mean formula and band", budget: Duration::from_secs(60), run: mean_formula },
    Criterion { id: 6, name: "exact rate", budget: Duration::from_secs(300), run: exact_rate },
    Criterion { id: 7, name: "monte carlo rate", budget: Duration::from_secs(300), run: monte_carlo_rate },
    Criterion { id: 8, name: "coupling bound shape", budget: Duration::from_secs(600), run: coupling_shape },
    Criterion { id: 9, name: "nb shift", budget: Duration::from_secs(10), run: nb_shift },
    Criterion { id: 10, name: "reproducibility", budget: Duration::from_secs(300), run: reproducibility },
];

#[test]
fn acceptance() {
    let mut failures = Vec::new();
    for c in &CRITERIA {
        let start = Instant::now();
        let v = (c.run)();
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.budget;
        let ok = v.pass && in_time;
        let _ = writeln!(
            std::io::stderr(),
            "{} criterion {:>2} {:<22} {} [{:.2?} / {:?}]",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            v.detail,
            elapsed,
            c.budget,
        );
        if !ok {
            failures.push(c.id);
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
