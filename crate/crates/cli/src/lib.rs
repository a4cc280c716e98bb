//! Command line front end: every subcommand writes CSV or JSON to `--out`
//! or stdout and exits with 0 on success, 2 when a certification check
//! fails and 1 on usage errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pa_stein::distributions::{k_pmf, k_pmf_adaptive, nb_pmf, nb_pmf_adaptive, DEFAULT_TAIL_TOL};
use pa_stein::metrics::{
    convergence_experiment, decomposition_check, theorem31_check, tv_exact, write_records_csv, ConvergenceConfig,
    Method,
};
use pa_stein::pa_graph::{coupling_samples, generate_m1, DegreeQuery, EquilibriumCoupling};
use pa_stein::rng::stream_rng;
use pa_stein::stein::{solution_bound_slacks, solve_stein_equation, tv_upper_bound, TargetSet};
use pa_stein::transforms::fixed_point_residual;
use pa_stein::{Error, IntegerPmf, NBParams, PAParams};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_CERTIFICATION: u8 = 2;

/// Residual below which `fixedpoint` certifies `NB(r, p)`.
const FIXED_POINT_TOL: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "pa-stein", version, about = "Preferential attachment degree laws and negative binomial Stein bounds")]
struct Cli {
    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Mc,
}

#[derive(Debug, Args)]
struct Output {
    /// Output file (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Truncated pmf of NB(r, p) or K(m, δ).
    Pmf {
        #[command(subcommand)]
        family: PmfFamily,
    },
    /// In-degrees of independent G_n^{m,δ} graphs.
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        delta: f64,
        #[arg(long, default_value_t = 1)]
        graphs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Distance of L(W_n) from K(m, δ) over a list of n.
    Converge {
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        delta: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
        #[arg(long, default_value_t = 200)]
        graphs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = pa_stein::pa_graph::DEFAULT_STATE_CAP)]
        state_cap: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        output: Output,
    },
    /// Certifies the Stein solution bounds on random target sets.
    SteinCheck {
        #[arg(long)]
        r: f64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        kmax: Option<usize>,
        /// `random:<count>:<seed>`
        #[arg(long, default_value = "random:10:0")]
        sets: String,
        #[command(flatten)]
        output: Output,
    },
    /// Distance of NB(r, p) from its r-equilibrium transform.
    Fixedpoint {
        #[arg(long)]
        r: f64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        kmax: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Equilibrium coupling estimates at one vertex.
    Coupling {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        i: usize,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        delta: f64,
        #[arg(long, default_value_t = 100_000)]
        replicas: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Exact d_TV(W_{n,i}, NB) against the coupling bound for several i.
    Theorem31 {
        #[arg(long)]
        n: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        i_list: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        delta: f64,
        #[arg(long, default_value_t = 100_000)]
        replicas: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// The three distances bounding d_TV(W_n, K(m, δ)).
    Decompose {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        delta: f64,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Debug, Subcommand)]
enum PmfFamily {
    /// NB(r, p).
    Nb {
        #[arg(long)]
        r: f64,
        #[arg(long)]
        p: f64,
        /// Truncation point (adaptive if omitted).
        #[arg(long)]
        kmax: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        output: Output,
    },
    /// K(m, δ).
    K {
        #[arg(long)]
        m: usize,
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
        #[arg(long)]
        kmax: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        output: Output,
    },
}

/// Failure of a subcommand, mapped to an exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Certification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(format!("output: {e}"))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Usage(format!("serialization: {e}"))
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Parses `args` (program name first), runs the subcommand and returns the
/// exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            let _ = writeln!(stderr, "error: --threads must be positive");
            return EXIT_USAGE;
        }
        pool = pool.num_threads(t);
    }
    let pool = match pool.build() {
        Ok(pool) => pool,
        Err(e) => {
            let _ = writeln!(stderr, "error: thread pool: {e}");
            return EXIT_USAGE;
        }
    };
    // Workers never touch `stdout`; stdout output is buffered and written here.
    let (outcome, buffered) = pool.install(|| {
        let mut buf = Vec::new();
        let outcome = dispatch(cli.command, &mut buf);
        (outcome, buf)
    });
    if let Err(e) = stdout.write_all(&buffered).and_then(|()| stdout.flush()) {
        let _ = writeln!(stderr, "error: output: {e}");
        return EXIT_USAGE;
    }
    match outcome {
        Ok(()) => EXIT_OK,
        Err(Failure::Certification) => EXIT_CERTIFICATION,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
    }
}

/// Runs `body` against the `--out` file or stdout.
fn emit(output: &Output, stdout: &mut dyn Write, body: impl FnOnce(&mut dyn Write) -> Outcome) -> Outcome {
    match &output.out {
        Some(path) => {
            let mut file = BufWriter::new(File::create(path)?);
            body(&mut file)?;
            file.flush()?;
            Ok(())
        }
        None => {
            let mut buf = BufWriter::new(stdout);
            body(&mut buf)?;
            buf.flush()?;
            Ok(())
        }
    }
}

fn write_pmf(pmf: &IntegerPmf, format: Format, out: &mut dyn Write) -> Outcome {
    match format {
        Format::Csv => pmf.write_csv(out)?,
        Format::Json => {
            let value = json!({ "probs": pmf.probs(), "tail_mass": pmf.tail_mass() });
            writeln!(out, "{}", serde_json::to_string(&value)?)?;
        }
    }
    Ok(())
}

fn write_json<T: Serialize>(value: &T, out: &mut dyn Write) -> Outcome {
    writeln!(out, "{}", serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> Outcome {
    match command {
        Command::Pmf { family } => match family {
            PmfFamily::Nb { r, p, kmax, format, output } => {
                let params = NBParams::new(r, p)?;
                let pmf = match kmax {
                    Some(k) => nb_pmf(params, k)?,
                    None => nb_pmf_adaptive(params, DEFAULT_TAIL_TOL)?,
                };
                emit(&output, stdout, |out| write_pmf(&pmf, format, out))
            }
            PmfFamily::K { m, delta, kmax, format, output } => {
                let params = PAParams::new(m, delta)?;
                let pmf = match kmax {
                    Some(k) => k_pmf(params, k)?,
                    None => k_pmf_adaptive(params, DEFAULT_TAIL_TOL)?,
                };
                emit(&output, stdout, |out| write_pmf(&pmf, format, out))
            }
        },
        Command::Simulate { n, m, delta, graphs, seed, output } => {
            let params = PAParams::new(m, delta)?;
            if n == 0 {
                return Err(Failure::Usage("--n must be positive".into()));
            }
            let degrees: Vec<Vec<u64>> = (0..graphs as u64)
                .into_par_iter()
                .map(|g| {
                    let graph = generate_m1(n * m, params.epsilon(), &mut stream_rng(seed, g))?;
                    pa_stein::pa_graph::collapse(&graph, m)
                })
                .collect::<pa_stein::Result<_>>()?;
            emit(&output, stdout, |out| {
                writeln!(out, "graph_id,vertex,in_degree")?;
                for (g, degs) in degrees.iter().enumerate() {
                    for (v, d) in degs.iter().enumerate() {
                        writeln!(out, "{g},{},{d}", v + 1)?;
                    }
                }
                Ok(())
            })
        }
        Command::Converge { m, delta, n_list, mode, graphs, seed, state_cap, format, output } => {
            let method = match mode {
                Mode::Exact => Method::ExactDp,
                Mode::Mc => Method::MonteCarlo,
            };
            let mut config = ConvergenceConfig::new(PAParams::new(m, delta)?, n_list, method);
            config.graphs = graphs;
            config.seed = seed;
            config.state_cap = state_cap;
            let records = convergence_experiment(&config)?;
            emit(&output, stdout, |out| match format {
                Format::Csv => Ok(write_records_csv(&records, out)?),
                Format::Json => write_json(&records, out),
            })
        }
        Command::SteinCheck { r, p, kmax, sets, output } => stein_check(r, p, kmax, &sets, &output, stdout),
        Command::Fixedpoint { r, p, kmax, output } => {
            let params = NBParams::new(r, p)?;
            let kmax = match kmax {
                Some(k) => k,
                None => nb_pmf_adaptive(params, DEFAULT_TAIL_TOL)?.kmax(),
            };
            let residual = fixed_point_residual(params, kmax)?;
            let pass = residual < FIXED_POINT_TOL;
            let value = json!({ "r": r, "p": p, "kmax": kmax, "residual": residual, "pass": pass });
            emit(&output, stdout, |out| write_json(&value, out))?;
            certified(pass)
        }
        Command::Coupling { n, i, m, delta, replicas, seed, output } => {
            let query = DegreeQuery::new(n, i, PAParams::new(m, delta)?)?;
            if replicas == 0 {
                return Err(Failure::Usage("--replicas must be positive".into()));
            }
            let coupling = EquilibriumCoupling::new(query)?;
            let mu = pa_stein::pa_graph::expected_in_degree(query)?;
            let r = query.params.shape();
            let p = r / (mu + r);
            let samples = coupling_samples(&coupling, replicas, seed);
            let bound = tv_upper_bound(&samples, r, p)?;
            let nb = nb_pmf_adaptive(NBParams::new(r, p)?, 1e-13)?;
            let value = json!({
                "n": n, "i": i, "m": m, "delta": delta, "replicas": replicas, "seed": seed,
                "p_neq": bound.p_neq,
                "p_bc": bound.p_bc,
                "bound_b": bound.bound_b,
                "bound_b_se": bound.bound_b_se,
                "bound_simple": bound.bound_simple,
                "bound_simple_se": bound.bound_simple_se,
                "dtv_exact": tv_exact(coupling.law(), &nb).value,
            });
            emit(&output, stdout, |out| write_json(&value, out))
        }
        Command::Theorem31 { n, i_list, m, delta, replicas, seed, output } => {
            let report = theorem31_check(n, &i_list, PAParams::new(m, delta)?, replicas, seed)?;
            emit(&output, stdout, |out| write_json(&report, out))?;
            certified(report.pass())
        }
        Command::Decompose { n, m, delta, output } => {
            let report = decomposition_check(n, PAParams::new(m, delta)?)?;
            emit(&output, stdout, |out| write_json(&report, out))
        }
    }
}

fn certified(pass: bool) -> Outcome {
    if pass {
        Ok(())
    } else {
        Err(Failure::Certification)
    }
}

/// Parses `random:<count>:<seed>`.
fn parse_sets(spec: &str) -> std::result::Result<(usize, u64), Failure> {
    let bad = || Failure::Usage(format!("--sets must look like random:<count>:<seed>, got {spec:?}"));
    let mut parts = spec.split(':');
    if parts.next() != Some("random") {
        return Err(bad());
    }
    let count = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    let seed = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok((count, seed))
}

fn stein_check(r: f64, p: f64, kmax: Option<usize>, sets: &str, output: &Output, stdout: &mut dyn Write) -> Outcome {
    let params = NBParams::new(r, p)?;
    let (count, seed) = parse_sets(sets)?;
    let kmax = match kmax {
        Some(k) => k,
        None => nb_pmf_adaptive(params, DEFAULT_TAIL_TOL)?.kmax(),
    };
    let reports = (0..count as u64)
        .into_par_iter()
        .map(|set_id| {
            use rand::Rng;
            let mut rng = stream_rng(seed, set_id);
            let size = rng.random_range(1..=kmax + 1);
            let target = TargetSet::random(size, kmax, &mut rng)?;
            let sol = solve_stein_equation(params, &target, kmax)?;
            Ok((set_id, solution_bound_slacks(&sol)))
        })
        .collect::<pa_stein::Result<Vec<_>>>()?;
    let mut all_pass = true;
    emit(output, stdout, |out| {
        for (set_id, report) in &reports {
            for check in &report.checks {
                all_pass &= check.pass;
                let line = json!({
                    "set_id": set_id,
                    "bound": check.bound.name(),
                    "max_slack": check.min_slack,
                    "pass": check.pass,
                });
                writeln!(out, "{}", serde_json::to_string(&line)?)?;
            }
        }
        Ok(())
    })?;
    certified(all_pass)
}
