//! Linear preferential attachment graphs, their limiting degree laws, and
//! Stein's method for the negative binomial distribution.
//!
//! The crate is organized bottom-up:
//!
//! * [`numerics`]: log-gamma and overflow-safe gamma ratios.
//! * [`distributions`]: truncated pmfs with explicit tails, `NB(r, p)` and the
//!   mixed law `K(m, δ)`.
//! * [`transforms`]: size bias, the Pólya urn law and the `r`-equilibrium
//!   transformation, whose fixed points are the negative binomials.
//! * [`stein`]: the characterizing operator, Stein equation solvers and the
//!   total variation bound driven by an equilibrium coupling.
//! * [`pa_graph`]: graph generation, exact degree laws, the conditioned
//!   construction and the equilibrium coupling.
//! * [`metrics`]: total variation, convergence experiments and rate fitting.

pub mod distributions;
mod error;
pub mod metrics;
pub mod numerics;
pub mod pa_graph;
pub mod rng;
pub mod stein;
pub mod transforms;

pub use distributions::{IntegerPmf, NBParams, PAParams};
pub use error::{Error, Result};
