//! Total variation, the convergence-rate experiment and related checks.

mod experiments;
mod fit;
mod tv;

pub use experiments::{
    convergence_experiment, decomposition_check, mean_band, spread, theorem31_check, write_records_csv,
    ConvergenceConfig, ConvergenceRecord, DecompositionReport, DecompositionTerm, MeanBandPoint, Method,
    Theorem31Report, Theorem31Row, K_TAIL_TOL,
};
pub use fit::fit_rate;
pub use tv::{empirical_pmf, tv_exact, tv_nb_shift_bound, TvDistance};
