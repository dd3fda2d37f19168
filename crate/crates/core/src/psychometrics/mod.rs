//! Two-interval latency-detection trials: quasi-random stimulus placement and
//! logistic psychometric fitting with fixed guess and lapse rates.

mod fit;
mod sobol;

pub use fit::{
    fit_logistic, fit_logistic_with, grid, synthetic_trials, threshold_at, Boundary, FitOptions,
    PooledTrials, PsychometricFit, SearchBox, TrialRecord, DEFAULT_GUESS, DEFAULT_LAPSE,
};
pub use sobol::{sobol_latencies, sobol_points};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PsychometricsError {
    #[error("invalid stimulus range [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("{0} points exceed the 31-bit sequence length")]
    TooManyPoints(usize),
    #[error("no trials to fit")]
    NoTrials,
    #[error("all trials use the single stimulus level {0} ms")]
    SingleLevel(f64),
    #[error("stimulus latency {0} ms must be finite and non-negative")]
    InvalidLatency(f64),
    #[error("guess rate {guess} and lapse rate {lapse} leave no room for the curve")]
    InvalidRates { guess: f64, lapse: f64 },
    #[error("fit did not converge; no threshold")]
    NotConverged,
    #[error("criterion {criterion} outside the attainable range ({lo}, {hi})")]
    CriterionOutOfRange { criterion: f64, lo: f64, hi: f64 },
}
