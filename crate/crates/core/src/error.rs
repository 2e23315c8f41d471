use thiserror::Error;

use crate::learning::IterationDiagnostics;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("non-finite or invalid numeric value: {0}")]
    Numeric(String),

    #[error("trajectory left the admissible region at t = {t}")]
    Divergence { t: f64 },

    #[error("no period could be estimated: {0}")]
    NoPeriod(String),

    #[error("target duration {target} for neuron {neuron} is outside the reachable range [{min}, {max}]")]
    CalibrationRange {
        neuron: usize,
        target: f64,
        min: f64,
        max: f64,
    },

    #[error("calibration did not converge after {sweeps} sweeps (worst relative error {worst_rel_error})")]
    CalibrationFailure { sweeps: usize, worst_rel_error: f64 },

    #[error("degenerate regression: Var[f] = {variance_f} is below the floor")]
    DegenerateRegression { variance_f: f64 },

    #[error("structure learning exceeded {max_iters} rewiring iterations")]
    NonConvergence {
        max_iters: usize,
        diagnostics: Vec<IterationDiagnostics>,
    },

    #[error("window error: {0}")]
    Window(String),

    #[error("degenerate path: speed {speed} at sample {index} is below the floor")]
    DegeneratePath { index: usize, speed: f64 },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
