use thiserror::Error;

use crate::model::ParitySector;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("chain of {n_sites} sites exceeds the configured maximum of {max_sites} (set MAJB_MAX_N to raise it)")]
    Capacity { n_sites: usize, max_sites: usize },

    #[error("basis index {index} out of range for {n_sites} sites")]
    IndexOutOfRange { index: usize, n_sites: usize },

    #[error("site {site} out of range 1..={n_sites}")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("operator is not block diagonal in parity: off-block element {off_block:e} exceeds {tolerance:e}")]
    SymmetryViolation { off_block: f64, tolerance: f64 },

    #[error("eigensolver for {sector:?} sector did not converge after {matvecs} matrix applications (worst residual {worst_residual:e})")]
    NoConvergence {
        sector: ParitySector,
        matvecs: usize,
        worst_residual: f64,
    },

    #[error("requested {requested} eigenpairs but only {available} are available")]
    MissingEigenpairs { requested: usize, available: usize },

    #[error("matrix element table has no entry for ({n}, {m})")]
    MissingElement { n: usize, m: usize },

    #[error("transition frequency {freq:e} is below the floor {floor:e}; use the low-frequency channel")]
    SmallGap { freq: f64, floor: f64 },

    #[error("bath statistics do not match the noise type: {0}")]
    StatisticsMismatch(String),

    #[error("missing rate for transition {0}")]
    MissingRate(String),

    #[error("density matrix invariant violated at t = {time}: {what}")]
    Integration { time: f64, what: String },

    #[error("steady state is not unique: stationary subspace has dimension {multiplicity}")]
    NonUniqueSteadyState {
        multiplicity: usize,
        /// Population vectors spanning the stationary population subspace.
        population_basis: Vec<Vec<f64>>,
        /// Level pairs whose coherence is neither damped nor rotating.
        stationary_coherences: Vec<(usize, usize)>,
    },

    #[error("invalid sweep grid: {0}")]
    InvalidGrid(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}
