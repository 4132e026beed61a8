use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coincident evaluation points; the bulk tensor diverges there, use im_coincident_green for the r1 = r2 limit")]
    CoincidentPoints,

    #[error("point with z = {z:.6e} m lies in or on the plate; mirror geometry requires z > 0")]
    PointInPlate { z: f64 },

    #[error("{what} must be positive, got {value:.6e}")]
    NonPositive { what: &'static str, value: f64 },

    #[error("level index {level} outside the valid range {min}..={max} for N = {n_atoms}")]
    LevelOutOfRange {
        level: usize,
        min: usize,
        max: usize,
        n_atoms: usize,
    },

    #[error("size mismatch: {left_name} has N = {left}, {right_name} has N = {right}")]
    SizeMismatch {
        left_name: &'static str,
        left: usize,
        right_name: &'static str,
        right: usize,
    },

    #[error("ladder with N = {n_atoms} exceeds the dense master-equation cap of {cap}")]
    LadderTooLarge { n_atoms: usize, cap: usize },

    #[error("integrator failed at t = {t:.6e} s: {detail}")]
    SolverFailure { t: f64, detail: String },

    #[error("population {value:.3e} below zero beyond tolerance at t = {t:.6e} s; integration rejected")]
    NegativePopulation { t: f64, value: f64 },

    #[error("normalization drifted by {drift:.3e} at t = {t:.6e} s (tolerance {tol:.1e})")]
    NormDrift { t: f64, drift: f64, tol: f64 },

    #[error("density matrix lost hermiticity by {deviation:.3e} at t = {t:.6e} s")]
    HermiticityLoss { t: f64, deviation: f64 },

    #[error("initial level distribution sums to {sum:.6e}, expected 1")]
    BadInitialDistribution { sum: f64 },

    #[error("time series needs at least {need} samples, got {got}")]
    TooFewSamples { got: usize, need: usize },

    #[error("time grid is not uniform or not strictly increasing")]
    NonUniformGrid,

    #[error("series is identically zero; no peak to extract")]
    DegenerateSeries,

    #[error("no half-maximum crossing after the peak; extend t_max and rerun")]
    NoHalfMaxCrossing,

    #[error("power-law fit needs at least 4 points, got {got}")]
    TooFewFitPoints { got: usize },

    #[error("power-law fit requires positive data, got ({n:.6e}, {value:.6e})")]
    NonPositiveFitValue { n: f64, value: f64 },

    #[error("fidelity map grid is empty or degenerate: {detail}")]
    BadGrid { detail: String },

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code contract: 1 for configuration problems, 2 for
    /// numerical or I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("config line {line}: {kind}")]
pub struct ConfigError {
    /// 1-based line number; 0 when the problem is not tied to a single line
    /// (missing key, cross-key validation).
    pub line: usize,
    pub kind: ConfigErrorKind,
}

impl ConfigError {
    pub fn at(line: usize, kind: ConfigErrorKind) -> Self {
        ConfigError { line, kind }
    }

    pub fn global(kind: ConfigErrorKind) -> Self {
        ConfigError { line: 0, kind }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigErrorKind {
    #[error("expected `key = value`")]
    Syntax,

    #[error("unknown key `{key}`")]
    UnknownKey { key: String },

    #[error("key `{key}` carries unit suffix `{got}`; this quantity is fixed to `{expected}`")]
    UnitSuffixMismatch {
        key: String,
        got: String,
        expected: String,
    },

    #[error("missing required key `{key}`")]
    MissingKey { key: String },

    #[error("duplicate key `{key}`")]
    DuplicateKey { key: String },

    #[error("invalid value for `{key}`: {detail}")]
    InvalidValue { key: String, detail: String },
}
