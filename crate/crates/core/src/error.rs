use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntervalError {
    #[error("interval endpoints out of order: [{lo}, {hi}]")]
    Reversed { lo: f64, hi: f64 },
    #[error("division by interval [{lo}, {hi}] which contains zero")]
    DivisionByIntervalContainingZero { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RdmError {
    #[error("RDM variable {id} already bound to {existing}, cannot rebind to {requested}")]
    RdmVarRebound {
        id: u32,
        existing: String,
        requested: String,
    },
    #[error("product would reach polynomial degree {degree}; RDM expressions are capped at 2")]
    DegreeOverflow { degree: usize },
    #[error("expression has {count} RDM variables, span enumeration is capped at {cap}")]
    TooManyRdmVars { count: usize, cap: usize },
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("topology is not radial: {0}")]
    NonRadialTopology(String),
    #[error("impedance matrix of branch {branch} is invalid: {detail}")]
    AsymmetricImpedance { branch: u32, detail: String },
    #[error("measurement #{index} refers to unknown location: {detail}")]
    UnknownLocation { index: usize, detail: String },
    #[error("measurement #{index} has an empty error interval: {detail}")]
    EmptyErrorInterval { index: usize, detail: String },
    #[error("measurement #{index} is not supported: {detail}")]
    UnsupportedMeasurement { index: usize, detail: String },
    #[error("duplicate measurement #{index}: {detail}")]
    DuplicateMeasurement { index: usize, detail: String },
    #[error("bus {bus} phase {phase} has no P/Q injection measurement (real, pseudo or zero-injection)")]
    MissingInjection { bus: u32, phase: char },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimationError {
    #[error("solution set is empty at iteration {iteration}: {detail}")]
    EmptySolutionSet { iteration: usize, detail: String },
    #[error("LP solver failed at iteration {iteration}: {detail}")]
    Numerical { iteration: usize, detail: String },
    #[error(transparent)]
    Rdm(#[from] RdmError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("power flow did not converge after {sweeps} sweeps (last mismatch {mismatch:e})")]
    NoConvergence { sweeps: usize, mismatch: f64 },
    #[error("result/trial lists differ in length: {results} vs {trials}")]
    LengthMismatch { results: usize, trials: usize },
    #[error("synthesized measurements do not form a valid system: {0}")]
    InvalidPlan(String),
}
