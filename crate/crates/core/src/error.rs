use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("point {x} outside domain [{lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },

    #[error("unknown {kind} '{name}'")]
    UnknownName { kind: &'static str, name: String },

    #[error("schedule error: {0}")]
    Schedule(String),

    #[error("compactification kind mismatch: {0}")]
    KindMismatch(String),

    #[error("degenerate fiber: no mass on the finite part (normalizer {0})")]
    DegenerateFiber(f64),

    #[error("incomplete triple: no mu-hat fiber at x = {x}, s = {s}")]
    IncompleteTriple { x: f64, s: String },

    #[error("q = {q} is not below the Sobolev exponent p* = {p_star}")]
    Subcritical { q: f64, p_star: f64 },

    #[error("boundedness error: {0}")]
    Boundedness(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("recession error: {0}")]
    Recession(String),

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("{0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
