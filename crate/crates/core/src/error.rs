use thiserror::Error;

use crate::instance::MetricReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to parse document: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("invalid metric: {0}")]
    InvalidMetric(MetricReport),

    #[error("weight of point `{label}` must be positive and finite, got {value}")]
    NonpositiveWeight { label: String, value: f64 },

    #[error("{what} has length {got}, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("duplicate point label `{0}`")]
    DuplicateLabel(String),

    #[error("unknown point label `{0}`")]
    UnknownLabel(String),

    #[error("point index {index} out of range for an instance with {n} points")]
    UnknownPoint { index: usize, n: usize },

    #[error("an instance needs at least {min} points, got {got}")]
    TooFewPoints { min: usize, got: usize },

    #[error("a schedule must visit at least one point")]
    EmptySchedule,

    #[error("point subset must be nonempty")]
    EmptySubset,

    #[error("cost exponent must be at least 2 (or infinity), got {0}")]
    InvalidExponent(f64),

    #[error("start point {0} is not a vertex of the tree")]
    StartNotInTree(usize),

    #[error("tree edge ({a}, {b}) has length {length} exceeding budget {budget}")]
    EdgeExceedsBudget {
        a: usize,
        b: usize,
        length: f64,
        budget: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("oracle limit exceeded: {0}")]
    OracleLimit(String),

    #[error("invalid mixed strategy: {0}")]
    InvalidStrategy(String),
}
