use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("variable `{var}` has no state `{state}`")]
    UnknownState { var: String, state: String },

    #[error("bad reference `{text}`: {reason}")]
    BadReference { text: String, reason: String },

    #[error("variable `{0}` assigned more than once")]
    DuplicateAssignment(String),

    #[error("assignment does not cover variable `{0}`")]
    IncompleteAssignment(String),

    #[error("parameter value {0} outside [0, 1]")]
    ValueOutOfRange(f64),

    #[error("evidence has probability zero")]
    ZeroEvidence,

    #[error("{quantity} is not linear in the parameter: {detail}")]
    NotLinear { quantity: String, detail: String },

    #[error("denominator coefficients vanish; the evidence probability is identically zero along this parameter")]
    DegenerateDenominator,

    #[error("vertical asymptote at s = {0} lies inside the unit window")]
    AsymptoteInWindow(f64),

    #[error("bounds need an interior anchor, got x0 = {x0}, p0 = {p0}")]
    BoundaryAnchor { x0: f64, p0: f64 },

    #[error("unknown output format `{0}` (expected table, csv or json)")]
    UnknownFormat(String),

    #[error("{0}")]
    InvalidArgument(String),
}
