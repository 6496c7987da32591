use std::fmt;

use crate::assessment::SimilarityProfile;
use crate::model::Finding;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("sample too small: need at least {needed} values, got {got}")]
    SampleTooSmall { needed: usize, got: usize },

    #[error("CV undefined at zero mean")]
    ZeroMean,

    #[error("correlation undefined: {0}")]
    CorrelationUndefined(String),

    #[error("{0}")]
    Agreement(String),

    #[error("incomplete system coverage: {0}")]
    IncompleteCoverage(String),

    #[error("value {value} is below the scale minimum {scale_min}")]
    BelowScale { value: f64, scale_min: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },

    #[error("bundle failed validation with {} finding(s)", .0.len())]
    Validation(Vec<Finding>),

    #[error("experiments are not comparable under strict mode: {}", GateSummary(.0))]
    GateRefused(Vec<(String, SimilarityProfile)>),

    #[error("malformed report: {0}")]
    Report(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

struct GateSummary<'a>(&'a [(String, SimilarityProfile)]);

impl fmt::Display for GateSummary<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (qc, profile) in self.0 {
            if profile.different.is_empty() {
                continue;
            }
            if !first {
                write!(f, "; ")?;
            }
            first = false;
            let keys: Vec<&str> = profile.different.iter().map(|d| d.key.as_str()).collect();
            write!(f, "{qc} differs on {}", keys.join(", "))?;
        }
        Ok(())
    }
}
