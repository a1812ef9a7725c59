use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid distribution: {0}")]
    InvalidSpec(String),

    #[error("cannot parse distribution {input:?}: unexpected {token:?}")]
    SpecParse { input: String, token: String },

    #[error("{0} is not admissible for simulation: {1}")]
    Unsupported(String, &'static str),

    #[error("moment `{0}` is undefined for this distribution")]
    UndefinedMoment(&'static str),

    #[error("sample is degenerate (all observations equal)")]
    DegenerateSample,

    #[error("expected a {expected} curve, got {found}")]
    WrongCurveKind {
        expected: &'static str,
        found: &'static str,
    },

    #[error("standard curve is not injective around target {target}; use a denser nominal grid")]
    NonInjective { target: f64 },

    #[error("empirical quantile falls into the hull-violation mass")]
    QuantileInHullMass,

    #[error("malformed {what}: {msg}")]
    Format { what: &'static str, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn format(what: &'static str, msg: impl Into<String>) -> Self {
        Error::Format {
            what,
            msg: msg.into(),
        }
    }
}
