use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NonHermitian { deviation: f64 },

    #[error("unsupported dimension {dim}: {context}")]
    UnsupportedDimension { dim: usize, context: &'static str },

    #[error(
        "map is not CPTP: most negative Choi eigenvalue {min_eigenvalue:e}, \
         trace-preservation deviation {trace_deviation:e}"
    )]
    NotCptp {
        min_eigenvalue: f64,
        trace_deviation: f64,
    },

    #[error("time {t} is not available on the grid [{start}, {end}]")]
    OffGrid { t: f64, start: f64, end: f64 },

    #[error("numerical inconsistency: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
