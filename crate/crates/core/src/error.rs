use crate::expr::{EvalError, ParseError};
use crate::lattice::GridFunction;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error in `{source_text}`: {error}")]
    Parse {
        source_text: String,
        #[source]
        error: ParseError,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid stencil: {0}")]
    Stencil(String),
    #[error("invalid domain: {0}")]
    Domain(String),
    #[error("invalid problem: {0}")]
    Problem(String),
    #[error("shift {shift:?} leaves the box at lattice point {index}")]
    OutsideBox { shift: Vec<i64>, index: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("Gauss-Seidel did not converge after {iterations} sweeps (residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        best: Box<GridFunction>,
    },
    #[error("non-finite value after step {step} (t = {time})")]
    NonFinite { step: usize, time: f64 },
    #[error("{0}")]
    OutOfRange(String),
    #[error("tail bound {bound:e} exceeds tolerance {tol:e} at n_max = {n_max}")]
    TailTooLarge { bound: f64, tol: f64, n_max: usize },
    #[error("at h = {h}: {source}")]
    AtSpacing { h: f64, source: Box<Error> },
    #[error("extrapolation level {level}: {source}")]
    Level { level: usize, source: Box<Error> },
    #[error("config error{}: {message}", .line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(source_text: &str, error: ParseError) -> Self {
        Error::Parse {
            source_text: source_text.to_string(),
            error,
        }
    }

    pub(crate) fn at_spacing(h: f64) -> impl FnOnce(Error) -> Error {
        move |e| Error::AtSpacing { h, source: Box::new(e) }
    }

    /// Process exit code: 1 for bad input, 2 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotConverged { .. } | Error::NonFinite { .. } | Error::TailTooLarge { .. } => 2,
            Error::AtSpacing { source, .. } | Error::Level { source, .. } => source.exit_code(),
            _ => 1,
        }
    }
}
