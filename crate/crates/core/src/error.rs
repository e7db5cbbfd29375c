use thiserror::Error;

/// Errors raised by the solver and its numerical building blocks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index out of range: {what} = {index} (limit {limit})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("argument {arg} outside the validity window [{lo}, {hi}]")]
    OutsideWindow { arg: f64, lo: f64, hi: f64 },

    #[error("adaptive quadrature did not converge on [{lo}, {hi}]: error estimate {estimate:e} > tolerance {tol:e}")]
    QuadratureNonConvergence {
        lo: f64,
        hi: f64,
        estimate: f64,
        tol: f64,
    },

    #[error("matrix is singular to working precision (pivot {pivot} has modulus {modulus:e})")]
    Singular { pivot: usize, modulus: f64 },

    #[error("inversion residual {residual:e} exceeds {limit:e}")]
    IllConditioned { residual: f64, limit: f64 },

    #[error("{function}({re}{im:+}i) overflows double precision")]
    Overflow {
        function: &'static str,
        re: f64,
        im: f64,
    },

    #[error("sum-of-exponentials fit error {achieved:e} exceeds tolerance {tol:e}")]
    SoeAccuracy { achieved: f64, tol: f64 },

    #[error("discretization constraint violated: {0}")]
    Discretization(String),

    #[error("wavepacket parameters invalid: {0}")]
    Wavepacket(String),

    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("evaluation time {t} lies beyond the computed trajectory (final time {t_final})")]
    BeyondTrajectory { t: f64, t_final: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Configuration problems versus everything else; the CLI maps these onto exit codes.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::Json(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
