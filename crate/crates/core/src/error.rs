use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("integration failed at t = {t}: {reason}")]
    IntegrationFailure { t: f64, reason: String },

    #[error("observable is not differentiable here (|r| = {magnitude:e})")]
    DegenerateObservable { magnitude: f64 },

    #[error("time {t} is outside the control horizon [0, {horizon}]")]
    OutOfDomain { t: f64, horizon: f64 },

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("degenerate problem: {0}")]
    Degenerate(String),

    #[error("target {target} is not attained on (0, {tau_max}]")]
    TargetUnreachable { target: f64, tau_max: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        iterate: Vec<f64>,
    },

    #[error("KKT Jacobian is numerically singular (condition estimate {condition:e})")]
    SingularJacobian { condition: f64, iterate: Vec<f64> },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("graph file, line {line}: {message}")]
    GraphParse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics, as opposed to bad input or I/O.
    pub fn is_numeric(&self) -> bool {
        !matches!(
            self,
            Error::InvalidInput(_) | Error::GraphParse { .. } | Error::Io(_)
        )
    }
}
