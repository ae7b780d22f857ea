use thiserror::Error;

use crate::fem::EigResult;
use crate::subcritical::MaximizerResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension n = {0} is not supported (need n >= 2)")]
    InvalidDimension(u32),

    #[error("operation needs n = {expected} (mesh dimension), got n = {got}")]
    DimensionMismatch { expected: u32, got: u32 },

    #[error("field has {got} coefficients but the mesh has {expected} nodes")]
    FieldSize { expected: usize, got: usize },

    #[error("point ({0}, {1}) lies outside the mesh")]
    PointOutside(f64, f64),

    #[error("adaptive quadrature did not reach tolerance {tol:e} (estimate {estimate:e})")]
    Quadrature { tol: f64, estimate: f64 },

    #[error("exponent {exponent:.3} exceeds the overflow cap {cap}; the iterate is blowing up")]
    ExponentOverflow { exponent: f64, cap: f64 },

    #[error("negative radicand {0:e} in the (1, alpha) norm: alpha is not below lambda_1 or the field is not mean-zero")]
    NegativeRadicand(f64),

    #[error("blow-up scale underflows to zero (c_eps = {0})")]
    ScaleUnderflow(f64),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("eigen solver did not converge after {} iterations (residual {:e})", .0.iterations, .0.residual)]
    EigenNotConverged(Box<EigResult>),

    #[error("maximizer did not converge after {} iterations (residual {:e})", .0.iterations, .0.el_residual)]
    MaximizeNotConverged(Box<MaximizerResult>),

    #[error("Green fixed point diverged ({} iterations, last update {:e})", .history.len(), .history.last().copied().unwrap_or(f64::NAN))]
    GreenDiverged { history: Vec<f64> },

    #[error("only {found} samples in the fit annulus, need at least {needed}")]
    TooFewSamples { found: usize, needed: usize },

    #[error("empty level band [{c1}, {c2}] on the mesh")]
    EmptyBand { c1: f64, c2: f64 },

    #[error("infinite capacity: c1 = c2 with a != b")]
    InfiniteCapacity,

    #[error("mesh too coarse: {0}")]
    Unresolved(String),

    #[error("sample radius {radius} exceeds the domain scale {scale}")]
    SampleRadius { radius: f64, scale: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors that indicate a solver failed to converge (as opposed
    /// to invalid input).
    pub fn is_convergence_failure(&self) -> bool {
        matches!(
            self,
            Error::NotConverged { .. }
                | Error::EigenNotConverged(_)
                | Error::MaximizeNotConverged(_)
                | Error::GreenDiverged { .. }
                | Error::Quadrature { .. }
                | Error::ExponentOverflow { .. }
        )
    }
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
