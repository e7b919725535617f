use thiserror::Error;

use crate::simulator::Trajectory;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid converter parameters: {0}")]
    InvalidParams(String),

    /// The QR iteration did not deflate. Carries the offending matrix in row-major order.
    #[error("eigenvalue iteration failed to converge on a {n}x{n} matrix")]
    EigenConvergence { n: usize, matrix: Vec<f64> },

    #[error("no sign change in bracket [{lo}, {hi}] (f(lo)={f_lo}, f(hi)={f_hi})")]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("state diverged in cycle {cycle}")]
    Divergence {
        cycle: usize,
        partial: Option<Box<Trajectory>>,
    },

    #[error(
        "Newton iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("steady state is saturated: duty {duty} outside (0, 1)")]
    Saturated { duty: f64 },

    #[error("switching is tangent to the ramp (C·x'(d-) - h' = {denominator:e})")]
    Grazing { denominator: f64 },

    #[error("evaluation at a pole: {0}")]
    Pole(String),

    #[error("frequency {omega} rad/s outside the valid range |omega| < {limit} rad/s")]
    FrequencyRange { omega: f64, limit: f64 },

    #[error("unsupported topology: {0}")]
    UnsupportedTopology(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

impl Error {
    /// Stable machine-readable category used by front ends.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::Domain(_) => "domain",
            Error::InvalidParams(_) => "invalid_params",
            Error::EigenConvergence { .. } => "eigen_convergence",
            Error::Bracket { .. } => "bracket",
            Error::Divergence { .. } => "divergence",
            Error::NoConvergence { .. } => "no_convergence",
            Error::Saturated { .. } => "saturated",
            Error::Grazing { .. } => "grazing",
            Error::Pole(_) => "pole",
            Error::FrequencyRange { .. } => "frequency_range",
            Error::UnsupportedTopology(_) => "unsupported_topology",
            Error::InsufficientData(_) => "insufficient_data",
        }
    }
}
