use thiserror::Error;

/// Errors raised anywhere in the simulation and fitting pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpdcError {
    #[error("{quantity} = {value} outside validity range [{min}, {max}]")]
    OutOfRange {
        quantity: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("no sign change of the wavevector mismatch in [{t_min} C, {t_max} C]")]
    NoRoot { t_min: f64, t_max: f64 },
    #[error("degenerate cavity: round-trip factor R1*R2*exp(-2aL) = {0} >= 1")]
    DegenerateCavity(f64),
    #[error("grid step {step_hz} Hz on the {axis} axis exceeds linewidth/8 = {limit_hz} Hz")]
    ResolutionTooCoarse {
        axis: &'static str,
        step_hz: f64,
        limit_hz: f64,
    },
    #[error("filter centre {center_hz} Hz lies outside the {axis} grid")]
    FilterOffGrid { axis: &'static str, center_hz: f64 },
    #[error("integration window lies outside the grid")]
    WindowOffGrid,
    #[error("joint spectral amplitude vanishes on the grid")]
    EmptyAmplitude,
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("fit did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("value {value} outside the domain {domain}")]
    DomainError { value: f64, domain: &'static str },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no interior maximum in bracket; best boundary point tau = {best_tau} s, P = {best_purity}")]
    NoInteriorMaximum { best_tau: f64, best_purity: f64 },
    #[error("input error: {0}")]
    Config(String),
}

impl SpdcError {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            SpdcError::NumericalFailure(_)
                | SpdcError::NonConvergence { .. }
                | SpdcError::EmptyAmplitude
                | SpdcError::NoInteriorMaximum { .. }
                | SpdcError::NoRoot { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, SpdcError>;
