use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpdcError};

/// Temporal profile of the pump.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseShape {
    Cw,
    Gaussian,
    Square,
}

impl PulseShape {
    pub fn name(self) -> &'static str {
        match self {
            PulseShape::Cw => "cw",
            PulseShape::Gaussian => "gaussian",
            PulseShape::Square => "square",
        }
    }
}

/// Pump field: centre frequency and pulse shape.
///
/// `duration_s` is the FWHM of the temporal intensity of a transform-limited
/// pulse. For a Gaussian, the field `exp(−t²/2σ_t²)` has FWHM `2σ_t√ln2`, so the
/// spectral amplitude width is `σ_f = 1/σ_t = 2√ln2/τ_p`. A cw pump is
/// represented as a Gaussian with an explicitly supplied narrow `σ_f`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PumpSpec {
    /// Centre angular frequency ω_p0 (rad/s).
    pub center: f64,
    pub shape: PulseShape,
    /// Pulse duration τ_p (s); `f64::INFINITY` for cw.
    pub duration_s: f64,
    /// Spectral amplitude width σ_f (rad/s).
    pub sigma_f: f64,
}

pub fn gaussian_sigma_f(duration_s: f64) -> f64 {
    2.0 * std::f64::consts::LN_2.sqrt() / duration_s
}

impl PumpSpec {
    pub fn gaussian(center: f64, duration_s: f64) -> Result<Self> {
        check_duration(duration_s)?;
        Ok(PumpSpec {
            center,
            shape: PulseShape::Gaussian,
            duration_s,
            sigma_f: gaussian_sigma_f(duration_s),
        })
    }

    /// Top-hat of duration `duration_s`; `sigma_f` is set to `2π/τ_p`, the
    /// detuning of the first spectral node.
    pub fn square(center: f64, duration_s: f64) -> Result<Self> {
        check_duration(duration_s)?;
        Ok(PumpSpec {
            center,
            shape: PulseShape::Square,
            duration_s,
            sigma_f: 2.0 * std::f64::consts::PI / duration_s,
        })
    }

    pub fn cw(center: f64, sigma_f: f64) -> Result<Self> {
        if !(sigma_f > 0.0 && sigma_f.is_finite()) {
            return Err(SpdcError::InvalidParameter(format!(
                "cw effective width must be positive, got {sigma_f}"
            )));
        }
        Ok(PumpSpec {
            center,
            shape: PulseShape::Cw,
            duration_s: f64::INFINITY,
            sigma_f,
        })
    }

    pub fn with_shape(center: f64, shape: PulseShape, duration_s: f64) -> Result<Self> {
        match shape {
            PulseShape::Gaussian => Self::gaussian(center, duration_s),
            PulseShape::Square => Self::square(center, duration_s),
            PulseShape::Cw => Err(SpdcError::InvalidParameter(
                "cw pump needs an explicit effective width".into(),
            )),
        }
    }

    /// Real spectral amplitude at pump detuning `ω_s + ω_i − ω_p0`.
    #[inline]
    pub fn amplitude_at_detuning(&self, detuning: f64) -> f64 {
        match self.shape {
            PulseShape::Cw | PulseShape::Gaussian => {
                let x = detuning / self.sigma_f;
                (-0.5 * x * x).exp()
            }
            PulseShape::Square => sinc(0.5 * detuning * self.duration_s),
        }
    }
}

fn check_duration(duration_s: f64) -> Result<()> {
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(SpdcError::InvalidParameter(format!(
            "pulse duration must be positive, got {duration_s}"
        )));
    }
    Ok(())
}

/// `sin(x)/x` with the removable singularity filled in.
#[inline]
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Pump-induced spectral amplitude α(ω_s, ω_i).
pub fn pump_envelope(pump: &PumpSpec, omega_s: f64, omega_i: f64) -> Complex64 {
    Complex64::new(pump.amplitude_at_detuning(omega_s + omega_i - pump.center), 0.0)
}
