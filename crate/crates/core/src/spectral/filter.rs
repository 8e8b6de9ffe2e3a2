use serde::{Deserialize, Serialize};

use super::jsa::{JsaGrid, SpectralAxis};
use crate::error::{Result, SpdcError};

/// Transmission line shape of a spectral filter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LineShape {
    Lorentzian,
    /// Periodic etalon response with the given free spectral range (Hz).
    Airy {
        fsr_hz: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    /// Centre angular frequency (rad/s).
    pub center: f64,
    /// Intensity FWHM (Hz).
    pub bandwidth_hz: f64,
    pub shape: LineShape,
    pub axis: SpectralAxis,
}

impl FilterSpec {
    pub fn lorentzian(axis: SpectralAxis, center: f64, bandwidth_hz: f64) -> Result<Self> {
        let f = FilterSpec {
            center,
            bandwidth_hz,
            shape: LineShape::Lorentzian,
            axis,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_hz > 0.0) {
            return Err(SpdcError::InvalidParameter(format!(
                "filter bandwidth must be positive, got {}",
                self.bandwidth_hz
            )));
        }
        if let LineShape::Airy { fsr_hz } = self.shape {
            if !(fsr_hz > self.bandwidth_hz) {
                return Err(SpdcError::InvalidParameter(
                    "etalon FSR must exceed its bandwidth".into(),
                ));
            }
        }
        Ok(())
    }

    /// Intensity transmission at angular frequency `omega`; unity at the centre.
    pub fn intensity_transmission(&self, omega: f64) -> f64 {
        let detuning_hz = (omega - self.center) / (2.0 * std::f64::consts::PI);
        match self.shape {
            LineShape::Lorentzian => {
                let x = 2.0 * detuning_hz / self.bandwidth_hz;
                1.0 / (1.0 + x * x)
            }
            LineShape::Airy { fsr_hz } => {
                // coefficient fixed so that T = 1/2 exactly at ±FWHM/2
                let half = (std::f64::consts::PI * self.bandwidth_hz / (2.0 * fsr_hz)).sin();
                let s = (std::f64::consts::PI * detuning_hz / fsr_hz).sin() / half;
                1.0 / (1.0 + s * s)
            }
        }
    }

    pub fn amplitude_transmission(&self, omega: f64) -> f64 {
        self.intensity_transmission(omega).sqrt()
    }
}

/// Multiplies the amplitude along each filter's axis by the square root of its
/// intensity transmission, then renormalizes.
pub fn apply_filter(jsa: &JsaGrid, filters: &[FilterSpec]) -> Result<JsaGrid> {
    let grid = &jsa.grid;
    let mut row_gain = vec![1.0; jsa.rows()];
    let mut col_gain = vec![1.0; jsa.cols()];
    for f in filters {
        f.validate()?;
        let omegas = grid.omegas(f.axis);
        let (lo, hi) = (omegas[0], omegas[omegas.len() - 1]);
        if f.center < lo || f.center > hi {
            return Err(SpdcError::FilterOffGrid {
                axis: f.axis.name(),
                center_hz: f.center / (2.0 * std::f64::consts::PI),
            });
        }
        let gains = match f.axis {
            SpectralAxis::Signal => &mut row_gain,
            SpectralAxis::Idler => &mut col_gain,
        };
        for (g, &w) in gains.iter_mut().zip(&omegas) {
            *g *= f.amplitude_transmission(w);
        }
    }
    let cols = jsa.cols();
    let amplitude = jsa
        .amplitude
        .chunks(cols)
        .zip(&row_gain)
        .flat_map(|(row, &rg)| row.iter().zip(&col_gain).map(move |(z, &cg)| z * (rg * cg)))
        .collect();
    let mut out = JsaGrid::from_parts(*grid, amplitude)?;
    out.normalize()?;
    Ok(out)
}
