use rayon::prelude::*;

use super::cavity::{self, CavitySpec};
use super::jsa::phase_matching_from_mismatch;
use crate::dispersion::{CrystalSpec, Field};
use crate::error::{Result, SpdcError};

/// Emission spectrum along the cw energy-conservation line `ω_i = ω_p0 − ω_s`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterSpectrum {
    pub signal_omega: Vec<f64>,
    pub idler_omega: Vec<f64>,
    /// `A_s · A_i · |φ|² · (double-pass factor)²`, unnormalized.
    pub intensity: Vec<f64>,
}

/// Predicted cw spectrum over a wide window: the product of both Airy combs,
/// the phase-matching envelope and the double-pass factor, sampled at
/// `points` signal frequencies spanning `span` (rad/s) about `signal_center`.
pub fn cluster_spectrum(
    crystal: &CrystalSpec,
    cavity: &CavitySpec,
    pump_center: f64,
    signal_center: f64,
    span: f64,
    points: usize,
) -> Result<ClusterSpectrum> {
    if points < 2 || !(span > 0.0) {
        return Err(SpdcError::InvalidParameter(
            "cluster spectrum needs a positive span and at least 2 points".into(),
        ));
    }
    let fs = cavity::finesse(cavity, Field::Signal, crystal.length_m)?;
    let fi = cavity::finesse(cavity, Field::Idler, crystal.length_m)?;
    let step = span / (points - 1) as f64;
    let start = signal_center - 0.5 * span;
    let signal_omega: Vec<f64> = (0..points).map(|k| start + k as f64 * step).collect();
    let idler_omega: Vec<f64> = signal_omega.iter().map(|w| pump_center - w).collect();
    let intensity = signal_omega
        .par_iter()
        .zip(idler_omega.par_iter())
        .map(|(&ws, &wi)| -> Result<f64> {
            let a_s = cavity::airy_from_phase(fs, cavity::round_trip_phase(cavity, crystal, Field::Signal, ws)?);
            let a_i = cavity::airy_from_phase(fi, cavity::round_trip_phase(cavity, crystal, Field::Idler, wi)?);
            let dk = crate::dispersion::wavevector_mismatch(crystal, ws, wi)?;
            let pm = phase_matching_from_mismatch(dk, crystal.length_m).norm_sqr();
            let dp = cavity::double_pass_factor(cavity, dk, crystal.length_m);
            Ok(a_s * a_i * pm * dp * dp)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ClusterSpectrum {
        signal_omega,
        idler_omega,
        intensity,
    })
}

/// Indices of strict local maxima whose value exceeds `threshold`.
pub fn local_maxima(values: &[f64], threshold: f64) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&k| values[k] > threshold && values[k] > values[k - 1] && values[k] >= values[k + 1])
        .collect()
}

/// Vernier estimate of the cluster spacing, `FSR_s·FSR_i / |FSR_s − FSR_i|`.
pub fn vernier_spacing(fsr_signal: f64, fsr_idler: f64) -> f64 {
    fsr_signal * fsr_idler / (fsr_signal - fsr_idler).abs()
}
