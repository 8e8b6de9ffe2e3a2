use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cavity::{self, CavitySpec};
use super::pump::{sinc, PumpSpec};
use crate::dispersion::{self, CrystalSpec, Field};
use crate::error::{Result, SpdcError};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Spectral axis of a two-photon grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectralAxis {
    Signal,
    Idler,
}

impl SpectralAxis {
    pub fn name(self) -> &'static str {
        match self {
            SpectralAxis::Signal => "signal",
            SpectralAxis::Idler => "idler",
        }
    }

    pub fn field(self) -> Field {
        match self {
            SpectralAxis::Signal => Field::Signal,
            SpectralAxis::Idler => Field::Idler,
        }
    }
}

/// Rectangular, uniformly spaced (ω_s, ω_i) grid. Point `a` of an axis sits
/// at `center + (a − (n−1)/2)·step`, so the grid is symmetric about its centre.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub signal_center: f64,
    pub signal_span: f64,
    pub idler_center: f64,
    pub idler_span: f64,
    pub signal_points: usize,
    pub idler_points: usize,
    /// Skip the linewidth/8 resolution guard (smoke-test grids only).
    #[serde(default)]
    pub relaxed_guard: bool,
}

impl FrequencyGrid {
    pub fn new(
        signal_center: f64,
        signal_span: f64,
        idler_center: f64,
        idler_span: f64,
        signal_points: usize,
        idler_points: usize,
    ) -> Result<Self> {
        let grid = FrequencyGrid {
            signal_center,
            signal_span,
            idler_center,
            idler_span,
            signal_points,
            idler_points,
            relaxed_guard: false,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn relaxed(mut self) -> Self {
        self.relaxed_guard = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.signal_points < 2 || self.idler_points < 2 {
            return Err(SpdcError::InvalidParameter(
                "grid needs at least 2 points per axis".into(),
            ));
        }
        if !(self.signal_span > 0.0 && self.idler_span > 0.0) {
            return Err(SpdcError::InvalidParameter("grid spans must be positive".into()));
        }
        Ok(())
    }

    pub fn points(&self, axis: SpectralAxis) -> usize {
        match axis {
            SpectralAxis::Signal => self.signal_points,
            SpectralAxis::Idler => self.idler_points,
        }
    }

    pub fn center(&self, axis: SpectralAxis) -> f64 {
        match axis {
            SpectralAxis::Signal => self.signal_center,
            SpectralAxis::Idler => self.idler_center,
        }
    }

    pub fn span(&self, axis: SpectralAxis) -> f64 {
        match axis {
            SpectralAxis::Signal => self.signal_span,
            SpectralAxis::Idler => self.idler_span,
        }
    }

    /// Angular-frequency step (rad/s).
    pub fn step(&self, axis: SpectralAxis) -> f64 {
        self.span(axis) / (self.points(axis) - 1) as f64
    }

    /// Detunings from the axis centre (rad/s).
    pub fn detunings(&self, axis: SpectralAxis) -> Vec<f64> {
        let n = self.points(axis);
        let step = self.step(axis);
        let mid = 0.5 * (n - 1) as f64;
        (0..n).map(|a| (a as f64 - mid) * step).collect()
    }

    /// Absolute angular frequencies (rad/s).
    pub fn omegas(&self, axis: SpectralAxis) -> Vec<f64> {
        let c = self.center(axis);
        self.detunings(axis).into_iter().map(|d| c + d).collect()
    }

    pub fn cell_area(&self) -> f64 {
        self.step(SpectralAxis::Signal) * self.step(SpectralAxis::Idler)
    }

    /// Checks step ≤ linewidth/8 on each axis for a resonant cavity.
    pub fn check_resolution(&self, crystal: &CrystalSpec, cavity: &CavitySpec) -> Result<()> {
        if self.relaxed_guard {
            return Ok(());
        }
        for axis in [SpectralAxis::Signal, SpectralAxis::Idler] {
            let field = axis.field();
            let facets = cavity.facets(field)?;
            if facets.r1 * facets.r2 == 0.0 {
                continue;
            }
            let lw = cavity::linewidth(cavity, crystal, field, dispersion::wavelength(self.center(axis)))?;
            let step_hz = self.step(axis) / TWO_PI;
            if step_hz > lw / 8.0 {
                return Err(SpdcError::ResolutionTooCoarse {
                    axis: axis.name(),
                    step_hz,
                    limit_hz: lw / 8.0,
                });
            }
        }
        Ok(())
    }
}

/// Complex joint spectral amplitude sampled on a [`FrequencyGrid`], stored
/// row-major with signal along rows and idler along columns.
#[derive(Clone, Debug, PartialEq)]
pub struct JsaGrid {
    pub grid: FrequencyGrid,
    pub amplitude: Vec<Complex64>,
    pub normalized: bool,
}

impl JsaGrid {
    pub fn from_parts(grid: FrequencyGrid, amplitude: Vec<Complex64>) -> Result<Self> {
        grid.validate()?;
        if amplitude.len() != grid.signal_points * grid.idler_points {
            return Err(SpdcError::InvalidParameter(format!(
                "amplitude has {} entries, grid needs {}",
                amplitude.len(),
                grid.signal_points * grid.idler_points
            )));
        }
        if amplitude.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(SpdcError::NumericalFailure("non-finite amplitude".into()));
        }
        Ok(JsaGrid {
            grid,
            amplitude,
            normalized: false,
        })
    }

    pub fn rows(&self) -> usize {
        self.grid.signal_points
    }

    pub fn cols(&self) -> usize {
        self.grid.idler_points
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> Complex64 {
        self.amplitude[row * self.cols() + col]
    }

    pub fn row(&self, row: usize) -> &[Complex64] {
        let n = self.cols();
        &self.amplitude[row * n..(row + 1) * n]
    }

    /// `Σ |ψ|² Δω_s Δω_i`, accumulated row by row in a fixed order.
    pub fn norm_integral(&self) -> f64 {
        let per_row: Vec<f64> = self
            .amplitude
            .par_chunks(self.cols())
            .map(|r| r.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .collect();
        per_row.iter().sum::<f64>() * self.grid.cell_area()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let norm = self.norm_integral();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(SpdcError::EmptyAmplitude);
        }
        let scale = 1.0 / norm.sqrt();
        self.amplitude.par_iter_mut().for_each(|z| *z *= scale);
        self.normalized = true;
        Ok(())
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.amplitude.iter().map(|z| z.norm_sqr()).collect()
    }

    /// (row, col) of the largest |ψ|²; the first occurrence wins ties.
    pub fn peak_index(&self) -> (usize, usize) {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (k, z) in self.amplitude.iter().enumerate() {
            let v = z.norm_sqr();
            if v > best.1 {
                best = (k, v);
            }
        }
        (best.0 / self.cols(), best.0 % self.cols())
    }
}

/// Phase-matching amplitude `sinc(ΔkL/2)·exp(iΔkL/2)` for a known mismatch.
#[inline]
pub fn phase_matching_from_mismatch(delta_k: f64, length_m: f64) -> Complex64 {
    let x = 0.5 * delta_k * length_m;
    Complex64::from_polar(1.0, x) * sinc(x)
}

/// Phase-matching function φ(ω_s, ω_i) of the crystal.
pub fn phase_matching(crystal: &CrystalSpec, omega_s: f64, omega_i: f64) -> Result<Complex64> {
    let dk = dispersion::wavevector_mismatch(crystal, omega_s, omega_i)?;
    Ok(phase_matching_from_mismatch(dk, crystal.length_m))
}

/// Per-axis quantities that only depend on one frequency.
struct AxisTable {
    omega: Vec<f64>,
    wavenumber: Vec<f64>,
    sqrt_airy: Vec<f64>,
}

fn axis_table(
    crystal: &CrystalSpec,
    cavity: &CavitySpec,
    grid: &FrequencyGrid,
    axis: SpectralAxis,
) -> Result<AxisTable> {
    let field = axis.field();
    let omega = grid.omegas(axis);
    let finesse = cavity::finesse(cavity, field, crystal.length_m)?;
    let mut wavenumber = Vec::with_capacity(omega.len());
    let mut sqrt_airy = Vec::with_capacity(omega.len());
    for &w in &omega {
        wavenumber.push(crystal.wavenumber(field, w)?);
        let phase = cavity::round_trip_phase(cavity, crystal, field, w)?;
        sqrt_airy.push(cavity::airy_from_phase(finesse, phase).sqrt());
    }
    Ok(AxisTable {
        omega,
        wavenumber,
        sqrt_airy,
    })
}

/// Evaluates `ψ_cavity = (A_s A_i)^{1/2} · (1 + r_p² + 2 r_p cos(ΔkL + φ_p))^{1/2} · α · φ`
/// on every grid point without normalizing. No resolution guard.
pub fn evaluate_jsa(
    crystal: &CrystalSpec,
    cavity: &CavitySpec,
    pump: &PumpSpec,
    grid: &FrequencyGrid,
) -> Result<JsaGrid> {
    grid.validate()?;
    cavity.validate()?;
    let sig = axis_table(crystal, cavity, grid, SpectralAxis::Signal)?;
    let idl = axis_table(crystal, cavity, grid, SpectralAxis::Idler)?;

    // Validity of every pump frequency follows from the extreme sums.
    let lo = sig.omega[0] + idl.omega[0];
    let hi = sig.omega[sig.omega.len() - 1] + idl.omega[idl.omega.len() - 1];
    crystal.wavenumber(Field::Pump, lo)?;
    crystal.wavenumber(Field::Pump, hi)?;

    let grating = crystal.grating_wavenumber();
    let length = crystal.length_m;
    let cols = grid.idler_points;
    let mut amplitude = vec![Complex64::new(0.0, 0.0); grid.signal_points * cols];
    amplitude
        .par_chunks_mut(cols)
        .enumerate()
        .try_for_each(|(a, row)| -> Result<()> {
            let ws = sig.omega[a];
            let ks = sig.wavenumber[a];
            let sa = sig.sqrt_airy[a];
            for (b, out) in row.iter_mut().enumerate() {
                let wi = idl.omega[b];
                let kp = crystal.wavenumber(Field::Pump, ws + wi)?;
                let dk = kp - ks - idl.wavenumber[b] + grating;
                let alpha = pump.amplitude_at_detuning(ws + wi - pump.center);
                let dp = cavity::double_pass_factor(cavity, dk, length);
                *out = phase_matching_from_mismatch(dk, length) * (sa * idl.sqrt_airy[b] * dp * alpha);
            }
            Ok(())
        })?;
    JsaGrid::from_parts(*grid, amplitude)
}

/// Normalized cavity JSA; enforces the resolution guard.
pub fn build_jsa(crystal: &CrystalSpec, cavity: &CavitySpec, pump: &PumpSpec, grid: &FrequencyGrid) -> Result<JsaGrid> {
    grid.check_resolution(crystal, cavity)?;
    let mut jsa = evaluate_jsa(crystal, cavity, pump, grid)?;
    jsa.normalize()?;
    Ok(jsa)
}

/// One-dimensional marginal density of a normalized JSA along `axis`
/// (per rad/s): `∫|ψ|² dω_other`.
pub fn marginal(jsa: &JsaGrid, axis: SpectralAxis) -> Vec<f64> {
    let (rows, cols) = (jsa.rows(), jsa.cols());
    match axis {
        SpectralAxis::Signal => {
            let d = jsa.grid.step(SpectralAxis::Idler);
            (0..rows)
                .map(|a| jsa.row(a).iter().map(|z| z.norm_sqr()).sum::<f64>() * d)
                .collect()
        }
        SpectralAxis::Idler => {
            let d = jsa.grid.step(SpectralAxis::Signal);
            let mut out = vec![0.0; cols];
            for a in 0..rows {
                for (o, z) in out.iter_mut().zip(jsa.row(a)) {
                    *o += z.norm_sqr();
                }
            }
            out.iter_mut().for_each(|v| *v *= d);
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::angular_frequency;
    use crate::spectral::cavity::nearest_resonance;

    fn small_grid(n: usize, span_hz: f64) -> FrequencyGrid {
        FrequencyGrid::new(
            angular_frequency(1540e-9),
            TWO_PI * span_hz,
            angular_frequency(1560e-9),
            TWO_PI * span_hz,
            n,
            n,
        )
        .unwrap()
    }

    #[test]
    fn phase_matching_closed_forms() {
        let one = phase_matching_from_mismatch(0.0, 1e-3);
        assert_eq!(one, Complex64::new(1.0, 0.0));
        let l = 4.2e-3;
        let zero = phase_matching_from_mismatch(2.0 * std::f64::consts::PI / l, l);
        assert!(zero.norm() < 1e-15);
        let q = phase_matching_from_mismatch(std::f64::consts::PI / l, l);
        assert!((q.norm() - 2.0 / std::f64::consts::PI).abs() < 1e-15);
        let z = phase_matching_from_mismatch(700.0, l);
        assert!((z.arg() - 0.5 * 700.0 * l).abs() < 1e-12);
    }

    #[test]
    fn phase_matching_at_design_point_is_unity() {
        let xtal = CrystalSpec::reference_device();
        let p = phase_matching(&xtal, angular_frequency(1540e-9), angular_frequency(1560e-9)).unwrap();
        assert!((p.norm() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn grid_axes_are_symmetric() {
        let g = small_grid(5, 1e9);
        let d = g.detunings(SpectralAxis::Signal);
        assert_eq!(d[2], 0.0);
        assert_eq!(d[0], -d[4]);
        assert!(FrequencyGrid::new(1.0, 1.0, 1.0, 1.0, 1, 4).is_err());
        assert!(FrequencyGrid::new(1.0, 0.0, 1.0, 1.0, 4, 4).is_err());
    }

    #[test]
    fn guard_rejects_coarse_grid() {
        let xtal = CrystalSpec::reference_device();
        let cav = CavitySpec::reference_device();
        let g = small_grid(64, 60e9);
        let pump = PumpSpec::gaussian(g.signal_center + g.idler_center, 1e-9).unwrap();
        let err = build_jsa(&xtal, &cav, &pump, &g).unwrap_err();
        assert!(matches!(err, SpdcError::ResolutionTooCoarse { .. }));
        assert!(build_jsa(&xtal, &cav, &pump, &g.relaxed()).is_ok());
        // no cavity, no guard
        assert!(build_jsa(&xtal, &CavitySpec::none(), &pump, &g).is_ok());
    }

    #[test]
    fn normalized_and_finite() {
        let xtal = CrystalSpec::reference_device();
        let cav = CavitySpec::reference_device();
        let g = small_grid(48, 5e9).relaxed();
        let pump = PumpSpec::gaussian(g.signal_center + g.idler_center, 0.5e-9).unwrap();
        let jsa = build_jsa(&xtal, &cav, &pump, &g).unwrap();
        assert!(jsa.normalized);
        assert!((jsa.norm_integral() - 1.0).abs() < 1e-9);
        for axis in [SpectralAxis::Signal, SpectralAxis::Idler] {
            let m = marginal(&jsa, axis);
            assert!(m.iter().all(|&v| v >= 0.0));
            let total: f64 = m.iter().sum::<f64>() * g.step(axis);
            assert!((total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn single_pass_free_space_limit() {
        // r_p = 0 and bare facets reduce the cavity JSA to α·φ exactly.
        let xtal = CrystalSpec::reference_device();
        let g = small_grid(32, 200e9);
        let pump = PumpSpec::gaussian(g.signal_center + g.idler_center, 20e-12).unwrap();
        let jsa = evaluate_jsa(&xtal, &CavitySpec::none(), &pump, &g).unwrap();
        let ws = g.omegas(SpectralAxis::Signal);
        let wi = g.omegas(SpectralAxis::Idler);
        for a in 0..32 {
            for b in 0..32 {
                let direct = super::super::pump::pump_envelope(&pump, ws[a], wi[b])
                    * phase_matching(&xtal, ws[a], wi[b]).unwrap();
                let got = jsa.at(a, b);
                let scale = direct.norm().max(1e-300);
                assert!((got - direct).norm() / scale < 1e-12);
            }
        }
    }

    #[test]
    fn double_pass_doubles_central_amplitude() {
        let xtal = CrystalSpec::reference_device();
        let mut single = CavitySpec::reference_device();
        single.pump_reflectivity = 0.0;
        let double = CavitySpec::reference_device();
        let ws = nearest_resonance(&double, &xtal, Field::Signal, angular_frequency(1540e-9)).unwrap();
        let wi = nearest_resonance(&double, &xtal, Field::Idler, angular_frequency(1560e-9)).unwrap();
        let g = FrequencyGrid::new(ws, TWO_PI * 2e9, wi, TWO_PI * 2e9, 9, 9)
            .unwrap()
            .relaxed();
        let pump = PumpSpec::gaussian(ws + wi, 1e-9).unwrap();
        let a = evaluate_jsa(&xtal, &single, &pump, &g).unwrap();
        let b = evaluate_jsa(&xtal, &double, &pump, &g).unwrap();
        let dk = dispersion::wavevector_mismatch(&xtal, ws, wi).unwrap();
        let expected = cavity::double_pass_factor(&double, dk, xtal.length_m);
        let ratio = b.at(4, 4).norm() / a.at(4, 4).norm();
        assert!((ratio - expected).abs() < 1e-12);
        assert!((ratio - 2.0).abs() < 1e-3);
    }

    #[test]
    fn empty_amplitude_is_reported() {
        let xtal = CrystalSpec::reference_device();
        let g = small_grid(16, 1e9);
        // pump tuned far away from the grid
        let pump = PumpSpec::gaussian(g.signal_center + g.idler_center + 1e14, 1e-9).unwrap();
        let err = build_jsa(&xtal, &CavitySpec::none(), &pump, &g).unwrap_err();
        assert_eq!(err, SpdcError::EmptyAmplitude);
    }
}
