//! Crystal dispersion: refractive and group indices, wavevector mismatch,
//! free spectral range and phase-matching temperature for a periodically
//! poled KTP crystal.
//!
//! Internally all spectral variables are angular frequencies (rad/s) and
//! wavelengths are in metres; the Sellmeier polynomials themselves take
//! wavelengths in micrometres.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpdcError};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Relative wavelength step of the central difference used for `dn/dλ`.
pub const GROUP_INDEX_REL_STEP: f64 = 1e-5;

/// Temperature tolerance of the phase-matching bisection (°C).
pub const PHASE_MATCHING_TOL_C: f64 = 1e-4;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Converts a vacuum wavelength (m) to an angular frequency (rad/s).
pub fn angular_frequency(wavelength_m: f64) -> f64 {
    TWO_PI * SPEED_OF_LIGHT / wavelength_m
}

/// Converts an angular frequency (rad/s) to a vacuum wavelength (m).
pub fn wavelength(angular_frequency: f64) -> f64 {
    TWO_PI * SPEED_OF_LIGHT / angular_frequency
}

/// Principal dielectric axis of a biaxial crystal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Y,
    Z,
}

/// The three interacting fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Pump,
    Signal,
    Idler,
}

impl Field {
    pub fn name(self) -> &'static str {
        match self {
            Field::Pump => "pump",
            Field::Signal => "signal",
            Field::Idler => "idler",
        }
    }
}

/// Dispersion of one crystal axis.
///
/// `n0² = constant + Σ b/(λ² − c)` with λ in µm, plus a thermal correction
/// `n1(λ)·ΔT + n2(λ)·ΔT²` where `n_j(λ) = Σ_m a_jm / λ^m` and
/// `ΔT = T − reference`. `trim` is an additive index offset used for
/// calibration against device measurements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisDispersion {
    pub constant: f64,
    pub poles: Vec<(f64, f64)>,
    pub thermal_linear: [f64; 4],
    pub thermal_quadratic: [f64; 4],
    #[serde(default)]
    pub trim: f64,
}

impl AxisDispersion {
    fn index_unchecked(&self, lambda_um: f64, delta_t: f64) -> f64 {
        let l2 = lambda_um * lambda_um;
        let n_sq = self.poles.iter().fold(self.constant, |acc, &(b, c)| acc + b / (l2 - c));
        let inv = 1.0 / lambda_um;
        let poly = |a: &[f64; 4]| a[0] + inv * (a[1] + inv * (a[2] + inv * a[3]));
        n_sq.sqrt()
            + poly(&self.thermal_linear) * delta_t
            + poly(&self.thermal_quadratic) * delta_t * delta_t
            + self.trim
    }
}

/// A named, versioned Sellmeier coefficient set with its validity window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SellmeierModel {
    pub name: String,
    pub version: u32,
    pub y: AxisDispersion,
    pub z: AxisDispersion,
    /// Inclusive validity window, vacuum wavelength in µm.
    pub wavelength_range_um: (f64, f64),
    /// Inclusive validity window in °C.
    pub temperature_range_c: (f64, f64),
    /// Reference temperature of the thermal correction, °C.
    pub reference_temperature_c: f64,
}

impl SellmeierModel {
    /// Flux-grown KTP: room-temperature y/z coefficients of Kato & Takaoka
    /// (Appl. Opt. 41, 5040, 2002) with the thermo-optic polynomials of
    /// Emanueli & Arie (Appl. Opt. 42, 6661, 2003).
    pub fn ktp() -> Self {
        SellmeierModel {
            name: "ktp-kato2002-emanueli2003".to_string(),
            version: 1,
            y: AxisDispersion {
                constant: 3.45018,
                poles: vec![(0.04341, 0.04597), (16.98825, 39.43799)],
                thermal_linear: [6.2897e-6, 6.3061e-6, -6.0629e-6, 2.6486e-6],
                thermal_quadratic: [-0.14445e-8, 2.2244e-8, -3.5770e-8, 1.3470e-8],
                trim: 0.0,
            },
            z: AxisDispersion {
                constant: 4.59423,
                poles: vec![(0.06206, 0.04763), (110.80672, 86.12171)],
                thermal_linear: [9.9587e-6, 9.9228e-6, -8.9603e-6, 4.1010e-6],
                thermal_quadratic: [-1.1882e-8, 10.459e-8, -9.8136e-8, 3.1481e-8],
                trim: 0.0,
            },
            wavelength_range_um: (0.5, 1.7),
            temperature_range_c: (15.0, 100.0),
            reference_temperature_c: 25.0,
        }
    }

    /// Constant-index model on both axes (no dispersion, no thermal drift).
    pub fn dispersionless(index: f64) -> Self {
        let axis = AxisDispersion {
            constant: index * index,
            poles: Vec::new(),
            thermal_linear: [0.0; 4],
            thermal_quadratic: [0.0; 4],
            trim: 0.0,
        };
        SellmeierModel {
            name: format!("constant-{index}"),
            version: 1,
            y: axis.clone(),
            z: axis,
            wavelength_range_um: (0.2, 5.0),
            temperature_range_c: (-50.0, 250.0),
            reference_temperature_c: 25.0,
        }
    }

    pub fn axis(&self, axis: Axis) -> &AxisDispersion {
        match axis {
            Axis::Y => &self.y,
            Axis::Z => &self.z,
        }
    }

    pub fn axis_mut(&mut self, axis: Axis) -> &mut AxisDispersion {
        match axis {
            Axis::Y => &mut self.y,
            Axis::Z => &mut self.z,
        }
    }

    pub fn with_trim(mut self, axis: Axis, trim: f64) -> Self {
        self.axis_mut(axis).trim = trim;
        self
    }

    fn check_temperature(&self, temperature_c: f64) -> Result<()> {
        let (lo, hi) = self.temperature_range_c;
        if !(lo..=hi).contains(&temperature_c) {
            return Err(SpdcError::OutOfRange {
                quantity: "temperature (C)",
                value: temperature_c,
                min: lo,
                max: hi,
            });
        }
        Ok(())
    }

    fn check_wavelength(&self, lambda_um: f64) -> Result<()> {
        let (lo, hi) = self.wavelength_range_um;
        if !(lo..=hi).contains(&lambda_um) {
            return Err(SpdcError::OutOfRange {
                quantity: "wavelength (um)",
                value: lambda_um,
                min: lo,
                max: hi,
            });
        }
        Ok(())
    }
}

/// Refractive index along `axis` at a vacuum wavelength (m) and temperature.
pub fn refractive_index(model: &SellmeierModel, axis: Axis, wavelength_m: f64, temperature_c: f64) -> Result<f64> {
    let lambda_um = wavelength_m * 1e6;
    model.check_wavelength(lambda_um)?;
    model.check_temperature(temperature_c)?;
    Ok(model
        .axis(axis)
        .index_unchecked(lambda_um, temperature_c - model.reference_temperature_c))
}

/// Group index `n − λ dn/dλ` from a central difference with relative step
/// [`GROUP_INDEX_REL_STEP`].
pub fn group_index(model: &SellmeierModel, axis: Axis, wavelength_m: f64, temperature_c: f64) -> Result<f64> {
    group_index_with_step(model, axis, wavelength_m, temperature_c, GROUP_INDEX_REL_STEP)
}

pub fn group_index_with_step(
    model: &SellmeierModel,
    axis: Axis,
    wavelength_m: f64,
    temperature_c: f64,
    rel_step: f64,
) -> Result<f64> {
    let h = wavelength_m * rel_step;
    let n = refractive_index(model, axis, wavelength_m, temperature_c)?;
    let up = refractive_index(model, axis, wavelength_m + h, temperature_c)?;
    let down = refractive_index(model, axis, wavelength_m - h, temperature_c)?;
    Ok(n - wavelength_m * (up - down) / (2.0 * h))
}

/// Which crystal axis each field is polarized along.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisAssignment {
    pub pump: Axis,
    pub signal: Axis,
    pub idler: Axis,
}

impl AxisAssignment {
    /// Type-II ppKTP at 775 nm → 1540 + 1560 nm: pump and idler on y, signal on z.
    pub const TYPE_II_YZY: AxisAssignment = AxisAssignment {
        pump: Axis::Y,
        signal: Axis::Z,
        idler: Axis::Y,
    };

    pub fn of(&self, field: Field) -> Axis {
        match field {
            Field::Pump => self.pump,
            Field::Signal => self.signal,
            Field::Idler => self.idler,
        }
    }
}

/// Nonlinear crystal: geometry, poling, operating temperature and dispersion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrystalSpec {
    pub length_m: f64,
    /// Poling period; `f64::INFINITY` disables the grating term.
    pub poling_period_m: f64,
    pub temperature_c: f64,
    pub axes: AxisAssignment,
    pub dispersion: SellmeierModel,
}

impl CrystalSpec {
    pub fn new(
        length_m: f64,
        poling_period_m: f64,
        temperature_c: f64,
        axes: AxisAssignment,
        dispersion: SellmeierModel,
    ) -> Result<Self> {
        if !(length_m > 0.0 && length_m.is_finite()) {
            return Err(SpdcError::InvalidParameter(format!(
                "crystal length must be positive, got {length_m}"
            )));
        }
        if !(poling_period_m > 0.0) {
            return Err(SpdcError::InvalidParameter(format!(
                "poling period must be positive, got {poling_period_m}"
            )));
        }
        Ok(CrystalSpec {
            length_m,
            poling_period_m,
            temperature_c,
            axes,
            dispersion,
        })
    }

    /// The 4.2 mm, 45.35 µm period type-II ppKTP device at 46.54 °C, with
    /// the y-axis index trimmed so that 775 → 1540 + 1560 nm is exactly
    /// phase-matched at the operating temperature.
    pub fn reference_device() -> Self {
        let dispersion = SellmeierModel::ktp().with_trim(Axis::Y, REFERENCE_DEVICE_Y_TRIM);
        CrystalSpec {
            length_m: 4.2e-3,
            poling_period_m: 45.35e-6,
            temperature_c: 46.54,
            axes: AxisAssignment::TYPE_II_YZY,
            dispersion,
        }
    }

    pub fn at_temperature(&self, temperature_c: f64) -> Self {
        CrystalSpec {
            temperature_c,
            ..self.clone()
        }
    }

    /// Refractive index seen by `field` at angular frequency `omega`.
    pub fn index(&self, field: Field, omega: f64) -> Result<f64> {
        refractive_index(
            &self.dispersion,
            self.axes.of(field),
            wavelength(omega),
            self.temperature_c,
        )
    }

    pub fn group_index(&self, field: Field, omega: f64) -> Result<f64> {
        group_index(
            &self.dispersion,
            self.axes.of(field),
            wavelength(omega),
            self.temperature_c,
        )
    }

    /// Wavenumber `k = n ω / c` (1/m).
    pub fn wavenumber(&self, field: Field, omega: f64) -> Result<f64> {
        Ok(self.index(field, omega)? * omega / SPEED_OF_LIGHT)
    }

    pub fn grating_wavenumber(&self) -> f64 {
        TWO_PI / self.poling_period_m
    }
}

/// y-axis index trim of [`CrystalSpec::reference_device`]; solves
/// Δk(1540 nm, 1560 nm; 46.54 °C) = 0 with [`trim_for_phase_matching`].
pub const REFERENCE_DEVICE_Y_TRIM: f64 = 8.688_863_687_1e-4;

/// `Δk = k_p − k_s − k_i + 2π/Λ` with `ω_p = ω_s + ω_i`.
pub fn wavevector_mismatch(crystal: &CrystalSpec, omega_s: f64, omega_i: f64) -> Result<f64> {
    let omega_p = omega_s + omega_i;
    let kp = crystal.wavenumber(Field::Pump, omega_p)?;
    let ks = crystal.wavenumber(Field::Signal, omega_s)?;
    let ki = crystal.wavenumber(Field::Idler, omega_i)?;
    Ok(kp - ks - ki + crystal.grating_wavenumber())
}

/// Longitudinal free spectral range `c / (2 n_g L)` (Hz) for `field` at a
/// vacuum wavelength (m).
pub fn fsr(crystal: &CrystalSpec, field: Field, wavelength_m: f64) -> Result<f64> {
    let ng = group_index(
        &crystal.dispersion,
        crystal.axes.of(field),
        wavelength_m,
        crystal.temperature_c,
    )?;
    Ok(SPEED_OF_LIGHT / (2.0 * ng * crystal.length_m))
}

/// Temperature in the model's validity window where `Δk(ω_s, ω_i) = 0`.
///
/// Scans the window in 0.5 °C steps for the first sign change, then bisects
/// down to [`PHASE_MATCHING_TOL_C`].
pub fn phase_matching_temperature(crystal: &CrystalSpec, omega_s: f64, omega_i: f64) -> Result<f64> {
    let (t_min, t_max) = crystal.dispersion.temperature_range_c;
    let dk = |t: f64| wavevector_mismatch(&crystal.at_temperature(t), omega_s, omega_i);

    let mut lo = t_min;
    let mut f_lo = dk(lo)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    let steps = ((t_max - t_min) / 0.5).ceil() as usize;
    let mut bracket = None;
    for s in 1..=steps {
        let hi = (t_min + 0.5 * s as f64).min(t_max);
        let f_hi = dk(hi)?;
        if f_hi == 0.0 {
            return Ok(hi);
        }
        if f_lo.signum() != f_hi.signum() {
            bracket = Some((lo, hi));
            break;
        }
        lo = hi;
        f_lo = f_hi;
    }
    let (mut a, mut b) = bracket.ok_or(SpdcError::NoRoot { t_min, t_max })?;
    let mut f_a = dk(a)?;
    while b - a > PHASE_MATCHING_TOL_C {
        let m = 0.5 * (a + b);
        let f_m = dk(m)?;
        if f_m == 0.0 {
            return Ok(m);
        }
        if f_m.signum() == f_a.signum() {
            a = m;
            f_a = f_m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Additive index trim on `axis` that zeroes `Δk(ω_s, ω_i)` at the crystal's
/// temperature. `Δk` is linear in the trim, so this is closed form.
pub fn trim_for_phase_matching(crystal: &CrystalSpec, axis: Axis, omega_s: f64, omega_i: f64) -> Result<f64> {
    let dk = wavevector_mismatch(crystal, omega_s, omega_i)?;
    let weight = |field: Field, omega: f64| {
        if crystal.axes.of(field) == axis {
            omega / SPEED_OF_LIGHT
        } else {
            0.0
        }
    };
    let slope = weight(Field::Pump, omega_s + omega_i) - weight(Field::Signal, omega_s) - weight(Field::Idler, omega_i);
    if slope == 0.0 {
        return Err(SpdcError::InvalidParameter(format!(
            "axis {axis:?} does not enter the mismatch"
        )));
    }
    Ok(crystal.dispersion.axis(axis).trim - dk / slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design() -> (f64, f64) {
        (angular_frequency(1540e-9), angular_frequency(1560e-9))
    }

    #[test]
    fn ktp_z_index_regression() {
        // Independent evaluation of the pinned polynomial (Python, float64).
        let n = refractive_index(&SellmeierModel::ktp(), Axis::Z, 1.540e-6, 46.54).unwrap();
        assert!((1.7..1.9).contains(&n));
        assert!((n - 1.816_310_958_772_694_7).abs() < 1e-12, "{n}");
    }

    #[test]
    fn below_validity_is_error() {
        let err = refractive_index(&SellmeierModel::ktp(), Axis::Z, 0.3e-6, 46.54).unwrap_err();
        assert!(matches!(err, SpdcError::OutOfRange { .. }));
        let err = refractive_index(&SellmeierModel::ktp(), Axis::Z, 1.54e-6, 300.0).unwrap_err();
        assert!(matches!(err, SpdcError::OutOfRange { .. }));
    }

    #[test]
    fn refractive_index_is_pure() {
        let m = SellmeierModel::ktp();
        let a = refractive_index(&m, Axis::Y, 1.56e-6, 46.54).unwrap();
        let b = refractive_index(&m, Axis::Y, 1.56e-6, 46.54).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn group_index_matches_signal_fsr_target() {
        let ng = group_index(&SellmeierModel::ktp(), Axis::Z, 1540e-9, 46.54).unwrap();
        let target = SPEED_OF_LIGHT / (2.0 * 4.2e-3 * 19.3e9);
        assert!((ng / target - 1.0).abs() < 0.02, "{ng} vs {target}");
        let n = refractive_index(&SellmeierModel::ktp(), Axis::Z, 1540e-9, 46.54).unwrap();
        assert!(ng > n);
    }

    #[test]
    fn group_index_of_constant_model_is_index() {
        let m = SellmeierModel::dispersionless(1.8);
        let ng = group_index(&m, Axis::Y, 1.5e-6, 30.0).unwrap();
        assert!((ng - 1.8).abs() < 1e-9);
    }

    #[test]
    fn group_index_step_halving() {
        let m = SellmeierModel::ktp();
        for axis in [Axis::Y, Axis::Z] {
            let a = group_index_with_step(&m, axis, 1540e-9, 46.54, 1e-5).unwrap();
            let b = group_index_with_step(&m, axis, 1540e-9, 46.54, 0.5e-5).unwrap();
            assert!(((a - b) / a).abs() < 1e-6);
        }
    }

    #[test]
    fn group_index_needs_stencil_room() {
        let m = SellmeierModel::ktp();
        assert!(group_index(&m, Axis::Y, 1.7e-6, 40.0).is_err());
    }

    #[test]
    fn fsr_targets_and_length_scaling() {
        let c = CrystalSpec::reference_device();
        let fs = fsr(&c, Field::Signal, 1540e-9).unwrap();
        let fi = fsr(&c, Field::Idler, 1560e-9).unwrap();
        assert!((fs / 19.3e9 - 1.0).abs() < 0.02, "{fs}");
        assert!((fi / 20.2e9 - 1.0).abs() < 0.02, "{fi}");
        let mut long = c.clone();
        long.length_m *= 2.0;
        let fs2 = fsr(&long, Field::Signal, 1540e-9).unwrap();
        assert_eq!(fs2, fs / 2.0);
    }

    #[test]
    fn mismatch_without_grating_is_bare_wavevector_difference() {
        let mut c = CrystalSpec::reference_device();
        c.poling_period_m = f64::INFINITY;
        let (ws, wi) = design();
        let dk = wavevector_mismatch(&c, ws, wi).unwrap();
        let bare = c.wavenumber(Field::Pump, ws + wi).unwrap()
            - c.wavenumber(Field::Signal, ws).unwrap()
            - c.wavenumber(Field::Idler, wi).unwrap();
        assert_eq!(dk, bare);
    }

    #[test]
    fn design_point_is_phase_matched() {
        let c = CrystalSpec::reference_device();
        let (ws, wi) = design();
        let dk = wavevector_mismatch(&c, ws, wi).unwrap();
        assert!((dk * c.length_m).abs() < 0.1, "{dk}");
    }

    #[test]
    fn pump_term_depends_only_on_sum() {
        let c = CrystalSpec::reference_device();
        let (ws, wi) = design();
        let d = 2.0 * std::f64::consts::PI * 7e9;
        let kp_a = c.wavenumber(Field::Pump, ws + wi).unwrap();
        let kp_b = c.wavenumber(Field::Pump, (ws + d) + (wi - d)).unwrap();
        assert!((kp_a - kp_b).abs() <= 1e-9 * kp_a.abs());
    }

    #[test]
    fn mismatch_is_continuous() {
        let c = CrystalSpec::reference_device();
        let (ws, wi) = design();
        let base = wavevector_mismatch(&c, ws, wi).unwrap();
        let mut last = f64::INFINITY;
        for e in [1e9, 1e7, 1e5, 1e3] {
            let d = (wavevector_mismatch(&c, ws + e, wi).unwrap() - base).abs();
            assert!(d < last);
            last = d;
        }
        assert!(last < 1e-2);
    }

    #[test]
    fn phase_matching_temperature_against_scan() {
        let c = CrystalSpec::reference_device();
        let (ws, wi) = design();
        let t = phase_matching_temperature(&c, ws, wi).unwrap();
        assert!((20.0..=80.0).contains(&t));
        let dk = wavevector_mismatch(&c.at_temperature(t), ws, wi).unwrap();
        assert!((dk * c.length_m).abs() < 1e-3);
        // brute-force scan in 0.01 C steps
        let mut best = (f64::INFINITY, 0.0);
        let mut temp = 20.0;
        while temp <= 80.0 {
            let v = wavevector_mismatch(&c.at_temperature(temp), ws, wi).unwrap().abs();
            if v < best.0 {
                best = (v, temp);
            }
            temp += 0.01;
        }
        assert!((best.1 - t).abs() < 0.011, "{} vs {}", best.1, t);
        assert!((t - 46.54).abs() < 0.01);
    }

    #[test]
    fn already_matched_synthetic_model() {
        // Δk = β(T − 25)·ω_s/c: the y axis drifts with temperature, z does not.
        let mut model = SellmeierModel::dispersionless(1.8);
        model.y.thermal_linear = [1e-5, 0.0, 0.0, 0.0];
        model.temperature_range_c = (20.0, 30.0);
        let c = CrystalSpec::new(1e-3, f64::INFINITY, 21.0, AxisAssignment::TYPE_II_YZY, model).unwrap();
        let (ws, wi) = design();
        let t = phase_matching_temperature(&c, ws, wi).unwrap();
        assert!((t - 25.0).abs() < 1e-3, "{t}");
    }

    #[test]
    fn untrimmed_ktp_has_no_root() {
        let mut c = CrystalSpec::reference_device();
        c.dispersion = SellmeierModel::ktp();
        let (ws, wi) = design();
        let err = phase_matching_temperature(&c, ws, wi).unwrap_err();
        assert!(matches!(err, SpdcError::NoRoot { .. }));
    }

    #[test]
    fn trim_reproduces_device_constant() {
        let mut c = CrystalSpec::reference_device();
        c.dispersion = SellmeierModel::ktp();
        let (ws, wi) = design();
        let trim = trim_for_phase_matching(&c, Axis::Y, ws, wi).unwrap();
        assert!((trim - REFERENCE_DEVICE_Y_TRIM).abs() < 1e-12, "{trim:e}");
    }

    #[test]
    fn invalid_crystal_rejected() {
        let m = SellmeierModel::ktp();
        assert!(CrystalSpec::new(0.0, 1e-5, 40.0, AxisAssignment::TYPE_II_YZY, m.clone()).is_err());
        assert!(CrystalSpec::new(1e-3, -1.0, 40.0, AxisAssignment::TYPE_II_YZY, m).is_err());
    }
}
