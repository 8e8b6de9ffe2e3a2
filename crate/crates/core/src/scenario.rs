//! Scenario files: a TOML description of crystal, cavity, pump, grid and
//! filters with units carried in the key names, resolved into the model types.
//!
//! ```toml
//! name = "example"
//! [crystal]
//! length_mm = 4.2
//! poling_um = 45.35
//! temperature_c = 46.54
//! [cavity]
//! r1 = 0.999
//! r2 = 0.954
//! [pump]
//! tau_ns = 1.1
//! [grid]
//! points = 4096
//! ```

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dispersion::{
    angular_frequency, fsr, Axis, AxisAssignment, CrystalSpec, Field, SellmeierModel, REFERENCE_DEVICE_Y_TRIM,
};
use crate::error::{Result, SpdcError};
use crate::spectral::{
    nearest_resonance, CavitySpec, FacetPair, FilterSpec, FrequencyGrid, LineShape, PulseShape, PumpSpec, SpectralAxis,
};

pub const REFERENCE_SCENARIO: &str = include_str!("../scenarios/reference.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub crystal: CrystalSection,
    #[serde(default)]
    pub cavity: CavitySection,
    #[serde(default)]
    pub pump: PumpSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub filters: Vec<FilterSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalSection {
    pub length_mm: f64,
    /// Omitted: no poling grating.
    pub poling_um: Option<f64>,
    pub temperature_c: f64,
    /// `"ktp"` or `"constant"`.
    #[serde(default = "default_sellmeier")]
    pub sellmeier: String,
    /// Index of the `"constant"` model.
    pub constant_index: Option<f64>,
    /// Additive index trims. For `"ktp"` the y trim defaults to the
    /// calibration that phase-matches 775 → 1540 + 1560 nm at 46.54 °C.
    pub y_trim: Option<f64>,
    #[serde(default)]
    pub z_trim: f64,
    /// Crystal axes of pump, signal and idler, e.g. `"yzy"`.
    #[serde(default = "default_axes")]
    pub axes: String,
}

fn default_sellmeier() -> String {
    "ktp".into()
}

fn default_axes() -> String {
    "yzy".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySection {
    /// Input-facet intensity reflectivity, both fields.
    pub r1: f64,
    /// Output-coupler intensity reflectivity, both fields.
    pub r2: f64,
    pub signal_r1: Option<f64>,
    pub signal_r2: Option<f64>,
    pub idler_r1: Option<f64>,
    pub idler_r2: Option<f64>,
    #[serde(default)]
    pub mirror_phase1_rad: f64,
    #[serde(default)]
    pub mirror_phase2_rad: f64,
    /// Amplitude reflectivity of the back facet for the pump.
    pub pump_reflectivity: f64,
    #[serde(default)]
    pub pump_phase_rad: f64,
    pub loss_per_m: f64,
}

impl Default for CavitySection {
    /// No cavity: uncoated facets and a single-pass pump.
    fn default() -> Self {
        CavitySection {
            r1: 0.0,
            r2: 0.0,
            signal_r1: None,
            signal_r2: None,
            idler_r1: None,
            idler_r2: None,
            mirror_phase1_rad: 0.0,
            mirror_phase2_rad: 0.0,
            pump_reflectivity: 0.0,
            pump_phase_rad: 0.0,
            loss_per_m: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpSection {
    #[serde(default = "default_shape")]
    pub shape: PulseShape,
    /// Intensity FWHM of the pulse.
    pub tau_ns: Option<f64>,
    /// Spectral width of a cw pump, as an intensity FWHM. Defaults to an
    /// amplitude width of 1/1000 of the narrower cavity linewidth (1 MHz
    /// without a resonant field).
    pub cw_linewidth_mhz: Option<f64>,
}

fn default_shape() -> PulseShape {
    PulseShape::Gaussian
}

impl Default for PumpSection {
    fn default() -> Self {
        PumpSection {
            shape: PulseShape::Gaussian,
            tau_ns: Some(1.1),
            cw_linewidth_mhz: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Design wavelengths; the grid centres snap to the nearest resonances.
    pub signal_nm: f64,
    pub idler_nm: f64,
    /// Points per axis.
    pub points: usize,
    /// Span in units of the larger free spectral range.
    #[serde(default = "default_modes")]
    pub modes: f64,
    /// Explicit span, overriding `modes`.
    pub span_ghz: Option<f64>,
    #[serde(default)]
    pub relaxed_guard: bool,
}

fn default_modes() -> f64 {
    3.0
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            signal_nm: 1540.0,
            idler_nm: 1560.0,
            points: 4096,
            modes: 3.0,
            span_ghz: None,
            relaxed_guard: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    pub axis: SpectralAxis,
    /// Intensity FWHM.
    pub bandwidth_ghz: f64,
    /// `"lorentzian"` or `"airy"`.
    #[serde(default = "default_filter_shape")]
    pub shape: String,
    /// Etalon free spectral range (airy only).
    pub fsr_ghz: Option<f64>,
    /// Centre offset from the central resonance of the axis.
    #[serde(default)]
    pub offset_ghz: f64,
}

fn default_filter_shape() -> String {
    "lorentzian".into()
}

/// A fully resolved study configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub crystal: CrystalSpec,
    pub cavity: CavitySpec,
    pub pump: PumpSpec,
    pub grid: FrequencyGrid,
    pub filters: Vec<FilterSpec>,
    /// Free spectral ranges (Hz) at the grid centres.
    pub fsr_signal_hz: f64,
    pub fsr_idler_hz: f64,
}

fn config(msg: impl Into<String>) -> SpdcError {
    SpdcError::Config(msg.into())
}

fn parse_axes(s: &str) -> Result<AxisAssignment> {
    let axis = |c: char| match c {
        'y' | 'Y' => Ok(Axis::Y),
        'z' | 'Z' => Ok(Axis::Z),
        other => Err(config(format!("crystal.axes: unknown axis '{other}' (use y or z)"))),
    };
    let chars: Vec<char> = s.chars().collect();
    if chars.len() != 3 {
        return Err(config(format!(
            "crystal.axes: expected three letters (pump, signal, idler), got \"{s}\""
        )));
    }
    Ok(AxisAssignment {
        pump: axis(chars[0])?,
        signal: axis(chars[1])?,
        idler: axis(chars[2])?,
    })
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config(e.to_string()))
    }

    pub fn resolve(&self) -> Result<Scenario> {
        let c = &self.crystal;
        let dispersion = match c.sellmeier.as_str() {
            "ktp" => SellmeierModel::ktp()
                .with_trim(Axis::Y, c.y_trim.unwrap_or(REFERENCE_DEVICE_Y_TRIM))
                .with_trim(Axis::Z, c.z_trim),
            "constant" => {
                let n = c
                    .constant_index
                    .ok_or_else(|| config("crystal.constant_index is required for sellmeier = \"constant\""))?;
                if !(n >= 1.0) {
                    return Err(config(format!("crystal.constant_index must be >= 1, got {n}")));
                }
                SellmeierModel::dispersionless(n)
                    .with_trim(Axis::Y, c.y_trim.unwrap_or(0.0))
                    .with_trim(Axis::Z, c.z_trim)
            }
            other => {
                return Err(config(format!(
                    "crystal.sellmeier: unknown model \"{other}\" (ktp, constant)"
                )))
            }
        };
        let poling = match c.poling_um {
            Some(p) => p * 1e-6,
            None => f64::INFINITY,
        };
        let crystal = CrystalSpec::new(
            c.length_mm * 1e-3,
            poling,
            c.temperature_c,
            parse_axes(&c.axes)?,
            dispersion,
        )
        .map_err(|e| config(format!("crystal: {e}")))?;

        let k = &self.cavity;
        let pair = |r1: Option<f64>, r2: Option<f64>| FacetPair {
            r1: r1.unwrap_or(k.r1),
            r2: r2.unwrap_or(k.r2),
            phase1: k.mirror_phase1_rad,
            phase2: k.mirror_phase2_rad,
        };
        let cavity = CavitySpec::new(
            pair(k.signal_r1, k.signal_r2),
            pair(k.idler_r1, k.idler_r2),
            k.pump_reflectivity,
            k.pump_phase_rad,
            k.loss_per_m,
        )
        .map_err(|e| config(format!("cavity: {e}")))?;

        let g = &self.grid;
        if g.points < 2 {
            return Err(config(format!("grid.points must be at least 2, got {}", g.points)));
        }
        let (ls, li) = (g.signal_nm * 1e-9, g.idler_nm * 1e-9);
        let ws = nearest_resonance(&cavity, &crystal, Field::Signal, angular_frequency(ls))?;
        let wi = nearest_resonance(&cavity, &crystal, Field::Idler, angular_frequency(li))?;
        let fsr_signal_hz = fsr(&crystal, Field::Signal, ls)?;
        let fsr_idler_hz = fsr(&crystal, Field::Idler, li)?;
        let span_hz = match g.span_ghz {
            Some(s) => s * 1e9,
            None => g.modes * fsr_signal_hz.max(fsr_idler_hz),
        };
        if !(span_hz > 0.0) {
            return Err(config("grid span must be positive"));
        }
        let mut grid = FrequencyGrid::new(ws, 2.0 * PI * span_hz, wi, 2.0 * PI * span_hz, g.points, g.points)?;
        grid.relaxed_guard = g.relaxed_guard;

        let p = &self.pump;
        let center = ws + wi;
        let pump = match p.shape {
            PulseShape::Cw => {
                let sigma_f = match p.cw_linewidth_mhz {
                    // intensity FWHM → Gaussian amplitude width
                    Some(lw) => 2.0 * PI * lw * 1e6 / (2.0 * std::f64::consts::LN_2.sqrt()),
                    None => {
                        let narrowest = [(Field::Signal, ls), (Field::Idler, li)]
                            .into_iter()
                            .filter_map(|(f, l)| crate::spectral::cavity::linewidth(&cavity, &crystal, f, l).ok())
                            .fold(f64::INFINITY, f64::min);
                        if narrowest.is_finite() {
                            2.0 * PI * narrowest / 1000.0
                        } else {
                            2.0 * PI * 1e6
                        }
                    }
                };
                PumpSpec::cw(center, sigma_f)
            }
            shape => {
                let tau = p
                    .tau_ns
                    .ok_or_else(|| config("pump.tau_ns is required for pulsed pumps"))?;
                PumpSpec::with_shape(center, shape, tau * 1e-9)
            }
        }
        .map_err(|e| config(format!("pump: {e}")))?;

        let filters = self
            .filters
            .iter()
            .enumerate()
            .map(|(k, f)| {
                let shape = match f.shape.as_str() {
                    "lorentzian" => LineShape::Lorentzian,
                    "airy" => LineShape::Airy {
                        fsr_hz: f
                            .fsr_ghz
                            .ok_or_else(|| config(format!("filters[{k}]: airy filters need fsr_ghz")))?
                            * 1e9,
                    },
                    other => return Err(config(format!("filters[{k}].shape: unknown \"{other}\""))),
                };
                let centre = grid.center(f.axis) + 2.0 * PI * f.offset_ghz * 1e9;
                let spec = FilterSpec {
                    center: centre,
                    bandwidth_hz: f.bandwidth_ghz * 1e9,
                    shape,
                    axis: f.axis,
                };
                spec.validate().map_err(|e| config(format!("filters[{k}]: {e}")))?;
                Ok(spec)
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Scenario {
            name: self.name.clone(),
            description: self.description.clone(),
            crystal,
            cavity,
            pump,
            grid,
            filters,
            fsr_signal_hz,
            fsr_idler_hz,
        })
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        ScenarioFile::parse(text)?.resolve()
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            SpdcError::Config(msg) => config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// The bundled reference-device scenario (guard-compliant 4096-point grid).
    pub fn reference() -> Self {
        Self::from_toml(REFERENCE_SCENARIO).expect("bundled scenario is valid")
    }

    /// Same scenario with `points` per axis; `relaxed` skips the resolution guard.
    pub fn with_points(&self, points: usize, relaxed: bool) -> Result<Self> {
        let mut s = self.clone();
        let mut grid = FrequencyGrid::new(
            self.grid.signal_center,
            self.grid.signal_span,
            self.grid.idler_center,
            self.grid.idler_span,
            points,
            points,
        )?;
        grid.relaxed_guard = relaxed;
        s.grid = grid;
        Ok(s)
    }

    pub fn with_pulse(&self, shape: PulseShape, duration_s: f64) -> Result<Self> {
        let mut s = self.clone();
        s.pump = PumpSpec::with_shape(self.pump.center, shape, duration_s)?;
        Ok(s)
    }

    /// Filters applied by filtered studies: the scenario's own list, or the
    /// 5 GHz + 14 GHz Lorentzian etalon pair on the central idler mode when
    /// the scenario defines none.
    pub fn study_filters(&self) -> Vec<FilterSpec> {
        if !self.filters.is_empty() {
            return self.filters.clone();
        }
        [5e9, 14e9]
            .iter()
            .map(|&bw| FilterSpec {
                center: self.grid.idler_center,
                bandwidth_hz: bw,
                shape: LineShape::Lorentzian,
                axis: SpectralAxis::Idler,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_scenario_loads() {
        let s = Scenario::reference();
        assert_eq!(s.grid.signal_points, 4096);
        assert!(!s.grid.relaxed_guard);
        assert_eq!(s.filters.len(), 2);
        assert!((s.crystal.length_m - 4.2e-3).abs() < 1e-15);
        assert!((s.fsr_signal_hz / 19.3e9 - 1.0).abs() < 0.02);
        assert!((s.pump.center - s.grid.signal_center - s.grid.idler_center).abs() < 1.0);
        // guard-compliant as shipped
        s.grid.check_resolution(&s.crystal, &s.cavity).unwrap();
    }

    #[test]
    fn minimal_file_defaults_to_no_cavity() {
        let s = Scenario::from_toml(
            "name = \"bare\"\n[crystal]\nlength_mm = 4.2\npoling_um = 45.35\ntemperature_c = 46.54\n",
        )
        .unwrap();
        assert!(!s.cavity.is_resonant());
        assert_eq!(s.pump.shape, PulseShape::Gaussian);
        assert!(s.filters.is_empty());
        assert_eq!(s.study_filters().len(), 2);
    }

    #[test]
    fn parse_error_names_line_and_key() {
        let text = "name = \"x\"\n[crystal]\nlength_mm = 4.2\ntemperature_c = 46.54\nlenght_mm = 3\n";
        let err = Scenario::from_toml(text).unwrap_err().to_string();
        assert!(err.contains("lenght_mm"), "{err}");
        assert!(err.contains("line 5"), "{err}");
        let err = Scenario::from_toml("name = \"x\"\n[crystal]\nlength_mm = \"long\"\ntemperature_c = 1\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn semantic_errors_are_config_errors() {
        let base = "name = \"x\"\n[crystal]\nlength_mm = 4.2\ntemperature_c = 46.54\n";
        for bad in [
            format!("{base}axes = \"yq\"\n"),
            format!("{base}sellmeier = \"bbo\"\n"),
            "name = \"x\"\n[crystal]\nlength_mm = -1\ntemperature_c = 46.54\n".to_string(),
            format!("{base}[pump]\nshape = \"gaussian\"\ntau_ns = -1\n"),
            format!("{base}[cavity]\nr1 = 1.5\nr2 = 0.9\npump_reflectivity = 0\nloss_per_m = 0\n"),
        ] {
            assert!(matches!(Scenario::from_toml(&bad), Err(SpdcError::Config(_))), "{bad}");
        }
    }

    #[test]
    fn per_field_reflectivities_override() {
        let s = Scenario::from_toml(
            "name = \"x\"\n[crystal]\nlength_mm = 4.2\npoling_um = 45.35\ntemperature_c = 46.54\n\
             [cavity]\nr1 = 0.999\nr2 = 0.954\nidler_r2 = 0.9\npump_reflectivity = 1\nloss_per_m = 0.1\n",
        )
        .unwrap();
        assert_eq!(s.cavity.signal.r2, 0.954);
        assert_eq!(s.cavity.idler.r2, 0.9);
    }

    #[test]
    fn with_points_and_pulse() {
        let s = Scenario::reference().with_points(256, true).unwrap();
        assert_eq!(s.grid.idler_points, 256);
        assert!(s.grid.relaxed_guard);
        let t = s.with_pulse(PulseShape::Square, 0.5e-9).unwrap();
        assert_eq!(t.pump.shape, PulseShape::Square);
        assert!(s.with_pulse(PulseShape::Gaussian, 0.0).is_err());
    }

    #[test]
    fn cw_pump_width_follows_the_cavity_linewidth() {
        let cw = |extra: &str| {
            let text = REFERENCE_SCENARIO.replace("[pump]", &format!("[pump]\n{extra}"));
            let mut f = ScenarioFile::parse(&text).unwrap();
            f.pump.shape = PulseShape::Cw;
            f.resolve().unwrap().pump.sigma_f
        };
        // signal is the narrower line, 150.1 MHz
        assert!((cw("") / (2.0 * PI * 150.1e3) - 1.0).abs() < 1e-3);
        let explicit = cw("cw_linewidth_mhz = 2.0");
        assert!((explicit - 2.0 * PI * 2e6 / (2.0 * std::f64::consts::LN_2.sqrt())).abs() < 1e-6);
    }
}
