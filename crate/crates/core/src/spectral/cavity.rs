use serde::{Deserialize, Serialize};

use crate::dispersion::{self, CrystalSpec, Field, SPEED_OF_LIGHT};
use crate::error::{Result, SpdcError};

/// Facet coating seen by one resonant field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FacetPair {
    /// Intensity reflectivity of the input (planar) facet.
    pub r1: f64,
    /// Intensity reflectivity of the output coupler.
    pub r2: f64,
    /// Reflection phases δ_1, δ_2 (rad).
    #[serde(default)]
    pub phase1: f64,
    #[serde(default)]
    pub phase2: f64,
}

/// Monolithic cavity formed by the coated crystal facets, resonant for signal
/// and idler, with a double-pass (non-resonant) pump.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavitySpec {
    pub signal: FacetPair,
    pub idler: FacetPair,
    /// Pump amplitude reflectivity r_p of the back facet.
    pub pump_reflectivity: f64,
    /// Relative phase φ_p between forward and backward pump interactions.
    pub pump_phase: f64,
    /// Intracavity loss α (1/m).
    pub loss_per_m: f64,
}

impl CavitySpec {
    pub fn new(
        signal: FacetPair,
        idler: FacetPair,
        pump_reflectivity: f64,
        pump_phase: f64,
        loss_per_m: f64,
    ) -> Result<Self> {
        let cavity = CavitySpec {
            signal,
            idler,
            pump_reflectivity,
            pump_phase,
            loss_per_m,
        };
        cavity.validate()?;
        Ok(cavity)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(SpdcError::InvalidParameter(format!("{name} = {v} not in [0, 1]")))
            }
        };
        unit("signal R1", self.signal.r1)?;
        unit("signal R2", self.signal.r2)?;
        unit("idler R1", self.idler.r1)?;
        unit("idler R2", self.idler.r2)?;
        unit("pump amplitude reflectivity", self.pump_reflectivity)?;
        if !(self.loss_per_m >= 0.0) {
            return Err(SpdcError::InvalidParameter(format!(
                "loss must be non-negative, got {}",
                self.loss_per_m
            )));
        }
        Ok(())
    }

    /// 99.9 % / 95.4 % facets for both fields, fully reflected pump with zero
    /// relative phase, zero mirror phases and 0.1 /m loss.
    pub fn reference_device() -> Self {
        let facets = FacetPair {
            r1: 0.999,
            r2: 0.954,
            phase1: 0.0,
            phase2: 0.0,
        };
        CavitySpec {
            signal: facets,
            idler: facets,
            pump_reflectivity: 1.0,
            pump_phase: 0.0,
            loss_per_m: 0.1,
        }
    }

    /// Uncoated crystal, single-pass pump.
    pub fn none() -> Self {
        let bare = FacetPair {
            r1: 0.0,
            r2: 0.0,
            phase1: 0.0,
            phase2: 0.0,
        };
        CavitySpec {
            signal: bare,
            idler: bare,
            pump_reflectivity: 0.0,
            pump_phase: 0.0,
            loss_per_m: 0.0,
        }
    }

    pub fn facets(&self, field: Field) -> Result<&FacetPair> {
        match field {
            Field::Signal => Ok(&self.signal),
            Field::Idler => Ok(&self.idler),
            Field::Pump => Err(SpdcError::InvalidParameter("the pump is not resonant".into())),
        }
    }

    /// True when either field sees a reflective facet pair.
    pub fn is_resonant(&self) -> bool {
        self.signal.r1 * self.signal.r2 > 0.0 || self.idler.r1 * self.idler.r2 > 0.0
    }
}

/// Round-trip amplitude factor `R1 R2 e^{−2αL}`.
fn round_trip(facets: &FacetPair, loss_per_m: f64, length_m: f64) -> f64 {
    facets.r1 * facets.r2 * (-2.0 * loss_per_m * length_m).exp()
}

/// Coefficient of finesse form `F = π ρ^{1/4} / (1 − √ρ)`, `ρ = R1 R2 e^{−2αL}`.
pub fn finesse_from_reflectivities(r1: f64, r2: f64, loss_per_m: f64, length_m: f64) -> Result<f64> {
    let rho = r1 * r2 * (-2.0 * loss_per_m * length_m).exp();
    if rho >= 1.0 {
        return Err(SpdcError::DegenerateCavity(rho));
    }
    Ok(std::f64::consts::PI * rho.powf(0.25) / (1.0 - rho.sqrt()))
}

pub fn finesse(cavity: &CavitySpec, field: Field, length_m: f64) -> Result<f64> {
    let f = cavity.facets(field)?;
    let rho = round_trip(f, cavity.loss_per_m, length_m);
    if rho >= 1.0 {
        return Err(SpdcError::DegenerateCavity(rho));
    }
    finesse_from_reflectivities(f.r1, f.r2, cavity.loss_per_m, length_m)
}

/// Resonance FWHM `FSR/F` (Hz) at a vacuum wavelength.
pub fn linewidth(cavity: &CavitySpec, crystal: &CrystalSpec, field: Field, wavelength_m: f64) -> Result<f64> {
    let f = finesse(cavity, field, crystal.length_m)?;
    if f == 0.0 {
        return Err(SpdcError::InvalidParameter(format!(
            "{} is not resonant; linewidth undefined",
            field.name()
        )));
    }
    Ok(dispersion::fsr(crystal, field, wavelength_m)? / f)
}

/// Round-trip phase `δ = 2 n ω L / c + δ_1 + δ_2`.
pub fn round_trip_phase(cavity: &CavitySpec, crystal: &CrystalSpec, field: Field, omega: f64) -> Result<f64> {
    let f = cavity.facets(field)?;
    let n = crystal.index(field, omega)?;
    Ok(2.0 * n * omega * crystal.length_m / SPEED_OF_LIGHT + f.phase1 + f.phase2)
}

/// Airy weight from the finesse and round-trip phase.
#[inline]
pub fn airy_from_phase(finesse: f64, phase: f64) -> f64 {
    let s = (0.5 * phase).sin();
    let k = 2.0 * finesse / std::f64::consts::PI;
    1.0 / (1.0 + k * k * s * s)
}

/// Cavity Airy transmission weight `1 / (1 + 4F² sin²(δ/2)/π²)`.
pub fn airy(cavity: &CavitySpec, crystal: &CrystalSpec, field: Field, omega: f64) -> Result<f64> {
    let f = finesse(cavity, field, crystal.length_m)?;
    Ok(airy_from_phase(f, round_trip_phase(cavity, crystal, field, omega)?))
}

/// `(1 + r_p² + 2 r_p cos(ΔkL + φ_p))^{1/2}`.
#[inline]
pub fn double_pass_factor(cavity: &CavitySpec, delta_k: f64, length_m: f64) -> f64 {
    let r = cavity.pump_reflectivity;
    (1.0 + r * r + 2.0 * r * (delta_k * length_m + cavity.pump_phase).cos())
        .max(0.0)
        .sqrt()
}

/// The resonance of `field` closest to `omega_guess` (rad/s): Newton steps on
/// `δ(ω) = 2πm` using `dδ/dω = 2 n_g L / c`.
pub fn nearest_resonance(cavity: &CavitySpec, crystal: &CrystalSpec, field: Field, omega_guess: f64) -> Result<f64> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let target = (round_trip_phase(cavity, crystal, field, omega_guess)? / two_pi).round() * two_pi;
    let mut omega = omega_guess;
    for _ in 0..20 {
        let err = round_trip_phase(cavity, crystal, field, omega)? - target;
        let slope = 2.0 * crystal.group_index(field, omega)? * crystal.length_m / SPEED_OF_LIGHT;
        let step = err / slope;
        omega -= step;
        if step.abs() <= omega * 1e-15 {
            break;
        }
    }
    Ok(omega)
}
