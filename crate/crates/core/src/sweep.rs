//! Scenario-level studies: purity against pump pulse length, the optimal
//! pulse, central-mode weight, and the efficiency budgets.

use rayon::prelude::*;
use serde::Serialize;

use crate::dispersion::Field;
use crate::error::{Result, SpdcError};
use crate::scenario::Scenario;
use crate::schmidt::{schmidt_decompose, SchmidtResult};
use crate::spectral::{apply_filter, build_jsa, CavitySpec, JsaGrid, PulseShape, SpectralAxis};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub tau_s: f64,
    pub schmidt_number: f64,
    pub purity: f64,
    /// Weight inside the central resonance pair, ±FSR/2 on each axis.
    pub central_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepTable {
    pub scenario: String,
    pub shape: PulseShape,
    pub filtered: bool,
    pub grid_points: usize,
    pub rows: Vec<SweepRow>,
}

/// Pulse lengths from `start` to `stop` inclusive in steps of `step` (s),
/// generated from integer multiples so the list is exact and reproducible.
pub fn tau_range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start > 0.0 && stop >= start && step > 0.0) {
        return Err(SpdcError::InvalidParameter(format!(
            "pulse range needs 0 < start <= stop and step > 0 (got {start}, {stop}, {step})"
        )));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| start + k as f64 * step).collect())
}

/// Default study range, 0.3–2.0 ns in 0.1 ns steps.
pub fn default_taus() -> Vec<f64> {
    (3..=20).map(|k| k as f64 * 1e-10).collect()
}

/// JSA of `scenario` with the given pulse, optionally through the study filters.
pub fn scenario_jsa(scenario: &Scenario, shape: PulseShape, tau_s: f64, filtered: bool) -> Result<JsaGrid> {
    let s = scenario.with_pulse(shape, tau_s)?;
    let jsa = build_jsa(&s.crystal, &s.cavity, &s.pump, &s.grid)?;
    if filtered {
        apply_filter(&jsa, &s.study_filters())
    } else {
        Ok(jsa)
    }
}

pub fn evaluate_point(
    scenario: &Scenario,
    shape: PulseShape,
    tau_s: f64,
    filtered: bool,
) -> Result<(SweepRow, SchmidtResult)> {
    let jsa = scenario_jsa(scenario, shape, tau_s, filtered)?;
    let result = schmidt_decompose(&jsa)?;
    let central_fraction = central_mode_fraction(&jsa, &central_window(scenario))?;
    Ok((
        SweepRow {
            tau_s,
            schmidt_number: result.schmidt_number,
            purity: result.purity,
            central_fraction,
        },
        result,
    ))
}

/// One JSA build, optional filtering and Schmidt decomposition per pulse
/// length. Rows may run concurrently; the table is in ascending τ order.
pub fn purity_sweep(scenario: &Scenario, taus: &[f64], shape: PulseShape, filtered: bool) -> Result<SweepTable> {
    if taus.is_empty() {
        return Err(SpdcError::InvalidParameter("empty pulse-length list".into()));
    }
    if let Some(bad) = taus.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(SpdcError::InvalidParameter(format!(
            "pulse length must be positive, got {bad}"
        )));
    }
    if !taus.windows(2).all(|w| w[1] > w[0]) {
        return Err(SpdcError::InvalidParameter(
            "pulse lengths must be strictly increasing".into(),
        ));
    }
    // resolution problems should surface before any work is done
    scenario.grid.check_resolution(&scenario.crystal, &scenario.cavity)?;
    let rows = taus
        .par_iter()
        .map(|&t| evaluate_point(scenario, shape, t, filtered).map(|(row, _)| row))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable {
        scenario: scenario.name.clone(),
        shape,
        filtered,
        grid_points: scenario.grid.signal_points,
        rows,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OptimalPulse {
    pub tau_s: f64,
    pub purity: f64,
    pub evaluations: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximization of `f` on `[lo, hi]` until the bracket is
/// narrower than `tol`. The midpoint must beat both ends, otherwise the best
/// end is reported through `NoInteriorMaximum`.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<OptimalPulse>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo < hi && tol > 0.0) {
        return Err(SpdcError::InvalidParameter(format!("bad bracket [{lo}, {hi}]")));
    }
    let (f_lo, f_hi) = (f(lo)?, f(hi)?);
    let mid = 0.5 * (lo + hi);
    let f_mid = f(mid)?;
    let mut evaluations = 3;
    if !(f_mid > f_lo && f_mid > f_hi) {
        let (best_tau, best_purity) = [(lo, f_lo), (mid, f_mid), (hi, f_hi)]
            .into_iter()
            .fold((lo, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        return Err(SpdcError::NoInteriorMaximum { best_tau, best_purity });
    }
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    evaluations += 2;
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
        evaluations += 1;
    }
    let (tau_s, purity) = if fc > fd { (c, fc) } else { (d, fd) };
    Ok(OptimalPulse {
        tau_s,
        purity,
        evaluations,
    })
}

/// Pulse length maximizing the purity within `bracket` (s), to 0.01 ns.
pub fn optimal_pulse_length(
    scenario: &Scenario,
    shape: PulseShape,
    filtered: bool,
    bracket: (f64, f64),
) -> Result<OptimalPulse> {
    scenario.grid.check_resolution(&scenario.crystal, &scenario.cavity)?;
    golden_section_max(
        |t| evaluate_point(scenario, shape, t, filtered).map(|(row, _)| row.purity),
        bracket.0,
        bracket.1,
        0.01e-9,
    )
}

/// Rectangle in (ω_s, ω_i), centre ± half width on each axis (rad/s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModeWindow {
    pub signal_center: f64,
    pub signal_half_width: f64,
    pub idler_center: f64,
    pub idler_half_width: f64,
}

/// ±FSR/2 about the central resonances of the scenario grid.
pub fn central_window(scenario: &Scenario) -> ModeWindow {
    ModeWindow {
        signal_center: scenario.grid.signal_center,
        signal_half_width: 0.5 * TWO_PI * scenario.fsr_signal_hz,
        idler_center: scenario.grid.idler_center,
        idler_half_width: 0.5 * TWO_PI * scenario.fsr_idler_hz,
    }
}

/// `Σ_window |ψ|² / Σ_grid |ψ|²`. The window may reach half a cell beyond
/// the outermost points and no further.
pub fn central_mode_fraction(jsa: &JsaGrid, window: &ModeWindow) -> Result<f64> {
    let axes = [
        (SpectralAxis::Signal, window.signal_center, window.signal_half_width),
        (SpectralAxis::Idler, window.idler_center, window.idler_half_width),
    ];
    let mut inside = [Vec::new(), Vec::new()];
    for (k, &(axis, c, hw)) in axes.iter().enumerate() {
        let omegas = jsa.grid.omegas(axis);
        let half_cell = 0.5 * jsa.grid.step(axis);
        let (first, last) = (omegas[0] - half_cell, omegas[omegas.len() - 1] + half_cell);
        if !(hw >= 0.0) || c - hw < first - 1e-9 * half_cell || c + hw > last + 1e-9 * half_cell {
            return Err(SpdcError::WindowOffGrid);
        }
        let slack = 1e-9 * half_cell;
        inside[k] = omegas
            .iter()
            .map(|w| (w - c).abs() <= hw + slack)
            .collect::<Vec<bool>>();
    }
    let cols = jsa.cols();
    let (mut total, mut part) = (0.0, 0.0);
    for (a, row) in jsa.amplitude.chunks(cols).enumerate() {
        let mut row_total = 0.0;
        let mut row_part = 0.0;
        for (b, z) in row.iter().enumerate() {
            let v = z.norm_sqr();
            row_total += v;
            if inside[1][b] {
                row_part += v;
            }
        }
        total += row_total;
        if inside[0][a] {
            part += row_part;
        }
    }
    if !(total > 0.0) {
        return Err(SpdcError::EmptyAmplitude);
    }
    Ok((part / total).clamp(0.0, 1.0))
}

/// Output-coupler share of the round-trip losses,
/// `(1 − R2)/((1 − R1) + (1 − R2) + 2αL)`, clamped to [0, 1].
pub fn escape_efficiency(cavity: &CavitySpec, length_m: f64, field: Field) -> Result<f64> {
    let f = cavity.facets(field)?;
    let out = 1.0 - f.r2;
    let total = (1.0 - f.r1) + out + 2.0 * cavity.loss_per_m * length_m;
    if !(total > 0.0) {
        return Ok(0.0);
    }
    Ok((out / total).clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HeraldingBudget {
    pub raw: f64,
    /// With the detector efficiency divided out.
    pub detector_corrected: f64,
}

pub fn heralding_budget(
    escape: f64,
    fiber_coupling: f64,
    filter_transmission: f64,
    detector_eff: f64,
) -> Result<HeraldingBudget> {
    for (name, v) in [
        ("escape efficiency", escape),
        ("fiber coupling", fiber_coupling),
        ("filter transmission", filter_transmission),
        ("detector efficiency", detector_eff),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(SpdcError::InvalidParameter(format!("{name} {v} outside [0, 1]")));
        }
    }
    let corrected = escape * fiber_coupling * filter_transmission;
    Ok(HeraldingBudget {
        raw: corrected * detector_eff,
        detector_corrected: corrected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schmidt::g2_unheralded_from_k;
    use crate::spectral::PumpSpec;

    fn smoke(points: usize) -> Scenario {
        Scenario::reference().with_points(points, true).unwrap()
    }

    #[test]
    fn tau_range_is_exact() {
        let t = tau_range(0.3e-9, 2.0e-9, 0.1e-9).unwrap();
        assert_eq!(t.len(), 18);
        for (a, b) in t.iter().zip(default_taus()) {
            assert!((a - b).abs() < 1e-21);
        }
        assert!((t[17] - 2.0e-9).abs() < 1e-20);
        assert_eq!(tau_range(1e-9, 1e-9, 1e-10).unwrap(), vec![1e-9]);
        assert!(tau_range(-1e-9, 1e-9, 1e-10).is_err());
        assert!(tau_range(0.0, 1e-9, 1e-10).is_err());
    }

    #[test]
    fn sweep_rows_are_consistent_and_deterministic() {
        let s = smoke(160);
        let taus = [0.5e-9, 1.0e-9];
        let a = purity_sweep(&s, &taus, PulseShape::Gaussian, false).unwrap();
        let b = purity_sweep(&s, &taus, PulseShape::Gaussian, false).unwrap();
        assert_eq!(a, b);
        for r in &a.rows {
            assert!(r.schmidt_number >= 1.0 && r.purity > 0.0 && r.purity <= 1.0);
            let g2 = g2_unheralded_from_k(r.schmidt_number);
            assert!(g2 > 1.0 && g2 <= 2.0);
            assert!((g2 - (1.0 + r.purity)).abs() < 1e-15);
        }
        assert_eq!(a.rows.len(), 2);
        assert!(a.rows[0].tau_s < a.rows[1].tau_s);
    }

    #[test]
    fn sweep_rejects_bad_taus() {
        let s = smoke(64);
        assert!(purity_sweep(&s, &[0.0], PulseShape::Gaussian, false).is_err());
        assert!(purity_sweep(&s, &[1e-9, 0.5e-9], PulseShape::Gaussian, false).is_err());
        assert!(purity_sweep(&s, &[], PulseShape::Gaussian, false).is_err());
    }

    #[test]
    fn sweep_enforces_the_guard() {
        let s = Scenario::reference().with_points(512, false).unwrap();
        assert!(matches!(
            purity_sweep(&s, &[1e-9], PulseShape::Gaussian, false),
            Err(SpdcError::ResolutionTooCoarse { .. })
        ));
    }

    #[test]
    fn golden_section_finds_constructed_maximum() {
        let r = golden_section_max(|x| Ok(1.0 - (x - 1.3e-9).powi(2) * 1e18), 0.2e-9, 3.0e-9, 0.01e-9).unwrap();
        assert!((r.tau_s - 1.3e-9).abs() < 0.01e-9);
        assert!((r.purity - 1.0).abs() < 1e-4);
        let err = golden_section_max(|x| Ok(-x), 0.2e-9, 3.0e-9, 0.01e-9).unwrap_err();
        match err {
            SpdcError::NoInteriorMaximum { best_tau, .. } => assert_eq!(best_tau, 0.2e-9),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn whole_grid_window_is_one() {
        let s = smoke(64);
        let jsa = scenario_jsa(&s, PulseShape::Gaussian, 1e-9, false).unwrap();
        let g = &jsa.grid;
        let w = ModeWindow {
            signal_center: g.signal_center,
            signal_half_width: 0.5 * g.signal_span,
            idler_center: g.idler_center,
            idler_half_width: 0.5 * g.idler_span,
        };
        assert_eq!(central_mode_fraction(&jsa, &w).unwrap(), 1.0);
        let off = ModeWindow {
            signal_half_width: g.signal_span,
            ..w
        };
        assert!(matches!(
            central_mode_fraction(&jsa, &off),
            Err(SpdcError::WindowOffGrid)
        ));
    }

    #[test]
    fn cw_pump_concentrates_in_the_central_mode() {
        // reference device: adjacent in-cluster resonances detuned by only ~6
        // linewidths still take a few percent of the cw emission; odd point
        // count puts a sample on the snapped resonance
        let s = smoke(513);
        let cw = |s: &Scenario| {
            let pump = PumpSpec::cw(s.pump.center, TWO_PI * 1e6).unwrap();
            let jsa = build_jsa(&s.crystal, &s.cavity, &pump, &s.grid).unwrap();
            central_mode_fraction(&jsa, &central_window(s)).unwrap()
        };
        let f = cw(&s);
        let pulsed = central_mode_fraction(
            &scenario_jsa(&s, PulseShape::Gaussian, 2.0e-9, false).unwrap(),
            &central_window(&s),
        )
        .unwrap();
        assert!(f > 0.9 && f > pulsed, "{f} vs {pulsed}");
        // high-finesse limit: only the resonant pair survives
        let mut sharp = s.clone();
        for facets in [&mut sharp.cavity.signal, &mut sharp.cavity.idler] {
            facets.r1 = 0.9999;
            facets.r2 = 0.9995;
        }
        sharp.cavity.loss_per_m = 0.0;
        let f = cw(&sharp);
        assert!(f > 0.99, "{f}");
    }

    #[test]
    fn central_fraction_drops_for_short_pulses() {
        let s = smoke(384);
        let w = central_window(&s);
        let frac = |t: f64| {
            let j = scenario_jsa(&s, PulseShape::Gaussian, t, false).unwrap();
            central_mode_fraction(&j, &w).unwrap()
        };
        let (a, b, c) = (frac(0.3e-9), frac(0.6e-9), frac(1.2e-9));
        assert!(a < 1.0 && a < b && b < c, "{a} {b} {c}");
    }

    #[test]
    fn escape_efficiency_examples() {
        let c = CavitySpec::reference_device();
        let e = escape_efficiency(&c, 4.2e-3, Field::Signal).unwrap();
        assert!((e - 0.9615).abs() < 5e-5, "{e}");
        let mut ideal = c;
        ideal.signal.r1 = 1.0;
        ideal.loss_per_m = 0.0;
        assert_eq!(escape_efficiency(&ideal, 4.2e-3, Field::Signal).unwrap(), 1.0);
        let mut closed = c;
        closed.signal.r2 = 1.0;
        assert_eq!(escape_efficiency(&closed, 4.2e-3, Field::Signal).unwrap(), 0.0);
        assert!(escape_efficiency(&c, 4.2e-3, Field::Pump).is_err());
    }

    #[test]
    fn escape_efficiency_monotonicity() {
        let base = CavitySpec::reference_device();
        let mut prev = 0.0;
        for k in 0..20 {
            let mut c = base;
            c.signal.r1 = 0.98 + 0.001 * k as f64;
            let e = escape_efficiency(&c, 4.2e-3, Field::Signal).unwrap();
            assert!(e > prev);
            prev = e;
        }
        let mut prev = 1.0;
        for k in 0..20 {
            let mut c = base;
            c.loss_per_m = 0.05 * k as f64;
            let e = escape_efficiency(&c, 4.2e-3, Field::Signal).unwrap();
            assert!(e <= prev);
            prev = e;
        }
    }

    #[test]
    fn heralding_examples() {
        let h = heralding_budget(0.94, 0.90, 1.0, 0.86).unwrap();
        assert!((h.raw - 0.94 * 0.90 * 0.86).abs() < 1e-15);
        assert!((h.raw - 0.727).abs() < 1e-3);
        assert!((h.detector_corrected - 0.846).abs() < 5e-4);
        let one = heralding_budget(1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!((one.raw, one.detector_corrected), (1.0, 1.0));
        assert_eq!(heralding_budget(0.9, 0.0, 1.0, 0.9).unwrap().raw, 0.0);
        assert!(heralding_budget(1.2, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn off_grid_filter_propagates() {
        let mut s = smoke(64);
        s.filters[0].center += 1e13;
        assert!(matches!(
            purity_sweep(&s, &[1e-9], PulseShape::Gaussian, true),
            Err(SpdcError::FilterOffGrid { .. })
        ));
    }
}
