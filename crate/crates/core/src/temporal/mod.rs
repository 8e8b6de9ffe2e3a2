//! Temporal correlation models (signal-idler cross-correlation, HOM dip,
//! heralded g² versus pump power) and fits of those models to counting data.

mod lm;

use std::f64::consts::{LN_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpdcError};
use crate::rng::SpdcRng;
pub use lm::{fd_jacobian, levenberg_marquardt, FitOptions, FitReport, Model, Weighting};

/// Binned counting data. `centers` are bin centres in seconds (or the
/// independent variable of the measurement); counts are non-negative and
/// may be rates rather than integers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub centers: Vec<f64>,
    pub counts: Vec<f64>,
    pub sigma: Option<Vec<f64>>,
}

impl Histogram {
    pub fn new(centers: Vec<f64>, counts: Vec<f64>, sigma: Option<Vec<f64>>) -> Result<Self> {
        if centers.len() != counts.len() || sigma.as_ref().is_some_and(|s| s.len() != counts.len()) {
            return Err(SpdcError::InvalidParameter("histogram columns differ in length".into()));
        }
        if centers.iter().any(|c| !c.is_finite()) || !centers.windows(2).all(|w| w[1] > w[0]) {
            return Err(SpdcError::InvalidParameter(
                "bin centres must be finite and strictly increasing".into(),
            ));
        }
        if counts.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(SpdcError::InvalidParameter(
                "counts must be finite and non-negative".into(),
            ));
        }
        if let Some(s) = &sigma {
            if s.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(SpdcError::InvalidParameter("uncertainties must be non-negative".into()));
            }
        }
        Ok(Histogram { centers, counts, sigma })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    fn is_flat(&self) -> bool {
        let (lo, hi) = self
            .counts
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &c| (a.min(c), b.max(c)));
        !(hi - lo > 1e-12 * hi.abs().max(f64::MIN_POSITIVE))
    }
}

/// Cross-correlation parameter order.
pub const CROSS_NAMES: [&str; 5] = ["dnu_s_hz", "dnu_i_hz", "amplitude", "baseline", "t0_s"];
/// HOM parameter order.
pub const HOM_NAMES: [&str; 3] = ["visibility", "width_s", "baseline"];

/// `baseline + amplitude·exp(2πΔν_s·τ)` for `τ = t − t0 < 0`, and
/// `baseline + amplitude·exp(−2πΔν_i·τ)` for `τ ≥ 0`.
pub fn cross_correlation_model(dnu_s: f64, dnu_i: f64, amplitude: f64, baseline: f64, t0: f64, t: f64) -> f64 {
    let tau = t - t0;
    let e = if tau < 0.0 {
        (2.0 * PI * dnu_s * tau).exp()
    } else {
        (-2.0 * PI * dnu_i * tau).exp()
    };
    baseline + amplitude * e
}

/// `baseline·(1 − V/(1 + (Δt/γ)²))`.
pub fn hom_model(visibility: f64, width: f64, baseline: f64, dt: f64) -> f64 {
    let x = dt / width;
    baseline * (1.0 - visibility / (1.0 + x * x))
}

pub struct CrossCorrelation;

impl Model for CrossCorrelation {
    fn names(&self) -> &'static [&'static str] {
        &CROSS_NAMES
    }

    fn eval(&self, p: &[f64], t: f64) -> f64 {
        cross_correlation_model(p[0], p[1], p[2], p[3], p[4], t)
    }

    fn gradient(&self, p: &[f64], t: f64) -> Vec<f64> {
        let (ds, di, a, t0) = (p[0], p[1], p[2], p[4]);
        let tau = t - t0;
        if tau < 0.0 {
            let e = (2.0 * PI * ds * tau).exp();
            vec![a * e * 2.0 * PI * tau, 0.0, e, 1.0, -a * e * 2.0 * PI * ds]
        } else {
            let e = (-2.0 * PI * di * tau).exp();
            vec![0.0, -a * e * 2.0 * PI * tau, e, 1.0, a * e * 2.0 * PI * di]
        }
    }

    fn scales(&self, p: &[f64]) -> Vec<f64> {
        let rate = p[0].abs().max(p[1].abs()).max(1.0);
        let level = p[2].abs().max(p[3].abs()).max(1e-300);
        vec![rate, rate, level, level, 1.0 / (2.0 * PI * rate)]
    }

    fn project(&self, p: &mut [f64]) {
        p[0] = p[0].abs().max(1e-9);
        p[1] = p[1].abs().max(1e-9);
    }
}

pub struct HomDip;

impl Model for HomDip {
    fn names(&self) -> &'static [&'static str] {
        &HOM_NAMES
    }

    fn eval(&self, p: &[f64], dt: f64) -> f64 {
        hom_model(p[0], p[1], p[2], dt)
    }

    fn gradient(&self, p: &[f64], dt: f64) -> Vec<f64> {
        let (v, g, b) = (p[0], p[1], p[2]);
        let x = dt / g;
        let l = 1.0 / (1.0 + x * x);
        vec![-b * l, -b * v * l * l * 2.0 * x * x / g, 1.0 - v * l]
    }

    fn scales(&self, p: &[f64]) -> Vec<f64> {
        vec![1.0, p[1].abs().max(1e-300), p[2].abs().max(1e-300)]
    }

    fn project(&self, p: &mut [f64]) {
        p[0] = p[0].clamp(0.0, 1.0);
        p[1] = p[1].abs().max(1e-300);
    }
}

fn data_weights(data: &Histogram, opts: &FitOptions) -> Vec<f64> {
    lm::weights(&data.counts, data.sigma.as_deref(), opts.weighting)
}

/// Data-driven start point: baseline from the outer bins, peak height and
/// position from the maximum, each decay rate from the excess area on its
/// side (`∫ amplitude·e^{−2πΔν|τ|} dτ = amplitude/(2πΔν)`).
pub fn cross_correlation_start(data: &Histogram) -> Vec<f64> {
    let n = data.len();
    let edge = (n / 10).max(2);
    let mut outer: Vec<f64> = data.counts[..edge]
        .iter()
        .chain(&data.counts[n - edge..])
        .cloned()
        .collect();
    outer.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let baseline = outer[outer.len() / 2];
    let (kmax, &peak) = data
        .counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let amplitude = (peak - baseline).max(f64::MIN_POSITIVE);
    let t0 = data.centers[kmax];
    let area = |range: std::ops::Range<usize>| -> f64 {
        range
            .map(|k| {
                let lo = if k == 0 {
                    data.centers[0]
                } else {
                    0.5 * (data.centers[k - 1] + data.centers[k])
                };
                let hi = if k + 1 == n {
                    data.centers[n - 1]
                } else {
                    0.5 * (data.centers[k] + data.centers[k + 1])
                };
                (data.counts[k] - baseline).max(0.0) * (hi - lo)
            })
            .sum()
    };
    let span = data.centers[n - 1] - data.centers[0];
    let fallback = 10.0 / (2.0 * PI * span);
    let left = area(0..kmax) + 0.5 * amplitude * (data.centers[1] - data.centers[0]);
    let right = area(kmax + 1..n) + 0.5 * amplitude * (data.centers[1] - data.centers[0]);
    let rate = |a: f64| if a > 0.0 { amplitude / (2.0 * PI * a) } else { fallback };
    vec![rate(left), rate(right), amplitude, baseline, t0]
}

/// Fits the two-sided exponential to a signal-idler arrival-time histogram.
pub fn fit_cross_correlation(data: &Histogram, opts: &FitOptions) -> Result<FitReport> {
    check_histogram(data, 20)?;
    fit_cross_correlation_from(data, &cross_correlation_start(data), opts)
}

pub fn fit_cross_correlation_from(data: &Histogram, start: &[f64], opts: &FitOptions) -> Result<FitReport> {
    check_histogram(data, 20)?;
    let w = data_weights(data, opts);
    levenberg_marquardt(&CrossCorrelation, &data.centers, &data.counts, &w, start, opts)
}

pub fn hom_start(data: &Histogram) -> Vec<f64> {
    let n = data.len();
    let mut by_distance: Vec<usize> = (0..n).collect();
    by_distance.sort_by(|&a, &b| data.centers[b].abs().partial_cmp(&data.centers[a].abs()).unwrap());
    let outer = &by_distance[..(n / 4).max(2)];
    let baseline = outer.iter().map(|&k| data.counts[k]).sum::<f64>() / outer.len() as f64;
    let (kmin, &dip) = data
        .counts
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let visibility = if baseline > 0.0 {
        (1.0 - dip / baseline).clamp(0.05, 0.99)
    } else {
        0.5
    };
    // half-depth crossing on the wider side of the minimum
    let half = baseline * (1.0 - 0.5 * visibility);
    let mut width = 0.25 * (data.centers[n - 1] - data.centers[0]);
    for k in kmin..n {
        if data.counts[k] >= half {
            width = (data.centers[k] - data.centers[kmin]).abs().max(width * 1e-3);
            break;
        }
    }
    vec![visibility, width, baseline]
}

/// Fits the inverse-Lorentzian dip; the visibility is held inside [0, 1].
pub fn fit_hom(data: &Histogram, opts: &FitOptions) -> Result<FitReport> {
    check_histogram(data, 10)?;
    fit_hom_from(data, &hom_start(data), opts)
}

pub fn fit_hom_from(data: &Histogram, start: &[f64], opts: &FitOptions) -> Result<FitReport> {
    check_histogram(data, 10)?;
    let w = data_weights(data, opts);
    levenberg_marquardt(&HomDip, &data.centers, &data.counts, &w, start, opts)
}

fn check_histogram(data: &Histogram, min_bins: usize) -> Result<()> {
    if data.len() < min_bins {
        return Err(SpdcError::DegenerateData(format!(
            "{} bins; at least {min_bins} required",
            data.len()
        )));
    }
    if data.is_flat() {
        return Err(SpdcError::DegenerateData("histogram is flat".into()));
    }
    Ok(())
}

/// One point of a heralded-g² versus pump-power series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerPoint {
    pub power_mw: f64,
    pub g2: f64,
    pub sigma: f64,
}

/// Weighted straight line `g² = intercept + slope·P`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub report: FitReport,
}

impl LinearFit {
    pub fn intercept(&self) -> f64 {
        self.report.params[0]
    }

    pub fn slope(&self) -> f64 {
        self.report.params[1]
    }

    pub fn predict(&self, power_mw: f64) -> f64 {
        self.intercept() + self.slope() * power_mw
    }

    /// A heralded g² cannot be negative at zero pump power.
    pub fn intercept_is_physical(&self) -> bool {
        self.intercept() >= 0.0
    }
}

/// Weighted least squares with weights `1/σ²` (unit weights where σ is zero
/// for every point). Uncertainties take σ as absolute.
pub fn fit_linear_g2(points: &[PowerPoint]) -> Result<LinearFit> {
    if points
        .iter()
        .any(|p| !(p.power_mw.is_finite() && p.g2.is_finite() && p.sigma >= 0.0))
    {
        return Err(SpdcError::InvalidParameter("non-finite power series point".into()));
    }
    let distinct = points
        .iter()
        .any(|p| (p.power_mw - points[0].power_mw).abs() > 1e-12 * points[0].power_mw.abs().max(1e-12));
    if points.len() < 2 || !distinct {
        return Err(SpdcError::DegenerateData(
            "need at least two distinct pump powers".into(),
        ));
    }
    let all_zero = points.iter().all(|p| p.sigma == 0.0);
    let w: Vec<f64> = points
        .iter()
        .map(|p| {
            if all_zero {
                1.0
            } else if p.sigma > 0.0 {
                1.0 / (p.sigma * p.sigma)
            } else {
                0.0
            }
        })
        .collect();
    let (mut s, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (p, &w) in points.iter().zip(&w) {
        s += w;
        sx += w * p.power_mw;
        sy += w * p.g2;
        sxx += w * p.power_mw * p.power_mw;
        sxy += w * p.power_mw * p.g2;
    }
    let det = s * sxx - sx * sx;
    if !(det > 0.0) {
        return Err(SpdcError::DegenerateData("weighted powers are not distinct".into()));
    }
    let slope = (s * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    let residuals: Vec<f64> = points.iter().map(|p| p.g2 - intercept - slope * p.power_mw).collect();
    let rss: f64 = residuals.iter().zip(&w).map(|(r, w)| w * r * r).sum();
    let dof = points.len().saturating_sub(2).max(1) as f64;
    let scale = if all_zero { rss / dof } else { 1.0 };
    let mut warnings = Vec::new();
    if intercept < 0.0 {
        warnings.push(format!("negative zero-power intercept {intercept:.4e} is unphysical"));
    }
    Ok(LinearFit {
        report: FitReport {
            names: vec!["intercept".into(), "slope_per_mw".into()],
            params: vec![intercept, slope],
            uncertainties: vec![(sxx / det * scale).sqrt(), (s / det * scale).sqrt()],
            rss,
            reduced_chi2: rss / dof,
            converged: true,
            iterations: 1,
            rss_history: vec![rss],
            residuals,
            warnings,
        },
    })
}

/// Predicted HOM visibility as the product of spectral purity, photon-number
/// purity and interferometer contrast.
pub fn visibility_budget(spectral_purity: f64, fock_purity: f64, contrast: f64) -> Result<f64> {
    for (name, v) in [
        ("spectral purity", spectral_purity),
        ("Fock purity", fock_purity),
        ("contrast", contrast),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(SpdcError::InvalidParameter(format!("{name} {v} outside [0, 1]")));
        }
    }
    Ok(spectral_purity * fock_purity * contrast)
}

/// Linewidth and the coherence times obtained from it under the three
/// conventions in common use.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BandwidthReport {
    pub linewidth_hz: f64,
    /// `1/(2πΔν)`: the 1/e decay time of the correlation amplitude.
    pub decay_time_s: f64,
    /// `1/Δν`.
    pub inverse_linewidth_s: f64,
    /// `ln2/(πΔν)`: full width at half maximum of the two-sided exponential.
    pub fwhm_time_s: f64,
}

pub fn predicted_linewidth_from_fit(linewidth_hz: f64) -> Result<BandwidthReport> {
    if !(linewidth_hz > 0.0) || !linewidth_hz.is_finite() {
        return Err(SpdcError::InvalidParameter(format!(
            "linewidth must be positive, got {linewidth_hz}"
        )));
    }
    Ok(BandwidthReport {
        linewidth_hz,
        decay_time_s: 1.0 / (2.0 * PI * linewidth_hz),
        inverse_linewidth_s: 1.0 / linewidth_hz,
        fwhm_time_s: LN_2 / (PI * linewidth_hz),
    })
}

impl fmt::Display for BandwidthReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "linewidth_mhz={:.4}", self.linewidth_hz * 1e-6)?;
        writeln!(
            f,
            "coherence_time_ns[1/(2*pi*dnu), 1/e decay]={:.4}",
            self.decay_time_s * 1e9
        )?;
        writeln!(f, "coherence_time_ns[1/dnu]={:.4}", self.inverse_linewidth_s * 1e9)?;
        write!(
            f,
            "coherence_time_ns[ln2/(pi*dnu), correlation FWHM]={:.4}",
            self.fwhm_time_s * 1e9
        )
    }
}

/// Poisson-sampled histogram of `model` at the given bin centres.
pub fn synthesize<M: Model>(model: &M, params: &[f64], centers: &[f64], rng: &mut SpdcRng) -> Result<Histogram> {
    let counts = centers
        .iter()
        .map(|&x| rng.poisson(model.eval(params, x).max(0.0)) as f64)
        .collect();
    Histogram::new(centers.to_vec(), counts, None)
}

/// `n` evenly spaced centres over `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}
