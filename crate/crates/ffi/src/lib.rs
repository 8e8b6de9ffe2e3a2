//! C ABI over the cavity-spdc core.
//!
//! Scenarios and joint spectral amplitudes cross the boundary as opaque
//! handles owned by the caller and released with the matching `_free`
//! function. Every entry point returns a [`CspdcStatus`]; on failure the
//! message is available from [`cspdc_last_error`] on the same thread.
//! Panics are caught at the boundary and reported as `CSPDC_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use cavity_spdc::dispersion::{self, Field};
use cavity_spdc::schmidt::{schmidt_decompose_with, Method, SchmidtOptions};
use cavity_spdc::spectral::{cavity, JsaGrid, PulseShape};
use cavity_spdc::sweep::{escape_efficiency, optimal_pulse_length, purity_sweep, scenario_jsa};
use cavity_spdc::{Scenario, SpdcError};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CspdcStatus {
    Ok = 0,
    /// Invalid scenario, parameter or input text.
    InvalidInput = 2,
    /// The numerics failed on valid input.
    Numerical = 3,
    NullPointer = 4,
    /// An output buffer is shorter than the result.
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CspdcPulseShape {
    Gaussian = 0,
    Square = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CspdcMethod {
    Auto = 0,
    Exact = 1,
    Randomized = 2,
}

/// Opaque scenario handle.
pub struct CspdcScenario(Scenario);

/// Opaque joint spectral amplitude handle, signal rows by idler columns.
pub struct CspdcJsa(JsaGrid);

/// Cavity figures of a scenario at its grid centres.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CspdcCavityFigures {
    pub fsr_signal_hz: f64,
    pub fsr_idler_hz: f64,
    pub finesse_signal: f64,
    pub finesse_idler: f64,
    pub linewidth_signal_hz: f64,
    pub linewidth_idler_hz: f64,
    pub escape_signal: f64,
    pub escape_idler: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CspdcSchmidtSummary {
    pub schmidt_number: f64,
    pub purity: f64,
    /// Predicted unheralded g2(0) = 1 + 1/K.
    pub g2: f64,
    pub rank: usize,
    pub residual: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CspdcSweepRow {
    pub tau_s: f64,
    pub schmidt_number: f64,
    pub purity: f64,
    pub central_fraction: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(CspdcStatus, String);

impl From<SpdcError> for Failure {
    fn from(e: SpdcError) -> Self {
        let status = if e.is_numerical() {
            CspdcStatus::Numerical
        } else {
            CspdcStatus::InvalidInput
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(CspdcStatus::NullPointer, format!("{what} is null"))
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> CspdcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CspdcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            CspdcStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CspdcStatus::InvalidInput, format!("{what} is not valid UTF-8")))
}

fn shape(s: CspdcPulseShape) -> PulseShape {
    match s {
        CspdcPulseShape::Gaussian => PulseShape::Gaussian,
        CspdcPulseShape::Square => PulseShape::Square,
    }
}

fn put_scenario(dst: *mut *mut CspdcScenario, s: Scenario) -> Result<(), Failure> {
    let dst = unsafe { out(dst, "out")? };
    *dst = Box::into_raw(Box::new(CspdcScenario(s)));
    Ok(())
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cspdc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cspdc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// The built-in device scenario.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn cspdc_scenario_reference(out: *mut *mut CspdcScenario) -> CspdcStatus {
    guard(|| put_scenario(out, Scenario::reference()))
}

/// Parses a scenario from TOML text.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cspdc_scenario_from_toml(toml: *const c_char, out: *mut *mut CspdcScenario) -> CspdcStatus {
    guard(|| {
        let s = Scenario::from_toml(text(toml, "toml")?)?;
        put_scenario(out, s)
    })
}

/// Loads a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cspdc_scenario_load(path: *const c_char, out: *mut *mut CspdcScenario) -> CspdcStatus {
    guard(|| {
        let s = Scenario::from_path(Path::new(text(path, "path")?))?;
        put_scenario(out, s)
    })
}

/// Copy of `scenario` with `points` samples per axis. `relaxed` skips the
/// linewidth/8 resolution guard.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cspdc_scenario_with_points(
    scenario: *const CspdcScenario,
    points: usize,
    relaxed: bool,
    out: *mut *mut CspdcScenario,
) -> CspdcStatus {
    guard(|| {
        let s = get(scenario, "scenario")?.0.with_points(points, relaxed)?;
        put_scenario(out, s)
    })
}

/// # Safety
/// `scenario` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cspdc_scenario_free(scenario: *mut CspdcScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cspdc_cavity_figures(
    scenario: *const CspdcScenario,
    out: *mut CspdcCavityFigures,
) -> CspdcStatus {
    guard(|| {
        let s = &get(scenario, "scenario")?.0;
        let dst = self::out(out, "out")?;
        let lam_s = dispersion::wavelength(s.grid.signal_center);
        let lam_i = dispersion::wavelength(s.grid.idler_center);
        let l = s.crystal.length_m;
        *dst = CspdcCavityFigures {
            fsr_signal_hz: s.fsr_signal_hz,
            fsr_idler_hz: s.fsr_idler_hz,
            finesse_signal: cavity::finesse(&s.cavity, Field::Signal, l)?,
            finesse_idler: cavity::finesse(&s.cavity, Field::Idler, l)?,
            linewidth_signal_hz: cavity::linewidth(&s.cavity, &s.crystal, Field::Signal, lam_s)?,
            linewidth_idler_hz: cavity::linewidth(&s.cavity, &s.crystal, Field::Idler, lam_i)?,
            escape_signal: escape_efficiency(&s.cavity, l, Field::Signal)?,
            escape_idler: escape_efficiency(&s.cavity, l, Field::Idler)?,
        };
        Ok(())
    })
}

/// Builds the normalized JSA for a pump pulse of duration `tau_s`,
/// optionally through the scenario's study filters.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cspdc_jsa_build(
    scenario: *const CspdcScenario,
    pulse: CspdcPulseShape,
    tau_s: f64,
    filtered: bool,
    out: *mut *mut CspdcJsa,
) -> CspdcStatus {
    guard(|| {
        let s = &get(scenario, "scenario")?.0;
        let dst = self::out(out, "out")?;
        let jsa = scenario_jsa(s, shape(pulse), tau_s, filtered)?;
        *dst = Box::into_raw(Box::new(CspdcJsa(jsa)));
        Ok(())
    })
}

/// # Safety
/// `jsa` must be a live handle; `rows` and `cols` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cspdc_jsa_dims(jsa: *const CspdcJsa, rows: *mut usize, cols: *mut usize) -> CspdcStatus {
    guard(|| {
        let g = &get(jsa, "jsa")?.0.grid;
        *out(rows, "rows")? = g.signal_points;
        *out(cols, "cols")? = g.idler_points;
        Ok(())
    })
}

/// Copies the amplitude, row-major, into `re` and `im`, each of length
/// `len >= rows * cols`.
///
/// # Safety
/// `jsa` must be a live handle; `re` and `im` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cspdc_jsa_amplitude(
    jsa: *const CspdcJsa,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> CspdcStatus {
    guard(|| {
        let a = &get(jsa, "jsa")?.0.amplitude;
        if re.is_null() || im.is_null() {
            return Err(null("re/im"));
        }
        if len < a.len() {
            return Err(Failure(
                CspdcStatus::BufferTooSmall,
                format!("buffer holds {len} values, amplitude has {}", a.len()),
            ));
        }
        let re = std::slice::from_raw_parts_mut(re, a.len());
        let im = std::slice::from_raw_parts_mut(im, a.len());
        for (k, z) in a.iter().enumerate() {
            re[k] = z.re;
            im[k] = z.im;
        }
        Ok(())
    })
}

/// # Safety
/// `jsa` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cspdc_jsa_free(jsa: *mut CspdcJsa) {
    if !jsa.is_null() {
        drop(Box::from_raw(jsa));
    }
}

/// Schmidt decomposition of `jsa`. Up to `capacity` coefficients are
/// written to `lambdas` (may be null); `summary.rank` gives the full count.
///
/// # Safety
/// `jsa` must be a live handle; `summary` must be writable; `lambdas`
/// must be null or hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn cspdc_schmidt(
    jsa: *const CspdcJsa,
    method: CspdcMethod,
    summary: *mut CspdcSchmidtSummary,
    lambdas: *mut f64,
    capacity: usize,
) -> CspdcStatus {
    guard(|| {
        let j = &get(jsa, "jsa")?.0;
        let dst = out(summary, "summary")?;
        let opts = SchmidtOptions {
            method: match method {
                CspdcMethod::Auto => Method::Auto,
                CspdcMethod::Exact => Method::Exact,
                CspdcMethod::Randomized => Method::Randomized,
            },
            ..SchmidtOptions::default()
        };
        let r = schmidt_decompose_with(j, &opts)?;
        *dst = CspdcSchmidtSummary {
            schmidt_number: r.schmidt_number,
            purity: r.purity,
            g2: r.g2_predicted(),
            rank: r.rank,
            residual: r.residual,
        };
        if !lambdas.is_null() {
            let n = capacity.min(r.lambdas.len());
            std::slice::from_raw_parts_mut(lambdas, n).copy_from_slice(&r.lambdas[..n]);
        }
        Ok(())
    })
}

/// Purity at each of the `n` pulse lengths in `taus_s`; writes `n` rows.
///
/// # Safety
/// `scenario` must be a live handle; `taus_s` must hold `n` doubles and
/// `rows` room for `n` rows.
#[no_mangle]
pub unsafe extern "C" fn cspdc_purity_sweep(
    scenario: *const CspdcScenario,
    taus_s: *const f64,
    n: usize,
    pulse: CspdcPulseShape,
    filtered: bool,
    rows: *mut CspdcSweepRow,
) -> CspdcStatus {
    guard(|| {
        let s = &get(scenario, "scenario")?.0;
        if n == 0 {
            return Ok(());
        }
        if taus_s.is_null() || rows.is_null() {
            return Err(null("taus_s/rows"));
        }
        let taus = std::slice::from_raw_parts(taus_s, n);
        let table = purity_sweep(s, taus, shape(pulse), filtered)?;
        let dst = std::slice::from_raw_parts_mut(rows, n);
        for (d, r) in dst.iter_mut().zip(&table.rows) {
            *d = CspdcSweepRow {
                tau_s: r.tau_s,
                schmidt_number: r.schmidt_number,
                purity: r.purity,
                central_fraction: r.central_fraction,
            };
        }
        Ok(())
    })
}

/// Pulse length maximizing the purity inside `[lo_s, hi_s]`.
///
/// # Safety
/// `scenario` must be a live handle; `tau_s` and `purity` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cspdc_optimal_pulse(
    scenario: *const CspdcScenario,
    pulse: CspdcPulseShape,
    filtered: bool,
    lo_s: f64,
    hi_s: f64,
    tau_s: *mut f64,
    purity: *mut f64,
) -> CspdcStatus {
    guard(|| {
        let s = &get(scenario, "scenario")?.0;
        let (t, p) = (out(tau_s, "tau_s")?, out(purity, "purity")?);
        let best = optimal_pulse_length(s, shape(pulse), filtered, (lo_s, hi_s))?;
        *t = best.tau_s;
        *p = best.purity;
        Ok(())
    })
}
