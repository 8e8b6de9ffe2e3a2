//! Command-line front end: `cavity-spdc <command> --scenario FILE --out DIR`.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Result, SpdcError};
use crate::io::{self, num, Table};
use crate::rng::SpdcRng;
use crate::scenario::Scenario;
use crate::schmidt::{self, Method, SchmidtOptions};
use crate::spectral::{cluster_spectrum, marginal, JsaGrid, PulseShape, SpectralAxis};
use crate::svg::{self, Series};
use crate::sweep::{self, SweepTable};
use crate::temporal::{self, CrossCorrelation, FitOptions, FitReport, HomDip, Model, Weighting};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Noiseless model `f(params, x)` used by `synth`.
type ModelFn = Box<dyn Fn(&[f64], f64) -> f64>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Environment variable capping the worker count (0 = all cores).
pub const THREADS_ENV: &str = "CAVITY_SPDC_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "cavity-spdc",
    version,
    about = "Cavity-enhanced SPDC photon-pair source simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Joint spectral intensity map, marginals and optional complex amplitude.
    Jsi(JsiArgs),
    /// Purity, Schmidt number and central-mode weight against pump pulse length.
    Sweep(SweepArgs),
    /// Wide-window cw emission spectrum showing the cluster structure.
    Spectrum(SpectrumArgs),
    /// Fit measured or synthetic correlation data.
    Fit(FitArgs),
    /// Generate a synthetic dataset with Poisson counting noise.
    Synth(SynthArgs),
    /// Schmidt decomposition of one JSA.
    Schmidt(SchmidtArgs),
}

#[derive(Args, Debug, Clone)]
pub struct ScenarioArgs {
    /// Scenario file (TOML).
    #[arg(long, value_name = "FILE")]
    pub scenario: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Grid points per axis, overriding the scenario.
    #[arg(long, value_name = "N")]
    pub points: Option<usize>,
    /// Skip the linewidth/8 resolution guard (coarse smoke runs only).
    #[arg(long)]
    pub relaxed: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ShapeArg {
    Gaussian,
    Square,
}

impl From<ShapeArg> for PulseShape {
    fn from(s: ShapeArg) -> Self {
        match s {
            ShapeArg::Gaussian => PulseShape::Gaussian,
            ShapeArg::Square => PulseShape::Square,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct PulseArgs {
    /// Pump pulse length in ns (intensity FWHM), overriding the scenario.
    #[arg(long, value_name = "NS", allow_hyphen_values = true)]
    pub tau_ns: Option<f64>,
    /// Pump pulse shape used with --tau-ns.
    #[arg(long, value_enum, default_value = "gaussian")]
    pub shape: ShapeArg,
    /// Pass the JSA through the scenario's filters (default: 5 + 14 GHz etalons on the central idler mode).
    #[arg(long)]
    pub filtered: bool,
}

#[derive(Args, Debug)]
pub struct JsiArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub pulse: PulseArgs,
    /// Also write the complex amplitude to jsa.csv.
    #[arg(long)]
    pub complex: bool,
    /// Write every K-th grid point per axis to the CSV files.
    #[arg(long, value_name = "K", default_value_t = 1)]
    pub stride: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepShape {
    Gaussian,
    Square,
    Both,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Pulse shapes to sweep; `both` overlays the two curves.
    #[arg(long, value_enum, default_value = "both")]
    pub shape: SweepShape,
    /// Apply the study filters to every point.
    #[arg(long)]
    pub filtered: bool,
    /// First pulse length in ns.
    #[arg(long, value_name = "NS", default_value_t = 0.3, allow_hyphen_values = true)]
    pub tau_start_ns: f64,
    /// Last pulse length in ns (inclusive).
    #[arg(long, value_name = "NS", default_value_t = 2.0, allow_hyphen_values = true)]
    pub tau_stop_ns: f64,
    /// Pulse length step in ns.
    #[arg(long, value_name = "NS", default_value_t = 0.1, allow_hyphen_values = true)]
    pub tau_step_ns: f64,
    /// Explicit comma-separated pulse lengths in ns, replacing the range.
    #[arg(long, value_name = "LIST", value_delimiter = ',', allow_hyphen_values = true)]
    pub taus_ns: Option<Vec<f64>>,
    /// Also locate the purity-maximizing pulse length inside the range (gaussian shape).
    #[arg(long)]
    pub optimum: bool,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Half-width of the window about the signal centre, in GHz.
    #[arg(long, value_name = "GHZ", default_value_t = 600.0)]
    pub span_ghz: f64,
    /// Number of samples across the window.
    #[arg(long = "samples", value_name = "N", default_value_t = 120_001)]
    pub samples: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FitKind {
    /// Signal-idler cross-correlation histogram (columns t_s, counts[, sigma]).
    Xcorr,
    /// Hong-Ou-Mandel coincidence dip (columns delay_s, counts[, sigma]).
    Hom,
    /// Heralded g² against pump power (columns power_mw, g2[, sigma]).
    G2power,
}

impl FitKind {
    fn name(self) -> &'static str {
        match self {
            FitKind::Xcorr => "xcorr",
            FitKind::Hom => "hom",
            FitKind::G2power => "g2power",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum WeightArg {
    Poisson,
    Unweighted,
    Sigma,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Kind of measurement in the data file.
    #[arg(long, value_enum)]
    pub kind: FitKind,
    /// CSV data file with a header row.
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Scenario file; accepted for a uniform command line, not used by fits.
    #[arg(long, value_name = "FILE")]
    pub scenario: Option<PathBuf>,
    /// Residual weighting for histogram fits.
    #[arg(long, value_enum, default_value = "poisson")]
    pub weighting: WeightArg,
    /// Report an unconverged fit instead of failing with exit code 3.
    #[arg(long)]
    pub allow_unconverged: bool,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Kind of dataset to generate.
    #[arg(long, value_enum)]
    pub kind: FitKind,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Scenario file; accepted for a uniform command line, not used by synth.
    #[arg(long, value_name = "FILE")]
    pub scenario: Option<PathBuf>,
    /// Seed of the ChaCha20 noise generator.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Write the exact model values without noise.
    #[arg(long)]
    pub noiseless: bool,
    /// Signal linewidth in MHz (xcorr).
    #[arg(long, value_name = "MHZ", default_value_t = 167.9)]
    pub dnu_s_mhz: f64,
    /// Idler linewidth in MHz (xcorr).
    #[arg(long, value_name = "MHZ", default_value_t = 180.4)]
    pub dnu_i_mhz: f64,
    /// Peak coincidence counts above the baseline (xcorr).
    #[arg(long, default_value_t = 1.0e4)]
    pub amplitude: f64,
    /// Time offset of the correlation peak in ns (xcorr).
    #[arg(long, value_name = "NS", default_value_t = 0.0, allow_hyphen_values = true)]
    pub t0_ns: f64,
    /// Flat background counts per bin (default 50 for xcorr, 10000 for hom).
    #[arg(long)]
    pub baseline: Option<f64>,
    /// Dip visibility (hom).
    #[arg(long, default_value_t = 0.912)]
    pub visibility: f64,
    /// Dip half-width in ns (hom).
    #[arg(long, value_name = "NS", default_value_t = 1.0)]
    pub width_ns: f64,
    /// Number of histogram bins (xcorr, hom).
    #[arg(long, default_value_t = 401)]
    pub bins: usize,
    /// Bins span ±WINDOW ns (xcorr, hom).
    #[arg(long, value_name = "NS", default_value_t = 10.0)]
    pub window_ns: f64,
    /// Zero-power heralded g² (g2power).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub g2_intercept: f64,
    /// g² increase per mW of pump (g2power).
    #[arg(long, default_value_t = 0.01, allow_hyphen_values = true)]
    pub g2_slope: f64,
    /// Comma-separated pump powers in mW (g2power).
    #[arg(long, value_name = "LIST", value_delimiter = ',', default_value = "1,2,4,6,8,10")]
    pub powers_mw: Vec<f64>,
    /// Standard deviation of the Gaussian g² noise (g2power).
    #[arg(long, default_value_t = 0.002)]
    pub g2_sigma: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Auto,
    Exact,
    Randomized,
}

#[derive(Args, Debug)]
pub struct SchmidtArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub pulse: PulseArgs,
    /// Decomposition algorithm.
    #[arg(long, value_enum, default_value = "auto")]
    pub method: MethodArg,
    /// Write the first N Schmidt mode functions to modes.csv.
    #[arg(long, value_name = "N", default_value_t = 0)]
    pub modes: usize,
}

fn config(msg: impl Into<String>) -> SpdcError {
    SpdcError::Config(msg.into())
}

/// Exit code for a failed command.
pub fn exit_code(e: &SpdcError) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}

/// Applies `CAVITY_SPDC_THREADS` to the global worker pool.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| config(format!("{THREADS_ENV}={v:?} is not a non-negative integer")))?;
    // a second call in the same process (tests) leaves the first pool in place
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
/// Diagnostics go to stderr, the list of written files to stdout.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match configure_threads().and_then(|_| run(&cli.command)) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cmd: &Command) -> Result<Vec<PathBuf>> {
    match cmd {
        Command::Jsi(a) => cmd_jsi(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Schmidt(a) => cmd_schmidt(a),
    }
}

fn out_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| config(format!("{}: {e}", dir.display())))?;
    Ok(dir.to_path_buf())
}

fn load(a: &ScenarioArgs) -> Result<Scenario> {
    let s = Scenario::from_path(&a.scenario)?;
    match a.points {
        Some(n) => s.with_points(n, a.relaxed || s.grid.relaxed_guard),
        None if a.relaxed => s.with_points(s.grid.signal_points, true),
        None => Ok(s),
    }
}

fn apply_pulse(s: Scenario, p: &PulseArgs) -> Result<Scenario> {
    match p.tau_ns {
        Some(t) => s.with_pulse(p.shape.into(), t * 1e-9),
        None => Ok(s),
    }
}

fn pulse_jsa(s: &Scenario, p: &PulseArgs) -> Result<JsaGrid> {
    let jsa = crate::spectral::build_jsa(&s.crystal, &s.cavity, &s.pump, &s.grid)?;
    if p.filtered {
        crate::spectral::apply_filter(&jsa, &s.study_filters())
    } else {
        Ok(jsa)
    }
}

struct Writer {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self> {
        Ok(Writer {
            dir: out_dir(dir)?,
            written: Vec::new(),
        })
    }

    fn table(&mut self, name: &str, t: &Table) -> Result<()> {
        let p = self.dir.join(name);
        t.write(&p)?;
        self.written.push(p);
        Ok(())
    }

    fn text(&mut self, name: &str, s: &str) -> Result<()> {
        let p = self.dir.join(name);
        io::write_atomic(&p, s.as_bytes())?;
        self.written.push(p);
        Ok(())
    }
}

fn offsets_ghz(jsa: &JsaGrid, axis: SpectralAxis) -> (f64, f64) {
    let d = jsa.grid.detunings(axis);
    (d[0] / TWO_PI * 1e-9, d[d.len() - 1] / TWO_PI * 1e-9)
}

fn strided(jsa: &JsaGrid, k: usize) -> Result<JsaGrid> {
    if k == 0 {
        return Err(config("--stride must be at least 1"));
    }
    if k == 1 {
        return Ok(jsa.clone());
    }
    let rows: Vec<usize> = (0..jsa.rows()).step_by(k).collect();
    let cols: Vec<usize> = (0..jsa.cols()).step_by(k).collect();
    if rows.len() < 2 || cols.len() < 2 {
        return Err(config("--stride leaves fewer than 2 points per axis"));
    }
    let mut grid = jsa.grid;
    let ds = jsa.grid.step(SpectralAxis::Signal);
    let di = jsa.grid.step(SpectralAxis::Idler);
    let s_det = jsa.grid.detunings(SpectralAxis::Signal);
    let i_det = jsa.grid.detunings(SpectralAxis::Idler);
    // keep the sampled points where they were: recentre the decimated grid
    let (s0, s1) = (s_det[rows[0]], s_det[*rows.last().unwrap()]);
    let (i0, i1) = (i_det[cols[0]], i_det[*cols.last().unwrap()]);
    grid.signal_center += 0.5 * (s0 + s1);
    grid.idler_center += 0.5 * (i0 + i1);
    grid.signal_span = s1 - s0;
    grid.idler_span = i1 - i0;
    grid.signal_points = rows.len();
    grid.idler_points = cols.len();
    debug_assert!((grid.step(SpectralAxis::Signal) - k as f64 * ds).abs() < 1e-6 * ds);
    debug_assert!((grid.step(SpectralAxis::Idler) - k as f64 * di).abs() < 1e-6 * di);
    let amplitude = rows
        .iter()
        .flat_map(|&r| cols.iter().map(move |&c| (r, c)))
        .map(|(r, c)| jsa.at(r, c))
        .collect();
    JsaGrid::from_parts(grid, amplitude)
}

pub fn cmd_jsi(a: &JsiArgs) -> Result<Vec<PathBuf>> {
    let s = apply_pulse(load(&a.scenario)?, &a.pulse)?;
    let jsa = pulse_jsa(&s, &a.pulse)?;
    let mut w = Writer::new(&a.scenario.out)?;
    let export = strided(&jsa, a.stride)?;
    w.table("jsi.csv", &io::jsi_table(&export))?;
    if a.complex {
        w.table("jsa.csv", &io::jsa_table(&export))?;
    }
    let mut m = Table::new(&["axis", "offset_hz", "density"]);
    for axis in [SpectralAxis::Signal, SpectralAxis::Idler] {
        let det = export.grid.detunings(axis);
        for (d, v) in det.iter().zip(marginal(&export, axis)) {
            m.push(vec![axis.name().into(), num(d / TWO_PI), num(v)]);
        }
    }
    w.table("marginals.csv", &m)?;
    let title = match s.pump.shape {
        PulseShape::Cw => format!("{}: JSI, cw pump", s.name),
        shape => format!(
            "{}: JSI, {:.3} ns {} pump",
            s.name,
            s.pump.duration_s * 1e9,
            shape.name()
        ),
    };
    let map = svg::heatmap(
        &title,
        &jsa.intensity(),
        jsa.rows(),
        jsa.cols(),
        offsets_ghz(&jsa, SpectralAxis::Idler),
        offsets_ghz(&jsa, SpectralAxis::Signal),
        "idler detuning (GHz)",
        "signal detuning (GHz)",
    );
    w.text("jsi.svg", &map)?;
    Ok(w.written)
}

fn sweep_table(t: &SweepTable) -> Table {
    let mut out = Table::new(&["tau_p_ns", "K", "P", "central_fraction"]);
    for r in &t.rows {
        out.push(vec![
            format!("{:.4}", r.tau_s * 1e9),
            num(r.schmidt_number),
            num(r.purity),
            num(r.central_fraction),
        ]);
    }
    out
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<Vec<PathBuf>> {
    let s = load(&a.scenario)?;
    let taus: Vec<f64> = match &a.taus_ns {
        Some(list) => list.iter().map(|t| t * 1e-9).collect(),
        None => sweep::tau_range(a.tau_start_ns * 1e-9, a.tau_stop_ns * 1e-9, a.tau_step_ns * 1e-9)?,
    };
    let shapes: &[PulseShape] = match a.shape {
        SweepShape::Gaussian => &[PulseShape::Gaussian],
        SweepShape::Square => &[PulseShape::Square],
        SweepShape::Both => &[PulseShape::Gaussian, PulseShape::Square],
    };
    let mut tables = Vec::new();
    for &shape in shapes {
        tables.push(sweep::purity_sweep(&s, &taus, shape, a.filtered)?);
    }
    let mut w = Writer::new(&a.scenario.out)?;
    for t in &tables {
        let name = if t.shape == PulseShape::Square && shapes.len() > 1 {
            "sweep_square.csv"
        } else {
            "sweep.csv"
        };
        w.table(name, &sweep_table(t))?;
    }
    let xs: Vec<Vec<f64>> = tables
        .iter()
        .map(|t| t.rows.iter().map(|r| r.tau_s * 1e9).collect())
        .collect();
    let ys: Vec<Vec<f64>> = tables
        .iter()
        .map(|t| t.rows.iter().map(|r| r.purity).collect())
        .collect();
    let series: Vec<Series> = tables
        .iter()
        .enumerate()
        .map(|(k, t)| Series {
            label: t.shape.name(),
            x: &xs[k],
            y: &ys[k],
            markers: true,
        })
        .collect();
    let title = format!("{}: purity{}", s.name, if a.filtered { ", filtered" } else { "" });
    w.text(
        "sweep.svg",
        &svg::line_plot(&title, &series, "pump pulse length (ns)", "purity P"),
    )?;
    if a.optimum {
        let lo = taus.first().copied().unwrap();
        let hi = taus.last().copied().unwrap();
        let text = match sweep::optimal_pulse_length(&s, PulseShape::Gaussian, a.filtered, (lo, hi)) {
            Ok(o) => format!(
                "status=interior_maximum\ntau_p_ns={:.4}\npurity={}\nevaluations={}\n",
                o.tau_s * 1e9,
                num(o.purity),
                o.evaluations
            ),
            Err(SpdcError::NoInteriorMaximum { best_tau, best_purity }) => format!(
                "status=no_interior_maximum\nbest_tau_p_ns={:.4}\npurity={}\n",
                best_tau * 1e9,
                num(best_purity)
            ),
            Err(e) => return Err(e),
        };
        w.text("optimum.txt", &text)?;
    }
    Ok(w.written)
}

pub fn cmd_spectrum(a: &SpectrumArgs) -> Result<Vec<PathBuf>> {
    if !(a.span_ghz > 0.0) {
        return Err(config("--span-ghz must be positive"));
    }
    let s = load(&a.scenario)?;
    let span = 2.0 * a.span_ghz * 1e9 * TWO_PI;
    let spec = cluster_spectrum(
        &s.crystal,
        &s.cavity,
        s.pump.center,
        s.grid.signal_center,
        span,
        a.samples,
    )?;
    let max = spec.intensity.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(SpdcError::EmptyAmplitude);
    }
    let mut t = Table::new(&["signal_offset_hz", "idler_offset_hz", "intensity"]);
    let mut x = Vec::with_capacity(spec.intensity.len());
    let mut y = Vec::with_capacity(spec.intensity.len());
    for k in 0..spec.intensity.len() {
        let fs = (spec.signal_omega[k] - s.grid.signal_center) / TWO_PI;
        let fi = (spec.idler_omega[k] - s.grid.idler_center) / TWO_PI;
        let v = spec.intensity[k] / max;
        t.push_nums(&[fs, fi, v]);
        x.push(fi * 1e-9);
        y.push(v);
    }
    let mut w = Writer::new(&a.scenario.out)?;
    w.table("spectrum.csv", &t)?;
    let plot = svg::line_plot(
        &format!("{}: cw idler spectrum", s.name),
        &[Series {
            label: "idler",
            x: &x,
            y: &y,
            markers: false,
        }],
        "idler detuning (GHz)",
        "relative intensity",
    );
    w.text("spectrum.svg", &plot)?;
    Ok(w.written)
}

fn report_text(kind: FitKind, r: &FitReport, n: usize) -> String {
    let mut s = format!("kind={}\npoints={n}\n", kind.name());
    for (k, name) in r.names.iter().enumerate() {
        s += &format!(
            "{name}={}\n{name}_sigma={}\n",
            num(r.params[k]),
            num(r.uncertainties[k])
        );
    }
    s += &format!(
        "rss={}\nreduced_chi2={}\nconverged={}\niterations={}\n",
        num(r.rss),
        num(r.reduced_chi2),
        r.converged,
        r.iterations
    );
    for wmsg in &r.warnings {
        s += &format!("warning={wmsg}\n");
    }
    s
}

pub fn cmd_fit(a: &FitArgs) -> Result<Vec<PathBuf>> {
    let (header, cols) = io::read_columns(&a.data)?;
    let opts = FitOptions {
        weighting: match a.weighting {
            WeightArg::Poisson => Weighting::Poisson,
            WeightArg::Unweighted => Weighting::Unweighted,
            WeightArg::Sigma => Weighting::Sigma,
        },
        allow_unconverged: a.allow_unconverged,
        ..FitOptions::default()
    };
    let mut residuals = Table::new(&["x", "y", "model", "residual"]);
    let (report, n, extra) = match a.kind {
        FitKind::Xcorr | FitKind::Hom => {
            let data = io::histogram_from_columns(&header, cols)?;
            let (report, extra) = if a.kind == FitKind::Xcorr {
                let r = temporal::fit_cross_correlation(&data, &opts)?;
                let mut extra = String::new();
                for (label, name) in [("signal", "dnu_s_hz"), ("idler", "dnu_i_hz")] {
                    let b = temporal::predicted_linewidth_from_fit(r.get(name).unwrap())?;
                    for line in b.to_string().lines() {
                        extra += &format!("{label}.{line}\n");
                    }
                }
                (r, extra)
            } else {
                (temporal::fit_hom(&data, &opts)?, String::new())
            };
            for (k, (&x, &y)) in data.centers.iter().zip(&data.counts).enumerate() {
                let r = report.residuals[k];
                residuals.push_nums(&[x, y, y - r, r]);
            }
            (report, data.len(), extra)
        }
        FitKind::G2power => {
            let pts = io::power_points_from_columns(&header, &cols)?;
            let fit = temporal::fit_linear_g2(&pts)?;
            for (p, &r) in pts.iter().zip(&fit.report.residuals) {
                residuals.push_nums(&[p.power_mw, p.g2, p.g2 - r, r]);
            }
            let extra = format!("intercept_is_physical={}\n", fit.intercept_is_physical());
            (fit.report, pts.len(), extra)
        }
    };
    let mut w = Writer::new(&a.out)?;
    w.text("fit_report.txt", &(report_text(a.kind, &report, n) + &extra))?;
    w.table("residuals.csv", &residuals)?;
    Ok(w.written)
}

pub fn cmd_synth(a: &SynthArgs) -> Result<Vec<PathBuf>> {
    let mut rng = SpdcRng::new(a.seed);
    let table = match a.kind {
        FitKind::Xcorr | FitKind::Hom => {
            if a.bins < 2 || !(a.window_ns > 0.0) {
                return Err(config("need at least 2 bins and a positive window"));
            }
            let x = temporal::linspace(-a.window_ns * 1e-9, a.window_ns * 1e-9, a.bins);
            let (model, params, header): (ModelFn, Vec<f64>, [&str; 2]) = if a.kind == FitKind::Xcorr {
                if !(a.dnu_s_mhz > 0.0 && a.dnu_i_mhz > 0.0 && a.amplitude >= 0.0) {
                    return Err(config("linewidths must be positive and the amplitude non-negative"));
                }
                let p = vec![
                    a.dnu_s_mhz * 1e6,
                    a.dnu_i_mhz * 1e6,
                    a.amplitude,
                    a.baseline.unwrap_or(50.0),
                    a.t0_ns * 1e-9,
                ];
                (
                    Box::new(|p: &[f64], x| CrossCorrelation.eval(p, x)),
                    p,
                    ["t_s", "counts"],
                )
            } else {
                if !((0.0..=1.0).contains(&a.visibility) && a.width_ns > 0.0) {
                    return Err(config("visibility must lie in [0, 1] and the width be positive"));
                }
                let p = vec![a.visibility, a.width_ns * 1e-9, a.baseline.unwrap_or(1.0e4)];
                (Box::new(|p: &[f64], x| HomDip.eval(p, x)), p, ["delay_s", "counts"])
            };
            if params.iter().any(|v| !v.is_finite()) || params[params.len() - 1] < 0.0 && a.kind == FitKind::Hom {
                return Err(config("non-finite or negative truth parameter"));
            }
            let mut t = Table::new(&header);
            for &x in &x {
                let mean = model(&params, x).max(0.0);
                let y = if a.noiseless { mean } else { rng.poisson(mean) as f64 };
                t.push_nums(&[x, y]);
            }
            t
        }
        FitKind::G2power => {
            if a.powers_mw.is_empty() || !(a.g2_sigma >= 0.0) {
                return Err(config("need at least one power and a non-negative --g2-sigma"));
            }
            let mut t = Table::new(&["power_mw", "g2", "sigma"]);
            for &p in &a.powers_mw {
                let mean = a.g2_intercept + a.g2_slope * p;
                let y = if a.noiseless {
                    mean
                } else {
                    mean + a.g2_sigma * rng.normal()
                };
                t.push_nums(&[p, y, a.g2_sigma]);
            }
            t
        }
    };
    let mut w = Writer::new(&a.out)?;
    w.table("data.csv", &table)?;
    Ok(w.written)
}

pub fn cmd_schmidt(a: &SchmidtArgs) -> Result<Vec<PathBuf>> {
    let s = apply_pulse(load(&a.scenario)?, &a.pulse)?;
    let jsa = pulse_jsa(&s, &a.pulse)?;
    let opts = SchmidtOptions {
        method: match a.method {
            MethodArg::Auto => Method::Auto,
            MethodArg::Exact => Method::Exact,
            MethodArg::Randomized => Method::Randomized,
        },
        modes: a.modes,
        ..SchmidtOptions::default()
    };
    let r = schmidt::schmidt_decompose_with(&jsa, &opts)?;
    let mut w = Writer::new(&a.scenario.out)?;
    let mut t = Table::new(&["k", "lambda", "cumulative"]);
    let mut cum = 0.0;
    for (k, &l) in r.lambdas.iter().enumerate() {
        cum += l;
        t.push(vec![(k + 1).to_string(), num(l), num(cum)]);
    }
    w.table("schmidt.csv", &t)?;
    let mut sum = Table::new(&["K", "P", "g2_pred", "rank", "residual", "method"]);
    sum.push(vec![
        num(r.schmidt_number),
        num(r.purity),
        num(r.g2_predicted()),
        r.rank.to_string(),
        num(r.residual),
        format!("{:?}", r.method).to_lowercase(),
    ]);
    w.table("summary.csv", &sum)?;
    if a.modes > 0 {
        let mut m = Table::new(&["axis", "mode", "offset_hz", "re", "im"]);
        for (axis, modes) in [
            (SpectralAxis::Signal, &r.signal_modes),
            (SpectralAxis::Idler, &r.idler_modes),
        ] {
            let det = jsa.grid.detunings(axis);
            for (k, f) in modes.iter().enumerate() {
                for (d, z) in det.iter().zip(f) {
                    m.push(vec![
                        axis.name().into(),
                        (k + 1).to_string(),
                        num(d / TWO_PI),
                        num(z.re),
                        num(z.im),
                    ]);
                }
            }
        }
        w.table("modes.csv", &m)?;
    }
    Ok(w.written)
}
