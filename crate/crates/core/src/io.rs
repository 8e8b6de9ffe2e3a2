//! CSV output and input. Every file is written to a temporary sibling and
//! renamed into place, so readers never see a partial file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Result, SpdcError};
use crate::spectral::{JsaGrid, SpectralAxis};
use crate::temporal::{Histogram, PowerPoint};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn io_err(path: &Path, e: impl std::fmt::Display) -> SpdcError {
    SpdcError::Config(format!("{}: {e}", path.display()))
}

/// Shortest round-trip decimal: plain integers below 1e15, scientific
/// notation otherwise. Deterministic, so outputs are byte-stable.
pub fn num(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:e}")
    }
}

/// Writes `bytes` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| io_err(path, "not a file path"))?
        .to_string_lossy();
    let tmp: PathBuf = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(io_err(path, e));
    }
    Ok(())
}

/// A CSV table held in memory until [`Table::write`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_nums(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|&x| num(x)).collect());
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes())
    }
}

fn offsets_hz(jsa: &JsaGrid, axis: SpectralAxis) -> Vec<f64> {
    jsa.grid.detunings(axis).into_iter().map(|d| d / TWO_PI).collect()
}

/// Long format, one grid point per line: signal and idler offsets from the
/// band centres (Hz) and the normalized intensity |f|².
pub fn jsi_table(jsa: &JsaGrid) -> Table {
    let s = offsets_hz(jsa, SpectralAxis::Signal);
    let i = offsets_hz(jsa, SpectralAxis::Idler);
    let mut t = Table::new(&["signal_offset_hz", "idler_offset_hz", "intensity"]);
    for (r, &fs) in s.iter().enumerate() {
        for (c, &fi) in i.iter().enumerate() {
            t.push_nums(&[fs, fi, jsa.at(r, c).norm_sqr()]);
        }
    }
    t
}

/// As [`jsi_table`] with the complex amplitude in two columns.
pub fn jsa_table(jsa: &JsaGrid) -> Table {
    let s = offsets_hz(jsa, SpectralAxis::Signal);
    let i = offsets_hz(jsa, SpectralAxis::Idler);
    let mut t = Table::new(&["signal_offset_hz", "idler_offset_hz", "re", "im"]);
    for (r, &fs) in s.iter().enumerate() {
        for (c, &fi) in i.iter().enumerate() {
            let z = jsa.at(r, c);
            t.push_nums(&[fs, fi, z.re, z.im]);
        }
    }
    t
}

/// Reads a numeric CSV. The header is mandatory; returns it with the columns.
pub fn read_columns(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_columns(&text).map_err(|e| match e {
        SpdcError::Config(m) => SpdcError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_columns(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = r
        .headers()
        .map_err(|e| SpdcError::Config(format!("bad header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(|h| h.is_empty()) {
        return Err(SpdcError::Config("empty file: a header row is required".into()));
    }
    if header.iter().any(|h| h.parse::<f64>().is_ok()) {
        return Err(SpdcError::Config(format!(
            "missing header row (found numbers: {})",
            header.join(",")
        )));
    }
    let mut cols = vec![Vec::new(); header.len()];
    for (k, rec) in r.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| SpdcError::Config(format!("line {line}: {e}")))?;
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                SpdcError::Config(format!(
                    "line {line}, column '{}': not a number: \"{field}\"",
                    header[c]
                ))
            })?;
            cols[c].push(v);
        }
    }
    if cols[0].is_empty() {
        return Err(SpdcError::Config("no data rows".into()));
    }
    Ok((header, cols))
}

/// Histogram from columns `x, counts[, sigma]`.
pub fn histogram_from_columns(header: &[String], cols: Vec<Vec<f64>>) -> Result<Histogram> {
    if cols.len() < 2 {
        return Err(SpdcError::Config(format!(
            "expected columns x,counts[,sigma], got {}",
            header.join(",")
        )));
    }
    let mut it = cols.into_iter();
    let x = it.next().unwrap();
    let y = it.next().unwrap();
    let sigma = it.next();
    Histogram::new(x, y, sigma)
}

/// Power series from columns `power_mw, g2, sigma`.
pub fn power_points_from_columns(header: &[String], cols: &[Vec<f64>]) -> Result<Vec<PowerPoint>> {
    if cols.len() < 2 {
        return Err(SpdcError::Config(format!(
            "expected columns power_mw,g2[,sigma], got {}",
            header.join(",")
        )));
    }
    Ok((0..cols[0].len())
        .map(|k| PowerPoint {
            power_mw: cols[0][k],
            g2: cols[1][k],
            sigma: cols.get(2).map_or(0.0, |s| s[k]),
        })
        .collect())
}
