//! Self-contained SVG heatmaps and line plots.
//!
//! Heatmap colour ramp: a value `v` in `[0, 1]` (relative to the maximum) is
//! quantized to the 8-bit level `round(255·v)`, and the level is mapped by
//! linear interpolation between five stops:
//!
//! | level | colour    |
//! |-------|-----------|
//! | 0     | `#000000` |
//! | 64    | `#2b0f54` |
//! | 128   | `#a3307e` |
//! | 192   | `#f58f29` |
//! | 255   | `#fcfdbf` |
//!
//! Each channel is rounded to the nearest integer after interpolation.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 100.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

/// Largest number of heatmap cells per axis; larger grids are block-averaged.
pub const MAX_CELLS: usize = 256;

const STOPS: [(u8, [u8; 3]); 5] = [
    (0, [0x00, 0x00, 0x00]),
    (64, [0x2b, 0x0f, 0x54]),
    (128, [0xa3, 0x30, 0x7e]),
    (192, [0xf5, 0x8f, 0x29]),
    (255, [0xfc, 0xfd, 0xbf]),
];

const SERIES_COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub fn ramp(level: u8) -> [u8; 3] {
    let k = STOPS
        .iter()
        .rposition(|(l, _)| *l <= level)
        .unwrap()
        .min(STOPS.len() - 2);
    let (l0, c0) = STOPS[k];
    let (l1, c1) = STOPS[k + 1];
    let t = (level - l0) as f64 / (l1 - l0) as f64;
    let mut out = [0u8; 3];
    for ch in 0..3 {
        out[ch] = (c0[ch] as f64 + t * (c1[ch] as f64 - c0[ch] as f64)).round() as u8;
    }
    out
}

pub fn level(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn hex(c: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Tick positions at 1, 2 or 5 × 10ⁿ covering `[lo, hi]`.
pub fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return vec![lo];
    }
    let raw = (hi - lo) / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 {
        "0".into()
    } else if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.6}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }
}

fn open(out: &mut String, title: &str) {
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        esc(title)
    )
    .unwrap();
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (l, r, t, b) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    writeln!(
        out,
        r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        r - l,
        b - t
    )
    .unwrap();
    for x in ticks(f.x0, f.x1, 6) {
        let p = f.px(x);
        writeln!(
            out,
            r#"<line x1="{p:.2}" y1="{b}" x2="{p:.2}" y2="{}" stroke="black"/>"#,
            b + 5.0
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{p:.2}" y="{}" text-anchor="middle">{}</text>"#,
            b + 18.0,
            tick_label(x)
        )
        .unwrap();
    }
    for y in ticks(f.y0, f.y1, 5) {
        let p = f.py(y);
        writeln!(
            out,
            r#"<line x1="{}" y1="{p:.2}" x2="{l}" y2="{p:.2}" stroke="black"/>"#,
            l - 5.0
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            l - 8.0,
            p + 4.0,
            tick_label(y)
        )
        .unwrap();
    }
    writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (l + r) / 2.0,
        H - 15.0,
        esc(xlabel)
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="20" y="{0}" text-anchor="middle" transform="rotate(-90 20 {0})">{1}</text>"#,
        (t + b) / 2.0,
        esc(ylabel)
    )
    .unwrap();
}

/// Block-averages a row-major `rows × cols` array to at most `MAX_CELLS`
/// along each axis.
pub fn downsample(values: &[f64], rows: usize, cols: usize) -> (Vec<f64>, usize, usize) {
    let fr = rows.div_ceil(MAX_CELLS).max(1);
    let fc = cols.div_ceil(MAX_CELLS).max(1);
    let (nr, nc) = (rows.div_ceil(fr), cols.div_ceil(fc));
    let mut out = vec![0.0; nr * nc];
    for r in 0..nr {
        for c in 0..nc {
            let (mut s, mut n) = (0.0, 0usize);
            for a in r * fr..((r + 1) * fr).min(rows) {
                for b in c * fc..((c + 1) * fc).min(cols) {
                    s += values[a * cols + b];
                    n += 1;
                }
            }
            out[r * nc + c] = s / n as f64;
        }
    }
    (out, nr, nc)
}

/// Heatmap of a row-major array, rows along y and columns along x. Cells of
/// equal colour level that are adjacent in a row share one rectangle.
#[allow(clippy::too_many_arguments)]
pub fn heatmap(
    title: &str,
    values: &[f64],
    rows: usize,
    cols: usize,
    x_range: (f64, f64),
    y_range: (f64, f64),
    xlabel: &str,
    ylabel: &str,
) -> String {
    let (v, nr, nc) = downsample(values, rows, cols);
    let max = v.iter().cloned().fold(0.0, f64::max);
    let scale = if max > 0.0 { 1.0 / max } else { 0.0 };
    let f = Frame {
        x0: x_range.0,
        x1: x_range.1,
        y0: y_range.0,
        y1: y_range.1,
    };
    let cw = (W - LEFT - RIGHT) / nc as f64;
    let ch = (H - TOP - BOTTOM) / nr as f64;
    let mut out = String::new();
    open(&mut out, title);
    // level-0 background, so only non-zero cells need rectangles
    writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="{}"/>"#,
        W - LEFT - RIGHT,
        H - TOP - BOTTOM,
        hex(ramp(0))
    )
    .unwrap();
    writeln!(out, r#"<g shape-rendering="crispEdges">"#).unwrap();
    for r in 0..nr {
        // row 0 is the lowest y value
        let y = H - BOTTOM - (r + 1) as f64 * ch;
        let mut c = 0;
        while c < nc {
            let lv = level(v[r * nc + c] * scale);
            let mut e = c + 1;
            while e < nc && level(v[r * nc + e] * scale) == lv {
                e += 1;
            }
            if lv > 0 {
                writeln!(
                    out,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                    LEFT + c as f64 * cw,
                    y,
                    (e - c) as f64 * cw,
                    ch,
                    hex(ramp(lv))
                )
                .unwrap();
            }
            c = e;
        }
    }
    writeln!(out, "</g>").unwrap();
    axes(&mut out, &f, xlabel, ylabel);
    // colour bar
    let bx = W - RIGHT + 20.0;
    let bh = (H - TOP - BOTTOM) / 64.0;
    for k in 0..64u32 {
        let lv = (k * 255 / 63) as u8;
        writeln!(
            out,
            r#"<rect x="{bx}" y="{:.2}" width="16" height="{:.2}" fill="{}"/>"#,
            H - BOTTOM - (k + 1) as f64 * bh,
            bh + 0.5,
            hex(ramp(lv))
        )
        .unwrap();
    }
    writeln!(out, r#"<text x="{}" y="{}" >1</text>"#, bx + 20.0, TOP + 10.0).unwrap();
    writeln!(out, r#"<text x="{}" y="{}" >0</text>"#, bx + 20.0, H - BOTTOM).unwrap();
    out.push_str("</svg>\n");
    out
}

/// Curves with more points than this are reduced to a per-bucket min/max
/// envelope before drawing; narrow peaks keep their height.
pub const MAX_PLOT_POINTS: usize = 4000;

/// Keeps the first, minimum, maximum and last point of each of
/// `MAX_PLOT_POINTS / 4` equal-count buckets, in their original order.
pub fn envelope(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len().min(y.len());
    if n <= MAX_PLOT_POINTS {
        return (x[..n].to_vec(), y[..n].to_vec());
    }
    let buckets = MAX_PLOT_POINTS / 4;
    let mut keep = Vec::with_capacity(MAX_PLOT_POINTS);
    for b in 0..buckets {
        let (lo, hi) = (b * n / buckets, ((b + 1) * n / buckets).max(b * n / buckets + 1));
        let mut idx = vec![lo, hi - 1];
        let seg = &y[lo..hi];
        let (mut imin, mut imax) = (0, 0);
        for (k, v) in seg.iter().enumerate() {
            if *v < seg[imin] {
                imin = k;
            }
            if *v > seg[imax] {
                imax = k;
            }
        }
        idx.push(lo + imin);
        idx.push(lo + imax);
        idx.sort_unstable();
        idx.dedup();
        keep.extend(idx);
    }
    (
        keep.iter().map(|&k| x[k]).collect(),
        keep.iter().map(|&k| y[k]).collect(),
    )
}

/// One curve of a line plot.
pub struct Series<'a> {
    pub label: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub markers: bool,
}

pub fn line_plot(title: &str, series: &[Series], xlabel: &str, ylabel: &str) -> String {
    let finite = |v: &&f64| v.is_finite();
    let all_x = series.iter().flat_map(|s| s.x.iter()).filter(finite);
    let all_y = series.iter().flat_map(|s| s.y.iter()).filter(finite);
    let (mut x0, mut x1) = all_x.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let (mut y0, mut y1) = all_y.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(x1 > x0) {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if !(y1 > y0) {
        let d = if y0.abs() > 0.0 { 0.05 * y0.abs() } else { 0.5 };
        y0 -= d;
        y1 += d;
    } else {
        let pad = 0.05 * (y1 - y0);
        y0 -= pad;
        y1 += pad;
    }
    let f = Frame { x0, x1, y0, y1 };
    let mut out = String::new();
    open(&mut out, title);
    axes(&mut out, &f, xlabel, ylabel);
    for (k, s) in series.iter().enumerate() {
        let colour = SERIES_COLOURS[k % SERIES_COLOURS.len()];
        let (ex, ey) = envelope(s.x, s.y);
        let pts: Vec<String> = ex
            .iter()
            .zip(&ey)
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(&x, &y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
            .collect();
        writeln!(
            out,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        )
        .unwrap();
        if s.markers {
            for p in &pts {
                let (x, y) = p.split_once(',').unwrap();
                writeln!(out, r#"<circle cx="{x}" cy="{y}" r="2.5" fill="{colour}"/>"#).unwrap();
            }
        }
        let ly = TOP + 16.0 + 18.0 * k as f64;
        let lx = W - RIGHT - 150.0;
        writeln!(
            out,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"/>"#,
            lx + 20.0
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{}" y="{}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            esc(s.label)
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}
