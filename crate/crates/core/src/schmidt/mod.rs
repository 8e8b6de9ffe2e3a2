//! Schmidt decomposition of a discretized joint spectral amplitude, the
//! derived mode number and purity, and the bridge to unheralded g².

mod linalg;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpdcError};
use crate::rng::SpdcRng;
use crate::spectral::{JsaGrid, SpectralAxis};
use linalg::{conj_copy, gemm, jacobi_svd, norm_sqr, orthonormalize_block, View, JACOBI_TOL};

/// Coefficients below this fraction of the largest are dropped.
pub const RELATIVE_CUTOFF: f64 = 1e-12;
/// Target for the unexplained weight of the randomized range finder.
pub const RANGE_TOLERANCE: f64 = 1e-10;
/// Largest short side handled by direct Jacobi under `Method::Auto`.
pub const EXACT_MAX_DIM: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Exact below `EXACT_MAX_DIM`, randomized above.
    Auto,
    /// One-sided Jacobi on the full matrix.
    Exact,
    /// Adaptive randomized range finder, then Jacobi on the compressed factor.
    Randomized,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchmidtOptions {
    pub method: Method,
    /// Number of mode functions to return per axis (0 = none).
    pub modes: usize,
    pub block: usize,
    pub seed: u64,
}

impl Default for SchmidtOptions {
    fn default() -> Self {
        SchmidtOptions {
            method: Method::Auto,
            modes: 0,
            block: 32,
            seed: 0x5e_ed5c_41d7,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchmidtResult {
    /// Descending, summing to one.
    pub lambdas: Vec<f64>,
    pub schmidt_number: f64,
    pub purity: f64,
    /// Number of retained coefficients.
    pub rank: usize,
    /// Weight not represented by the retained coefficients, as a fraction
    /// of the total.
    pub residual: f64,
    pub method: Method,
    /// Signal mode functions sampled on the grid, orthonormal under
    /// `Σ conj(u)·v·Δω_s`.
    pub signal_modes: Vec<Vec<Complex64>>,
    /// Idler mode functions, orthonormal under `Σ conj(u)·v·Δω_i`.
    pub idler_modes: Vec<Vec<Complex64>>,
}

impl SchmidtResult {
    pub fn from_lambdas(lambdas: Vec<f64>, residual: f64, method: Method) -> Self {
        let purity = purity_of(&lambdas);
        SchmidtResult {
            rank: lambdas.len(),
            schmidt_number: 1.0 / purity,
            purity,
            lambdas,
            residual,
            method,
            signal_modes: Vec::new(),
            idler_modes: Vec::new(),
        }
    }

    /// Predicted unheralded signal autocorrelation.
    pub fn g2_predicted(&self) -> f64 {
        g2_unheralded_from_k(self.schmidt_number)
    }
}

fn purity_of(lambdas: &[f64]) -> f64 {
    lambdas.iter().map(|l| l * l).sum()
}

/// `K = 1/Σλ²`.
pub fn schmidt_number(result: &SchmidtResult) -> f64 {
    1.0 / purity_of(&result.lambdas)
}

/// `P = Σλ²`.
pub fn purity(result: &SchmidtResult) -> f64 {
    purity_of(&result.lambdas)
}

/// `g² = 1 + 1/K`.
pub fn g2_unheralded_from_k(k: f64) -> f64 {
    1.0 + 1.0 / k
}

/// `K = 1/(g² − 1)`, defined for g² in (1, 2].
pub fn k_from_g2(g2: f64) -> Result<f64> {
    if !(g2 > 1.0 && g2 <= 2.0) {
        return Err(SpdcError::DomainError {
            value: g2,
            domain: "(1, 2]",
        });
    }
    Ok(1.0 / (g2 - 1.0))
}

pub fn schmidt_decompose(jsa: &JsaGrid) -> Result<SchmidtResult> {
    schmidt_decompose_with(jsa, &SchmidtOptions::default())
}

pub fn schmidt_decompose_with(jsa: &JsaGrid, opts: &SchmidtOptions) -> Result<SchmidtResult> {
    let mut out = decompose_matrix(&jsa.amplitude, jsa.rows(), jsa.cols(), opts)?;
    let ws = 1.0 / jsa.grid.step(SpectralAxis::Signal).sqrt();
    let wi = 1.0 / jsa.grid.step(SpectralAxis::Idler).sqrt();
    for m in &mut out.signal_modes {
        m.iter_mut().for_each(|z| *z *= ws);
    }
    for m in &mut out.idler_modes {
        m.iter_mut().for_each(|z| *z *= wi);
    }
    Ok(out)
}

/// Decomposes a row-major `rows × cols` amplitude matrix. Uniform cell
/// weights cancel in the normalized coefficients; mode functions come back
/// with unit Euclidean norm.
pub fn decompose_matrix(data: &[Complex64], rows: usize, cols: usize, opts: &SchmidtOptions) -> Result<SchmidtResult> {
    if rows == 0 || cols == 0 || data.len() != rows * cols {
        return Err(SpdcError::InvalidParameter("matrix shape does not match data".into()));
    }
    if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(SpdcError::NumericalFailure("non-finite amplitude".into()));
    }
    let total = norm_sqr(data);
    if !(total > 0.0) {
        return Err(SpdcError::EmptyAmplitude);
    }
    let method = match opts.method {
        Method::Auto if rows.min(cols) <= EXACT_MAX_DIM => Method::Exact,
        Method::Auto => Method::Randomized,
        m => m,
    };
    let raw = match method {
        Method::Exact => exact(data, rows, cols, opts.modes)?,
        _ => randomized(data, rows, cols, total, opts)?,
    };
    finish(raw, total, method, opts.modes)
}

/// Unnormalized decomposition: `A ≈ Σ s_k² … ` with `lambda = s²`, signal
/// modes as columns of length `rows`, idler modes as rows of length `cols`.
struct Raw {
    s2: Vec<f64>,
    signal: Vec<Vec<Complex64>>,
    idler: Vec<Vec<Complex64>>,
    /// Weight left out before truncation (range-finder residual).
    unexplained: f64,
}

fn exact(data: &[Complex64], rows: usize, cols: usize, modes: usize) -> Result<Raw> {
    let want = modes > 0;
    // Orthogonalize along the short side. Columns of A (row-major input) are
    // strided, so build the column-major copy explicitly.
    if rows >= cols {
        let mut a = vec![Complex64::new(0.0, 0.0); rows * cols];
        for (i, row) in data.chunks(cols).enumerate() {
            for (j, z) in row.iter().enumerate() {
                a[j * rows + i] = *z;
            }
        }
        // A·V = U·Σ  →  A = U Σ V†: idler modes are conj(V columns)
        let svd = jacobi_svd(a, rows, cols, want, JACOBI_TOL)?;
        let take = modes.min(cols);
        let signal = (0..take).map(|k| svd.u[k * rows..(k + 1) * rows].to_vec()).collect();
        let idler = svd
            .v
            .map(|v| (0..take).map(|k| conj_copy(&v[k * cols..(k + 1) * cols])).collect())
            .unwrap_or_default();
        Ok(Raw {
            s2: svd.sigma.iter().map(|s| s * s).collect(),
            signal,
            idler,
            unexplained: 0.0,
        })
    } else {
        // A† is column-major with the rows of A, conjugated, as its columns.
        // A†·V = U·Σ  →  A = V Σ U†
        let a = conj_copy(data);
        let svd = jacobi_svd(a, cols, rows, want, JACOBI_TOL)?;
        let take = modes.min(rows);
        let idler = (0..take).map(|k| conj_copy(&svd.u[k * cols..(k + 1) * cols])).collect();
        let signal = svd
            .v
            .map(|v| (0..take).map(|k| v[k * rows..(k + 1) * rows].to_vec()).collect())
            .unwrap_or_default();
        Ok(Raw {
            s2: svd.sigma.iter().map(|s| s * s).collect(),
            signal,
            idler,
            unexplained: 0.0,
        })
    }
}

/// Blocked adaptive range finder `A ≈ Q·B` with `Q` orthonormal, stopped
/// once `‖A‖² − ‖B‖²` (the exact squared Frobenius error of the
/// projection) is below `RANGE_TOLERANCE·‖A‖²`. The coefficients of `Q·B`
/// are those of the Gram matrix `B·B†`, obtained with the same Jacobi
/// kernel. Projection can only lower each singular value, and the total
/// shortfall is bounded by the reported residual.
fn randomized(data: &[Complex64], rows: usize, cols: usize, total: f64, opts: &SchmidtOptions) -> Result<Raw> {
    let block = opts.block.max(1);
    let limit = rows.min(cols);
    let a = View::row_major(data, rows, cols);
    let mut rng = SpdcRng::new(opts.seed);
    let mut q: Vec<Complex64> = Vec::new(); // rows × r, column-major
    let mut b: Vec<Complex64> = Vec::new(); // r × cols, row-major
    let mut r = 0usize;
    let mut captured = 0.0;
    let converged = loop {
        let k = block.min(limit - r).max(1);
        let omega: Vec<Complex64> = (0..cols * k)
            .map(|_| Complex64::new(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0))
            .collect();
        let mut y = vec![Complex64::new(0.0, 0.0); rows * k];
        gemm(a, View::col_major(&omega, cols, k), 0.0, &mut y);
        let qi = orthonormalize_block(&q, r, y, rows, k, 1e-12);
        let ki = qi.len() / rows;
        if ki == 0 {
            break total - captured <= RANGE_TOLERANCE * total;
        }
        // B_i = Q_i†·A, stored column-major ki × cols, i.e. row-major cols × ki;
        // transpose into row-major ki × cols rows.
        let qc = conj_copy(&qi);
        let mut bi = vec![Complex64::new(0.0, 0.0); ki * cols];
        gemm(View::col_major(&qc, rows, ki).t(), a, 0.0, &mut bi);
        for j in 0..ki {
            let row: Vec<Complex64> = (0..cols).map(|c| bi[j + c * ki]).collect();
            captured += norm_sqr(&row);
            b.extend_from_slice(&row);
        }
        q.extend_from_slice(&qi);
        r += ki;
        if total - captured <= RANGE_TOLERANCE * total {
            break true;
        }
        if r >= limit {
            break total - captured <= RANGE_TOLERANCE * total;
        }
    };
    if !converged {
        return Err(SpdcError::NumericalFailure(format!(
            "range finder stalled at rank {r} with unexplained weight {:.3e}",
            (total - captured) / total
        )));
    }

    // G = B·B† (r × r); column-major product of B (row-major) and conj(B)ᵀ
    let bc = conj_copy(&b);
    let mut g = vec![Complex64::new(0.0, 0.0); r * r];
    gemm(
        View::row_major(&b, r, cols),
        View::row_major(&bc, r, cols).t(),
        0.0,
        &mut g,
    );
    // Hermitian PSD: singular values are the eigenvalues s², V the eigenvectors.
    let want = opts.modes > 0;
    let svd = jacobi_svd(g, r, r, want, JACOBI_TOL)?;
    let take = opts.modes.min(r);
    let (mut signal, mut idler) = (Vec::new(), Vec::new());
    if let Some(w) = svd.v {
        for k in 0..take {
            let s2 = svd.sigma[k];
            if s2 <= 0.0 {
                break;
            }
            let wk = &w[k * r..(k + 1) * r];
            let mut u = vec![Complex64::new(0.0, 0.0); rows];
            gemm(View::col_major(&q, rows, r), View::col_major(wk, r, 1), 0.0, &mut u);
            // idler row: (1/s)·w_k†·B
            let wkc = conj_copy(wk);
            let mut v = vec![Complex64::new(0.0, 0.0); cols];
            gemm(View::row_major(&wkc, 1, r), View::row_major(&b, r, cols), 0.0, &mut v);
            let inv = 1.0 / s2.sqrt();
            v.iter_mut().for_each(|z| *z *= inv);
            signal.push(u);
            idler.push(v);
        }
    }
    Ok(Raw {
        s2: svd.sigma,
        signal,
        idler,
        unexplained: (total - captured).max(0.0),
    })
}

fn finish(raw: Raw, total: f64, method: Method, modes: usize) -> Result<SchmidtResult> {
    let largest = raw.s2.first().copied().unwrap_or(0.0);
    if !(largest > 0.0) || !largest.is_finite() {
        return Err(SpdcError::NumericalFailure("no nonzero Schmidt coefficient".into()));
    }
    let kept: Vec<f64> = raw
        .s2
        .iter()
        .copied()
        .take_while(|&s| s > RELATIVE_CUTOFF * largest)
        .collect();
    let kept_sum: f64 = kept.iter().sum();
    let dropped: f64 = raw.s2[kept.len()..].iter().sum();
    let residual = ((raw.unexplained + dropped) / total).max(0.0);
    let lambdas = kept.iter().map(|s| s / kept_sum).collect();
    let mut out = SchmidtResult::from_lambdas(lambdas, residual, method);
    let take = modes.min(out.rank);
    out.signal_modes = raw.signal.into_iter().take(take).collect();
    out.idler_modes = raw.idler.into_iter().take(take).collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::FrequencyGrid;
    use linalg::dotc;

    fn grid(n: usize) -> FrequencyGrid {
        FrequencyGrid::new(1.2e15, 1e11, 1.21e15, 1.2e11, n, n).unwrap()
    }

    fn jsa_from(n: usize, f: impl Fn(usize, usize) -> Complex64) -> JsaGrid {
        let amp = (0..n * n).map(|k| f(k / n, k % n)).collect();
        let mut j = JsaGrid::from_parts(grid(n), amp).unwrap();
        j.normalize().unwrap();
        j
    }

    fn gauss(x: f64, c: f64, w: f64) -> f64 {
        (-(x - c).powi(2) / (2.0 * w * w)).exp()
    }

    #[test]
    fn separable_state() {
        let j = jsa_from(40, |a, b| {
            Complex64::new(gauss(a as f64, 20.0, 4.0), 0.3) * gauss(b as f64, 18.0, 6.0)
        });
        let r = schmidt_decompose(&j).unwrap();
        assert_eq!(r.lambdas.len(), 1);
        assert!((r.lambdas[0] - 1.0).abs() < 1e-12);
        assert!((r.schmidt_number - 1.0).abs() < 1e-12);
        assert!((r.purity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_equal_orthogonal_modes() {
        // ψ = u1⊗v1 + u2⊗v2 with disjoint supports
        let j = jsa_from(20, |a, b| match (a < 10, b < 10) {
            (true, true) | (false, false) => Complex64::new(1.0, 0.0),
            _ => Complex64::new(0.0, 0.0),
        });
        let r = schmidt_decompose(&j).unwrap();
        assert_eq!(r.rank, 2);
        assert!((r.lambdas[0] - 0.5).abs() < 1e-12 && (r.lambdas[1] - 0.5).abs() < 1e-12);
        assert!((r.schmidt_number - 2.0).abs() < 1e-12);
        assert!((r.purity - 0.5).abs() < 1e-12);
    }

    #[test]
    fn arithmetic_examples() {
        let r = SchmidtResult::from_lambdas(vec![0.9, 0.1], 0.0, Method::Exact);
        assert!((schmidt_number(&r) - 1.0 / 0.82).abs() < 1e-14);
        assert!((purity(&r) - 0.82).abs() < 1e-15);
        assert!((r.schmidt_number * r.purity - 1.0).abs() < 1e-15);
        let one = SchmidtResult::from_lambdas(vec![1.0], 0.0, Method::Exact);
        assert_eq!(schmidt_number(&one), 1.0);
    }

    #[test]
    fn g2_bridge() {
        assert_eq!(g2_unheralded_from_k(1.0), 2.0);
        assert!(g2_unheralded_from_k(1e12) - 1.0 < 1e-11);
        let k = k_from_g2(1.962).unwrap();
        assert!((k - 1.0395).abs() < 1e-4);
        assert!((1.0 / k - 0.962).abs() < 1e-12);
        for &k in &[1.0, 1.26, 3.0, 17.5] {
            assert!((k_from_g2(g2_unheralded_from_k(k)).unwrap() / k - 1.0).abs() < 1e-14);
        }
        for &bad in &[1.0, 0.5, 2.01, f64::NAN] {
            assert!(matches!(k_from_g2(bad), Err(SpdcError::DomainError { .. })));
        }
    }

    /// A correlated amplitude with a long, smoothly decaying spectrum.
    fn correlated(n: usize, rows_off: f64) -> impl Fn(usize, usize) -> Complex64 {
        let c = n as f64 / 2.0;
        move |a, b| {
            let (x, y) = (a as f64 - c, b as f64 - c + rows_off);
            let env = (-(x + y).powi(2) / (2.0 * (0.08 * n as f64).powi(2))).exp();
            let pm = (-(x - y).powi(2) / (2.0 * (0.3 * n as f64).powi(2))).exp();
            Complex64::from_polar(env * pm, 0.01 * x * y / n as f64)
        }
    }

    #[test]
    fn methods_agree() {
        let n = 120;
        let j = jsa_from(n, correlated(n, 0.0));
        let exact = schmidt_decompose_with(
            &j,
            &SchmidtOptions {
                method: Method::Exact,
                ..Default::default()
            },
        )
        .unwrap();
        let rand = schmidt_decompose_with(
            &j,
            &SchmidtOptions {
                method: Method::Randomized,
                block: 16,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(exact.residual < 1e-9 && rand.residual < 1e-9);
        assert!((exact.schmidt_number / rand.schmidt_number - 1.0).abs() < 1e-9);
        for (a, b) in exact.lambdas.iter().zip(&rand.lambdas) {
            assert!((a - b).abs() < 1e-10, "{a} {b}");
        }
    }

    #[test]
    fn rectangular_both_orientations() {
        let f = correlated(60, 3.0);
        let tall: Vec<Complex64> = (0..90 * 50).map(|k| f(k / 50, k % 50)).collect();
        let wide: Vec<Complex64> = (0..50 * 90).map(|k| f(k % 90, k / 90)).collect();
        let opts = SchmidtOptions {
            method: Method::Exact,
            modes: 3,
            ..Default::default()
        };
        let t = decompose_matrix(&tall, 90, 50, &opts).unwrap();
        // the transposed matrix has the same coefficients
        let w = decompose_matrix(&wide, 50, 90, &opts).unwrap();
        for (a, b) in t.lambdas.iter().zip(&w.lambdas) {
            assert!((a - b).abs() < 1e-12);
        }
        let r = decompose_matrix(
            &tall,
            90,
            50,
            &SchmidtOptions {
                method: Method::Randomized,
                block: 8,
                ..opts
            },
        )
        .unwrap();
        for (a, b) in t.lambdas.iter().zip(&r.lambdas) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    fn check_modes(r: &SchmidtResult, data: &[Complex64], rows: usize, cols: usize) {
        let m = r.signal_modes.len();
        assert!(m > 0 && r.idler_modes.len() == m);
        for p in 0..m {
            for q in 0..m {
                let e = if p == q { 1.0 } else { 0.0 };
                assert!((dotc(&r.signal_modes[p], &r.signal_modes[q]) - e).norm() < 1e-8);
                assert!((dotc(&r.idler_modes[p], &r.idler_modes[q]) - e).norm() < 1e-8);
            }
        }
        // u_k† A conj(v_k)... i.e. Σ conj(u)·A·conj(v) = s_k, real positive
        let total = norm_sqr(data);
        for k in 0..m {
            let mut proj = Complex64::new(0.0, 0.0);
            for i in 0..rows {
                for j in 0..cols {
                    proj += r.signal_modes[k][i].conj() * data[i * cols + j] * r.idler_modes[k][j].conj();
                }
            }
            let s2 = r.lambdas[k] * total * (1.0 - r.residual);
            assert!(
                (proj.re - s2.sqrt()).abs() < 1e-8 * total.sqrt(),
                "{proj} vs {}",
                s2.sqrt()
            );
            assert!(proj.im.abs() < 1e-8 * total.sqrt());
        }
    }

    #[test]
    fn mode_functions_both_paths() {
        let f = correlated(70, 2.0);
        let data: Vec<Complex64> = (0..70 * 64).map(|k| f(k / 64, k % 64)).collect();
        for method in [Method::Exact, Method::Randomized] {
            let r = decompose_matrix(
                &data,
                70,
                64,
                &SchmidtOptions {
                    method,
                    modes: 4,
                    block: 8,
                    ..Default::default()
                },
            )
            .unwrap();
            check_modes(&r, &data, 70, 64);
        }
        let wide: Vec<Complex64> = (0..64 * 70).map(|k| f(k % 70, k / 70)).collect();
        let r = decompose_matrix(
            &wide,
            64,
            70,
            &SchmidtOptions {
                method: Method::Exact,
                modes: 4,
                ..Default::default()
            },
        )
        .unwrap();
        check_modes(&r, &wide, 64, 70);
    }

    #[test]
    fn grid_weighted_modes_are_orthonormal() {
        let n = 48;
        let j = jsa_from(n, correlated(n, 0.0));
        let r = schmidt_decompose_with(
            &j,
            &SchmidtOptions {
                modes: 3,
                ..Default::default()
            },
        )
        .unwrap();
        let ds = j.grid.step(SpectralAxis::Signal);
        let di = j.grid.step(SpectralAxis::Idler);
        for k in 0..3 {
            assert!((norm_sqr(&r.signal_modes[k]) * ds - 1.0).abs() < 1e-8);
            assert!((norm_sqr(&r.idler_modes[k]) * di - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn deterministic() {
        let n = 300;
        let j = jsa_from(n, correlated(n, 0.0));
        let a = schmidt_decompose(&j).unwrap();
        let b = schmidt_decompose(&j).unwrap();
        assert_eq!(a.method, Method::Randomized);
        assert_eq!(a.lambdas, b.lambdas);
    }

    #[test]
    fn rejects_bad_input() {
        let opts = SchmidtOptions::default();
        let zeros = vec![Complex64::new(0.0, 0.0); 16];
        assert!(matches!(
            decompose_matrix(&zeros, 4, 4, &opts),
            Err(SpdcError::EmptyAmplitude)
        ));
        let mut nan = vec![Complex64::new(1.0, 0.0); 16];
        nan[3].re = f64::NAN;
        assert!(matches!(
            decompose_matrix(&nan, 4, 4, &opts),
            Err(SpdcError::NumericalFailure(_))
        ));
        assert!(decompose_matrix(&nan, 4, 5, &opts).is_err());
    }
}
