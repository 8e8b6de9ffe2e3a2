//! Dense complex kernels for the decomposition: strided matrix product,
//! one-sided Jacobi SVD and block Gram-Schmidt.
//!
//! Column-major storage throughout unless a function says otherwise.

use num_complex::Complex64;

use crate::error::{Result, SpdcError};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Strided read-only matrix view.
#[derive(Clone, Copy)]
pub(crate) struct View<'a> {
    pub data: &'a [Complex64],
    pub rows: usize,
    pub cols: usize,
    pub rs: usize,
    pub cs: usize,
}

impl<'a> View<'a> {
    pub fn col_major(data: &'a [Complex64], rows: usize, cols: usize) -> Self {
        View {
            data,
            rows,
            cols,
            rs: 1,
            cs: rows,
        }
    }

    pub fn row_major(data: &'a [Complex64], rows: usize, cols: usize) -> Self {
        View {
            data,
            rows,
            cols,
            rs: cols,
            cs: 1,
        }
    }

    /// Plain transpose (no conjugation).
    pub fn t(self) -> Self {
        View {
            data: self.data,
            rows: self.cols,
            cols: self.rows,
            rs: self.cs,
            cs: self.rs,
        }
    }

    fn span(&self) -> usize {
        if self.rows == 0 || self.cols == 0 {
            0
        } else {
            (self.rows - 1) * self.rs + (self.cols - 1) * self.cs + 1
        }
    }
}

/// `C ← A·B + beta·C` with `C` column-major `a.rows × b.cols`.
pub(crate) fn gemm(a: View, b: View, beta: f64, c: &mut [Complex64]) {
    assert_eq!(a.cols, b.rows, "inner dimensions");
    let (m, k, n) = (a.rows, a.cols, b.cols);
    assert!(a.span() <= a.data.len() && b.span() <= b.data.len());
    assert!(c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c[..m * n].iter_mut().for_each(|z| *z *= beta);
        return;
    }
    // SAFETY: extents checked above; Complex64 is repr(C) { re, im }, the
    // same layout as [f64; 2].
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.data.as_ptr() as *const [f64; 2],
            a.rs as isize,
            a.cs as isize,
            b.data.as_ptr() as *const [f64; 2],
            b.rs as isize,
            b.cs as isize,
            [beta, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
}

pub(crate) fn conj_copy(x: &[Complex64]) -> Vec<Complex64> {
    x.iter().map(|z| z.conj()).collect()
}

/// `Σ conj(x)·y`.
#[inline]
pub(crate) fn dotc(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        re += a.re * b.re + a.im * b.im;
        im += a.re * b.im - a.im * b.re;
    }
    Complex64::new(re, im)
}

#[inline]
pub(crate) fn norm_sqr(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.re * z.re + z.im * z.im).sum()
}

/// `y ← y − alpha·x`.
#[inline]
fn axpy_neg(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (a, b) in x.iter().zip(y.iter_mut()) {
        *b -= alpha * a;
    }
}

/// Result of a one-sided Jacobi run on an `m × n` matrix `A`:
/// `A·V = U·diag(sigma)`, columns sorted by descending `sigma`.
pub(crate) struct JacobiSvd {
    pub sigma: Vec<f64>,
    /// `m × n` column-major; columns with zero `sigma` are left zero.
    pub u: Vec<Complex64>,
    /// `n × n` column-major, present when requested.
    pub v: Option<Vec<Complex64>>,
}

pub(crate) const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 60;

/// One-sided (Hestenes) Jacobi. Pairs are visited in cyclic row order; a
/// pair rotates while `|a_p†a_q| > tol·‖a_p‖‖a_q‖`. Columns whose squared
/// norm has fallen below `eps²·‖A‖²_F` are skipped: they cannot move any
/// singular value by a representable amount.
pub(crate) fn jacobi_svd(mut a: Vec<Complex64>, m: usize, n: usize, want_v: bool, tol: f64) -> Result<JacobiSvd> {
    assert_eq!(a.len(), m * n);
    let mut v = want_v.then(|| {
        let mut v = vec![ZERO; n * n];
        for k in 0..n {
            v[k * n + k] = Complex64::new(1.0, 0.0);
        }
        v
    });
    let mut norms: Vec<f64> = a.chunks(m.max(1)).take(n).map(norm_sqr).collect();
    let total: f64 = norms.iter().sum();
    if !total.is_finite() {
        return Err(SpdcError::NumericalFailure("non-finite matrix entries".into()));
    }
    let floor = total * f64::EPSILON * f64::EPSILON;

    let mut converged = n < 2;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        sort_columns(&mut a, m, &mut norms, v.as_mut().map(|v| (v, n)));
        for p in 0..n - 1 {
            for q in p + 1..n {
                let (alpha, beta) = (norms[p], norms[q]);
                if alpha <= floor || beta <= floor {
                    continue;
                }
                let (head, tail) = a.split_at_mut(q * m);
                let ap = &mut head[p * m..(p + 1) * m];
                let aq = &mut tail[..m];
                let gamma = dotc(ap, aq);
                let g = gamma.norm();
                if g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(ap, aq, c, s, phase.conj());
                // exact 2×2 update of the squared norms would drift; recompute
                norms[p] = norm_sqr(ap);
                norms[q] = norm_sqr(aq);
                if let Some(v) = v.as_mut() {
                    let (vh, vt) = v.split_at_mut(q * n);
                    rotate(&mut vh[p * n..(p + 1) * n], &mut vt[..n], c, s, phase.conj());
                }
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(SpdcError::NumericalFailure(format!(
            "one-sided Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps"
        )));
    }

    let sigma: Vec<f64> = norms.iter().map(|x| x.sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal values keep first-occurrence order
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap());

    let mut u = vec![ZERO; m * n];
    let mut sorted = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let s = sigma[src];
        sorted.push(s);
        if s > 0.0 {
            for (o, x) in u[dst * m..(dst + 1) * m].iter_mut().zip(&a[src * m..(src + 1) * m]) {
                *o = x / s;
            }
        }
    }
    let v = v.map(|v| {
        let mut out = vec![ZERO; n * n];
        for (dst, &src) in order.iter().enumerate() {
            out[dst * n..(dst + 1) * n].copy_from_slice(&v[src * n..(src + 1) * n]);
        }
        out
    });
    Ok(JacobiSvd { sigma: sorted, u, v })
}

/// Reorders columns by descending norm (stable). Done before every sweep, it
/// speeds convergence on strongly graded matrices.
fn sort_columns(a: &mut [Complex64], m: usize, norms: &mut [f64], v: Option<(&mut Vec<Complex64>, usize)>) {
    let n = norms.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());
    if order.iter().enumerate().all(|(k, &o)| k == o) {
        return;
    }
    let permute = |x: &mut [Complex64], len: usize| {
        let old = x.to_vec();
        for (dst, &src) in order.iter().enumerate() {
            x[dst * len..(dst + 1) * len].copy_from_slice(&old[src * len..(src + 1) * len]);
        }
    };
    permute(a, m);
    if let Some((v, len)) = v {
        permute(v, len);
    }
    let old = norms.to_vec();
    for (dst, &src) in order.iter().enumerate() {
        norms[dst] = old[src];
    }
}

/// `x ← c·x − s·w·y`, `y ← s·x + c·w·y` with `|w| = 1`.
#[inline]
fn rotate(x: &mut [Complex64], y: &mut [Complex64], c: f64, s: f64, w: Complex64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let wb = w * *b;
        let na = *a * c - wb * s;
        let nb = *a * s + wb * c;
        *a = na;
        *b = nb;
    }
}

/// Orthonormalizes the `k` columns of `y` (`m × k`, column-major) against
/// the `r` orthonormal columns of `q` and against each other (two passes of
/// classical Gram-Schmidt, blocked against `q`). Columns that lose all but a
/// `drop_tol` fraction of their norm are discarded. Returns the surviving
/// columns, packed.
pub(crate) fn orthonormalize_block(
    q: &[Complex64],
    r: usize,
    mut y: Vec<Complex64>,
    m: usize,
    k: usize,
    drop_tol: f64,
) -> Vec<Complex64> {
    let before: Vec<f64> = y.chunks(m).map(norm_sqr).collect();
    for _pass in 0..2 {
        if r > 0 {
            // h = Q†Y = conj(Qᵀ·conj(Y))
            let yc = conj_copy(&y);
            let mut h = vec![ZERO; r * k];
            gemm(View::col_major(q, m, r).t(), View::col_major(&yc, m, k), 0.0, &mut h);
            h.iter_mut().for_each(|z| *z = z.conj());
            // Y ← Y − Q·h
            let neg: Vec<Complex64> = h.iter().map(|z| -z).collect();
            gemm(View::col_major(q, m, r), View::col_major(&neg, r, k), 1.0, &mut y);
        }
    }
    let mut out: Vec<Complex64> = Vec::with_capacity(m * k);
    for j in 0..k {
        let mut col = y[j * m..(j + 1) * m].to_vec();
        for _pass in 0..2 {
            for prev in out.chunks(m) {
                let h = dotc(prev, &col);
                axpy_neg(h, prev, &mut col);
            }
        }
        let nn = norm_sqr(&col);
        if nn > drop_tol * drop_tol * before[j] && nn > 0.0 {
            let inv = 1.0 / nn.sqrt();
            col.iter_mut().for_each(|z| *z *= inv);
            out.extend_from_slice(&col);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SpdcRng;

    fn random(m: usize, n: usize, seed: u64) -> Vec<Complex64> {
        let mut r = SpdcRng::new(seed);
        (0..m * n).map(|_| Complex64::new(r.normal(), r.normal())).collect()
    }

    fn naive(a: View, b: View) -> Vec<Complex64> {
        let mut c = vec![ZERO; a.rows * b.cols];
        for i in 0..a.rows {
            for j in 0..b.cols {
                let mut s = ZERO;
                for l in 0..a.cols {
                    s += a.data[i * a.rs + l * a.cs] * b.data[l * b.rs + j * b.cs];
                }
                c[i + j * a.rows] = s;
            }
        }
        c
    }

    #[test]
    fn gemm_matches_naive_all_layouts() {
        let a = random(7, 5, 1);
        let b = random(5, 4, 2);
        for (va, vb) in [
            (View::col_major(&a, 7, 5), View::col_major(&b, 5, 4)),
            (View::row_major(&a, 7, 5), View::row_major(&b, 5, 4)),
            (View::col_major(&a, 5, 7).t(), View::row_major(&b, 4, 5).t()),
        ] {
            let mut c = vec![ZERO; 28];
            gemm(va, vb, 0.0, &mut c);
            let r = naive(va, vb);
            for (x, y) in c.iter().zip(&r) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn jacobi_reconstructs() {
        let (m, n) = (9, 6);
        let a = random(m, n, 3);
        let svd = jacobi_svd(a.clone(), m, n, true, JACOBI_TOL).unwrap();
        let v = svd.v.unwrap();
        // A·V == U·Σ
        let mut av = vec![ZERO; m * n];
        gemm(View::col_major(&a, m, n), View::col_major(&v, n, n), 0.0, &mut av);
        for j in 0..n {
            for i in 0..m {
                let us = svd.u[i + j * m] * svd.sigma[j];
                assert!((av[i + j * m] - us).norm() < 1e-12);
            }
        }
        // U orthonormal, sigma descending
        for p in 0..n {
            for q in 0..n {
                let d = dotc(&svd.u[p * m..(p + 1) * m], &svd.u[q * m..(q + 1) * m]);
                let e = if p == q { 1.0 } else { 0.0 };
                assert!((d - e).norm() < 1e-12);
            }
        }
        assert!(svd.sigma.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn jacobi_rank_deficient() {
        // outer product: one nonzero singular value
        let x = random(8, 1, 4);
        let y = random(1, 5, 5);
        let a: Vec<Complex64> = (0..5)
            .flat_map(|j| x.iter().map(|xi| xi * y[j]).collect::<Vec<_>>())
            .collect();
        let svd = jacobi_svd(a.clone(), 8, 5, false, JACOBI_TOL).unwrap();
        let fro = norm_sqr(&a).sqrt();
        assert!((svd.sigma[0] - fro).abs() < 1e-12 * fro);
        assert!(svd.sigma[1..].iter().all(|&s| s < 1e-12 * fro));
    }

    #[test]
    fn orthonormalize_projects_out_existing_basis() {
        let m = 40;
        let q = orthonormalize_block(&[], 0, random(m, 6, 6), m, 6, 1e-12);
        assert_eq!(q.len(), 6 * m);
        // second block contains a copy of a first-block column: dropped
        let mut y = random(m, 3, 7);
        y[..m].copy_from_slice(&q[..m]);
        let q2 = orthonormalize_block(&q, 6, y, m, 3, 1e-10);
        assert_eq!(q2.len(), 2 * m);
        for a in q.chunks(m) {
            for b in q2.chunks(m) {
                assert!(dotc(a, b).norm() < 1e-13);
            }
        }
        for b in q2.chunks(m) {
            assert!((norm_sqr(b) - 1.0).abs() < 1e-13);
        }
    }
}
