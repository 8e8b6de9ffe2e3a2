//! Brute-force Schmidt oracle: eigenvalues of the reduced density matrix
//! `ρ = ψψ†`, computed from its real symmetric embedding
//! `[[Re ρ, −Im ρ], [Im ρ, Re ρ]]` by cyclic two-sided Jacobi rotations.
//! Shares no code with the library's decomposition.

#![allow(dead_code)]

use num_complex::Complex64;

/// Eigenvalues of a real symmetric `n × n` matrix (row-major), descending.
pub fn symmetric_eigenvalues(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        s
    };
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>();
    for _sweep in 0..100 {
        if off(&a) <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// Normalized Schmidt coefficients of a row-major `rows × cols` amplitude,
/// descending, `rows` of them (zeros included).
pub fn oracle_lambdas(psi: &[Complex64], rows: usize, cols: usize) -> Vec<f64> {
    let mut rho = vec![Complex64::new(0.0, 0.0); rows * rows];
    for i in 0..rows {
        for j in 0..rows {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..cols {
                s += psi[i * cols + k] * psi[j * cols + k].conj();
            }
            rho[i * rows + j] = s;
        }
    }
    let trace: f64 = (0..rows).map(|i| rho[i * rows + i].re).sum();
    let m = 2 * rows;
    let mut e = vec![0.0; m * m];
    for i in 0..rows {
        for j in 0..rows {
            let z = rho[i * rows + j];
            e[i * m + j] = z.re;
            e[(i + rows) * m + (j + rows)] = z.re;
            e[i * m + (j + rows)] = -z.im;
            e[(i + rows) * m + j] = z.im;
        }
    }
    // every eigenvalue of ρ appears twice in the embedding
    symmetric_eigenvalues(e, m)
        .into_iter()
        .step_by(2)
        .map(|v| v.max(0.0) / trace)
        .collect()
}

pub fn oracle_purity(psi: &[Complex64], rows: usize, cols: usize) -> f64 {
    oracle_lambdas(psi, rows, cols).iter().map(|l| l * l).sum()
}

/// Largest difference between two descending coefficient lists, the shorter
/// padded with zeros.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    (0..a.len().max(b.len()))
        .map(|k| (a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max)
}

/// Deterministic complex test matrix from a 64-bit LCG (Knuth's MMIX
/// constants), entries uniform in [-1, 1]².
pub fn lcg_matrix(seed: u64, len: usize) -> Vec<Complex64> {
    let mut x = seed;
    let mut next = || {
        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (x >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    (0..len).map(|_| Complex64::new(next(), next())).collect()
}

#[test]
fn oracle_knows_diagonal_matrices() {
    let ev = symmetric_eigenvalues(vec![3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0], 3);
    assert_eq!(ev, vec![3.0, 2.0, 1.0]);
    let ev = symmetric_eigenvalues(vec![2.0, 1.0, 1.0, 2.0], 2);
    assert!((ev[0] - 3.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
}
