mod common;

use cavity_spdc::schmidt::{decompose_matrix, schmidt_decompose, Method, SchmidtOptions};
use cavity_spdc::spectral::PulseShape;
use cavity_spdc::sweep::{purity_sweep, scenario_jsa};
use cavity_spdc::Scenario;

#[test]
fn sweep_rows_agree_with_the_eigen_oracle_on_a_coarse_grid() {
    let s = Scenario::reference().with_points(64, true).unwrap();
    for (tau, filtered) in [(0.3e-9, true), (1.1e-9, false)] {
        let row = purity_sweep(&s, &[tau], PulseShape::Gaussian, filtered).unwrap().rows[0];
        let jsa = scenario_jsa(&s, PulseShape::Gaussian, tau, filtered).unwrap();
        let p = common::oracle_purity(&jsa.amplitude, 64, 64);
        assert!((row.purity / p - 1.0).abs() < 0.01, "{tau}: {} vs {p}", row.purity);
    }
}

#[test]
fn square_pulses_agree_with_the_oracle() {
    let s = Scenario::reference().with_points(48, true).unwrap();
    let jsa = scenario_jsa(&s, PulseShape::Square, 0.8e-9, false).unwrap();
    let got = schmidt_decompose(&jsa).unwrap();
    let want = common::oracle_lambdas(&jsa.amplitude, 48, 48);
    assert!(common::max_abs_diff(&got.lambdas, &want) < 1e-10);
}

#[test]
fn randomized_path_matches_the_oracle_on_low_rank_input() {
    // rank-12 product of two random factors, 300 × 80
    let (rows, cols, r) = (300, 80, 12);
    let a = common::lcg_matrix(21, rows * r);
    let b = common::lcg_matrix(22, r * cols);
    let mut m = vec![num_complex::Complex64::new(0.0, 0.0); rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            for k in 0..r {
                m[i * cols + j] += a[i * r + k] * b[k * cols + j];
            }
        }
    }
    let opts = SchmidtOptions {
        method: Method::Randomized,
        ..SchmidtOptions::default()
    };
    let got = decompose_matrix(&m, rows, cols, &opts).unwrap();
    // the oracle works on the short side: ρ = ψ†ψ has the same spectrum
    let mut t = vec![num_complex::Complex64::new(0.0, 0.0); rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            t[j * rows + i] = m[i * cols + j];
        }
    }
    let want = common::oracle_lambdas(&t, cols, rows);
    assert_eq!(got.rank, r);
    assert!(common::max_abs_diff(&got.lambdas, &want) < 1e-10);
}
