use num_complex::Complex64;
use proptest::prelude::*;

use cavity_spdc::dispersion::Field;
use cavity_spdc::io::num;
use cavity_spdc::schmidt::{decompose_matrix, g2_unheralded_from_k, k_from_g2, Method, SchmidtOptions};
use cavity_spdc::spectral::cavity::{airy_from_phase, finesse_from_reflectivities};
use cavity_spdc::spectral::{CavitySpec, FilterSpec, LineShape, SpectralAxis};
use cavity_spdc::sweep::{escape_efficiency, tau_range};
use cavity_spdc::temporal::{cross_correlation_model, hom_model};

fn matrix() -> impl Strategy<Value = (usize, usize, Vec<Complex64>)> {
    (1usize..10, 1usize..10).prop_flat_map(|(r, c)| {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), r * c)
            .prop_map(move |v| (r, c, v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()))
    })
}

fn exact() -> SchmidtOptions {
    SchmidtOptions {
        method: Method::Exact,
        ..SchmidtOptions::default()
    }
}

fn nonzero(v: &[Complex64]) -> bool {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-6
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(std::env::var("PROPTEST_CASES").ok().and_then(|v| v.parse().ok()).unwrap_or(128)))]

    #[test]
    fn schmidt_coefficients_form_a_distribution((r, c, m) in matrix()) {
        prop_assume!(nonzero(&m));
        let res = decompose_matrix(&m, r, c, &exact()).unwrap();
        let sum: f64 = res.lambdas.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(res.lambdas.iter().all(|&l| l > 0.0));
        prop_assert!(res.lambdas.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(res.rank <= r.min(c));
        prop_assert!(res.schmidt_number >= 1.0 - 1e-12);
        prop_assert!(res.schmidt_number <= res.rank as f64 + 1e-9);
        prop_assert!((res.schmidt_number * res.purity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn local_phases_and_scale_leave_coefficients_unchanged(
        (r, c, m) in matrix(),
        seed in any::<u64>(),
        scale in 1e-6f64..1e6,
    ) {
        prop_assume!(nonzero(&m));
        let base = decompose_matrix(&m, r, c, &exact()).unwrap();
        let phase = |k: usize| {
            let x = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add((k as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9));
            Complex64::from_polar(1.0, (x >> 11) as f64 / (1u64 << 53) as f64 * std::f64::consts::TAU)
        };
        let turned: Vec<Complex64> = m
            .iter()
            .enumerate()
            .map(|(k, z)| z * phase(k / c) * phase(1000 + k % c) * scale)
            .collect();
        let other = decompose_matrix(&turned, r, c, &exact()).unwrap();
        prop_assert_eq!(base.rank, other.rank);
        for (a, b) in base.lambdas.iter().zip(&other.lambdas) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn transpose_has_the_same_spectrum((r, c, m) in matrix()) {
        prop_assume!(nonzero(&m));
        let mut t = vec![Complex64::new(0.0, 0.0); r * c];
        for i in 0..r {
            for j in 0..c {
                t[j * r + i] = m[i * c + j];
            }
        }
        let a = decompose_matrix(&m, r, c, &exact()).unwrap();
        let b = decompose_matrix(&t, c, r, &exact()).unwrap();
        for (x, y) in a.lambdas.iter().zip(&b.lambdas) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn g2_and_k_are_inverse(k in 1.0f64..1e4) {
        let g2 = g2_unheralded_from_k(k);
        prop_assert!(g2 > 1.0 && g2 <= 2.0);
        // g2 − 1 = 1/K cancels about log10(K) digits
        prop_assert!((k_from_g2(g2).unwrap() / k - 1.0).abs() <= 4.0 * f64::EPSILON * (1.0 + k));
    }

    #[test]
    fn g2_outside_its_domain_is_rejected(g2 in prop_oneof![-10.0f64..=1.0, 2.0f64 + 1e-9..10.0]) {
        prop_assert!(k_from_g2(g2).is_err());
    }

    #[test]
    fn hom_dip_stays_between_floor_and_baseline(
        v in 0.0f64..=1.0,
        width in 1e-12f64..1e-8,
        baseline in 0.0f64..1e6,
        dt in -1e-7f64..1e-7,
    ) {
        let y = hom_model(v, width, baseline, dt);
        prop_assert!(y >= baseline * (1.0 - v) - 1e-9 * baseline.max(1.0));
        prop_assert!(y <= baseline * (1.0 + 1e-15));
        prop_assert!((hom_model(v, width, baseline, 0.0) - baseline * (1.0 - v)).abs() <= 1e-12 * baseline.max(1.0));
        prop_assert!((hom_model(v, width, baseline, -dt) - y).abs() <= 1e-12 * baseline.max(1.0));
    }

    #[test]
    fn cross_correlation_is_bounded_by_baseline_and_peak(
        ds in 1e6f64..1e9,
        di in 1e6f64..1e9,
        amp in 0.0f64..1e6,
        base in 0.0f64..1e3,
        t in -1e-7f64..1e-7,
    ) {
        let y = cross_correlation_model(ds, di, amp, base, 0.0, t);
        prop_assert!(y >= base && y <= base + amp + 1e-9);
    }

    #[test]
    fn airy_weight_is_bounded(f in 0.1f64..1e4, phase in -100.0f64..100.0) {
        let a = airy_from_phase(f, phase);
        let floor = 1.0 / (1.0 + (2.0 * f / std::f64::consts::PI).powi(2));
        prop_assert!(a <= 1.0 && a >= floor * (1.0 - 1e-12));
    }

    #[test]
    fn finesse_grows_with_reflectivity(r1 in 0.5f64..0.999, r2 in 0.5f64..0.99, dr in 1e-4f64..5e-3) {
        let lo = finesse_from_reflectivities(r1, r2, 0.1, 4.2e-3).unwrap();
        let hi = finesse_from_reflectivities(r1, (r2 + dr).min(0.9999), 0.1, 4.2e-3).unwrap();
        prop_assert!(hi > lo);
    }

    #[test]
    fn escape_efficiency_is_monotone(
        r1 in 0.9f64..0.9999,
        r2 in 0.9f64..0.999,
        loss in 0.0f64..2.0,
        dr in 1e-5f64..1e-3,
        dl in 1e-3f64..1.0,
    ) {
        let cav = |r1: f64, loss: f64| {
            let mut c = CavitySpec::reference_device();
            c.signal.r1 = r1;
            c.signal.r2 = r2;
            c.loss_per_m = loss;
            c
        };
        let e = escape_efficiency(&cav(r1, loss), 4.2e-3, Field::Signal).unwrap();
        let e_r1 = escape_efficiency(&cav((r1 + dr).min(0.99999), loss), 4.2e-3, Field::Signal).unwrap();
        let e_loss = escape_efficiency(&cav(r1, loss + dl), 4.2e-3, Field::Signal).unwrap();
        prop_assert!((0.0..=1.0).contains(&e));
        prop_assert!(e_r1 > e);
        prop_assert!(e_loss < e);
    }

    #[test]
    fn filter_transmission_is_a_fraction(bw in 1e8f64..1e11, det in -1e12f64..1e12, airy in any::<bool>()) {
        let f = FilterSpec {
            center: 1.2e15,
            bandwidth_hz: bw,
            shape: if airy { LineShape::Airy { fsr_hz: 50.0 * bw } } else { LineShape::Lorentzian },
            axis: SpectralAxis::Idler,
        };
        let t = f.intensity_transmission(1.2e15 + det);
        prop_assert!((0.0..=1.0 + 1e-15).contains(&t));
        prop_assert!((f.amplitude_transmission(1.2e15) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tau_range_is_increasing_and_inclusive(start in 0.05f64..1.0, n in 0usize..30, step in 0.01f64..0.5) {
        let stop = start + n as f64 * step;
        let t = tau_range(start * 1e-9, stop * 1e-9, step * 1e-9).unwrap();
        prop_assert_eq!(t.len(), n + 1);
        prop_assert!(t.windows(2).all(|w| w[1] > w[0]));
        prop_assert!((t[n] - stop * 1e-9).abs() < 1e-18);
    }

    #[test]
    fn csv_numbers_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let back: f64 = num(x).parse().unwrap();
        prop_assert!(back == x);
    }
}
