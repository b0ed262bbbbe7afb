use escape_core::cover::besicovitch_cover;
use escape_core::escape::{normalize_rate_sequence, RateSequence};
use escape_core::ifs::similarity_dimension;
use escape_core::strip::build_phi_ln;
use escape_core::{Complex64, Huge, Tiny};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dimension_solves_moran(b in prop::collection::vec(0.01f64..0.95, 2..8)) {
        let s = similarity_dimension(&b).unwrap();
        let sum: f64 = b.iter().map(|x| x.powf(s)).sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn tiny_products_match_floats(a in 1e-150f64..1.0, b in 1e-150f64..1.0) {
        let p = Tiny::from_f64(a).unwrap().mul(Tiny::from_f64(b).unwrap()).to_f64();
        prop_assert!((p - a * b).abs() <= 1e-13 * a * b);
        prop_assert_eq!(Tiny::from_f64(a).unwrap() <= Tiny::from_f64(b).unwrap(), a <= b);
    }

    #[test]
    // Below about -2, exp(exp(x)) = 1 + tiny and f64 itself loses the digits.
    fn huge_exp_ln_round_trip(x in -2.0f64..700.0) {
        let h = Huge::from_f64(x).exp().exp();
        prop_assert!((h.ln().ln().to_f64() - x).abs() <= 1e-12 * x.abs().max(1.0));
    }

    #[test]
    fn normalized_rates_meet_all_constraints(
        steps in prop::collection::vec(0.0f64..3.0, 80),
        big_n in 2usize..40,
    ) {
        // Nondecreasing with occasional flats; the tail still grows.
        let mut acc = 0.5;
        let p: Vec<f64> = steps.iter().enumerate().map(|(i, s)| { acc += s + 0.01 * i as f64; acc }).collect();
        let q = normalize_rate_sequence(&RateSequence::tabulated(p.clone()), big_n).unwrap();
        for n in 1..=big_n {
            let qn = q.get(n).unwrap();
            prop_assert!(qn <= p[n - 1] + 1e-12);
            prop_assert!(qn <= n as f64 + 1e-12);
            if n >= 2 {
                prop_assert!(qn - q.get(n - 1).unwrap() >= 6.0 / (n * n) as f64 - 1e-12);
            }
        }
    }

    #[test]
    fn besicovitch_covers_every_center(
        pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.01f64..0.2), 1..150),
    ) {
        let centers: Vec<Complex64> = pts.iter().map(|&(x, y, _)| Complex64::new(x, y)).collect();
        let radii: Vec<f64> = pts.iter().map(|p| p.2).collect();
        let sel = besicovitch_cover(&centers, &radii).unwrap();
        for (i, &x) in centers.iter().enumerate() {
            prop_assert!(sel.iter().any(|&j| j == i || (x - centers[j]).norm() < radii[j]));
        }
    }

    #[test]
    fn strip_lemma_in_log_space(a0 in 0.3f64..2.0, a1 in 0.0f64..0.5, b0 in 0.2f64..0.9, b1 in 1.0f64..1.6) {
        let alpha = move |x: f64| a0 / (1.0 + a1 * x);
        let prof = build_phi_ln(alpha, move |l| b0.ln() + b1 * l, 0.0, 20.0).unwrap();
        for i in 0..200 {
            let x = 10.0 * i as f64 / 200.0;
            let lhs = prof.phi_tiny(x + alpha(x)).ln();
            let rhs = b0.ln() + b1 * prof.phi_tiny(x).ln();
            prop_assert!(lhs <= rhs + 1e-12f64.ln_1p(), "x = {}: {} > {}", x, lhs, rhs);
        }
    }
}
