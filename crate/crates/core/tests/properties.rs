//! Property tests for the structural invariants of each module.

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use profilium::asymptotics::{
    c1_saddle_terms, class_sum_by_classes, class_sum_direct, closed_form_saddle, eval_H, eval_h, solve_saddle,
    thresholds,
};
use profilium::genfun::{build_joint_gfs, build_single_gfs, joint_class_probs, single_class_probs};
use profilium::oracle::enumerate_class_table;
use profilium::words::{
    correlation_at_one, correlation_poly, maximal_overlap, overlap_lengths, pro_f64, ModelParams, Source, Word,
};

fn word(max_k: usize) -> impl Strategy<Value = Word> {
    (1..=max_k).prop_flat_map(|k| (0..(1u64 << k)).prop_map(move |c| Word::from_code(c, k).unwrap()))
}

fn distinct_pair(max_k: usize) -> impl Strategy<Value = (Word, Word)> {
    (2..=max_k)
        .prop_flat_map(|k| (0..(1u64 << k), 0..(1u64 << k)).prop_map(move |(a, b)| (k, a, b)))
        .prop_filter("distinct", |(_, a, b)| a != b)
        .prop_map(|(k, a, b)| (Word::from_code(a, k).unwrap(), Word::from_code(b, k).unwrap()))
}

fn params_at(p: f64, alpha: f64, k: usize) -> ModelParams {
    ModelParams {
        source: Source::new(p).unwrap(),
        n: 1 << 16,
        k,
        alpha,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn autocorrelation_at_one_is_bounded(u in word(24), p in 0.51f64..0.95) {
        let src = Source::new(p).unwrap();
        let c = correlation_at_one(&u, &u, &src);
        prop_assert!(c >= 1.0 && c < 1.0 / (1.0 - p), "C(1) = {c}");
    }

    #[test]
    fn correlation_terms_follow_a_brute_force_overlap_scan((u, v) in distinct_pair(6)) {
        let src = Source::new(0.7).unwrap();
        let k = u.len();
        let text = |w: &Word| w.to_string();
        let (su, sv) = (text(&u), text(&v));
        for (a, b, poly) in [(&su, &sv, correlation_poly::<f64>(&u, &v, &src)), (&sv, &su, correlation_poly::<f64>(&v, &u, &src))] {
            let brute: Vec<usize> = (1..=k).filter(|&l| a[k - l..] == b[..l]).map(|l| k - l).collect();
            let mut degrees: Vec<usize> =
                poly.coeffs().iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(d, _)| d).collect();
            degrees.reverse();
            prop_assert_eq!(degrees, brute);
        }
        prop_assert_eq!(overlap_lengths(&u, &v).count(), correlation_poly::<f64>(&u, &v, &src).coeffs().iter().filter(|c| **c != 0.0).count());
    }

    #[test]
    fn maximal_overlap_bounds_the_correlation((u, v) in distinct_pair(12), p in 0.51f64..0.95) {
        let src = Source::new(p).unwrap();
        if let Some(o) = maximal_overlap(&u, &v).unwrap() {
            prop_assert_eq!(o.sigma.concat(&o.w).unwrap(), u);
            prop_assert_eq!(o.w.concat(&o.theta).unwrap(), v);
            let lhs = pro_f64(&u, &src) * correlation_at_one(&u, &v, &src);
            let rhs = pro_f64(&o.sigma, &src) * pro_f64(&o.w, &src) * pro_f64(&o.theta, &src);
            prop_assert!(lhs >= rhs * (1.0 - 1e-14));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn single_class_probabilities_sum_to_one_exactly(u in word(6), n in 1usize..=14) {
        let src = Source::new(0.7).unwrap();
        let gf = single_class_probs::<BigRational>(&build_single_gfs(&u, &src), n);
        let table = enumerate_class_table::<BigRational>(&u, None, n, &src).unwrap();
        prop_assert_eq!(gf[0].clone() + gf[1].clone() + table[2][0].clone(), BigRational::one());
        prop_assert_eq!(&gf[2], &table[2][0]);
    }

    #[test]
    fn joint_tables_are_distributions_with_single_marginals((u, v) in distinct_pair(4), n in 1usize..=12) {
        let src = Source::new(0.7).unwrap();
        let joint = joint_class_probs::<BigRational>(&build_joint_gfs(&u, &v, &src).unwrap(), n);
        let total = joint.iter().flatten().fold(BigRational::zero(), |a, x| a + x);
        prop_assert_eq!(total, BigRational::one());
        let su = single_class_probs::<BigRational>(&build_single_gfs(&u, &src), n);
        let sv = single_class_probs::<BigRational>(&build_single_gfs(&v, &src), n);
        for i in 0..3 {
            let row = joint[i].iter().fold(BigRational::zero(), |a, x| a + x);
            let col = (0..3).fold(BigRational::zero(), |a, j| a + &joint[j][i]);
            prop_assert_eq!(row, su[i].clone());
            prop_assert_eq!(col, sv[i].clone());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn kernels_are_periodic_along_the_saddle_line(
        s in -3.0f64..1.0,
        y in -6i32..=6,
        p in 0.55f64..0.9,
        alpha in 0.9f64..3.0,
        (r, c, d) in (0.05f64..0.95, 0.0f64..=1.0, 0.0f64..=1.0),
    ) {
        let params = params_at(p, alpha, 16);
        let k_step = 2.0 * std::f64::consts::PI / (p / (1.0 - p)).ln();
        let z = Complex64::new(s, y as f64 * k_step);
        let h0 = eval_h(Complex64::new(s, 0.0), &params).value.re;
        prop_assert!((eval_h(z, &params).value.re - h0).abs() <= 1e-12 * h0.abs().max(1.0));
        let big0 = eval_H(Complex64::new(s, 0.0), r, c, d, &params).value.re;
        prop_assert!((eval_H(z, r, c, d, &params).value.re - big0).abs() <= 1e-12 * big0.abs().max(1.0));
    }

    #[test]
    fn saddle_abscissa_decreases_in_alpha(p in 0.55f64..0.9, t0 in 0.01f64..0.99, t1 in 0.01f64..0.99) {
        prop_assume!((t0 - t1).abs() > 1e-6);
        let (a1, a2) = thresholds(p);
        let (lo, hi) = (t0.min(t1), t0.max(t1));
        let (x, y) = (a1 + lo * (a2 - a1), a1 + hi * (a2 - a1));
        prop_assert!(closed_form_saddle(x, p) > closed_form_saddle(y, p));
        let sx = solve_saddle(&params_at(p, x, 16), None).unwrap().s;
        let sy = solve_saddle(&params_at(p, y, 16), None).unwrap().s;
        prop_assert!(sx > sy);
        prop_assert!(closed_form_saddle(a2, p) + 2.0 < 1e-9);
    }

    #[test]
    fn big_h_approaches_h_at_rate_one_over_k(
        s in -3.0f64..1.0,
        p in 0.55f64..0.9,
        alpha in 0.9f64..3.0,
        c in 0.0f64..=1.0,
        d in 0.0f64..=1.0,
        k in 4usize..30,
    ) {
        let z = Complex64::new(s, 0.0);
        let gap = |k: usize| {
            let params = params_at(p, alpha, k);
            (eval_H(z, 1.0 / k as f64, c, d, &params).value.re - eval_h(z, &params).value.re).abs()
        };
        let (g1, g2) = (gap(k), gap(2 * k));
        prop_assert!(g2 <= 0.5 * g1 * (1.0 + 1e-9) + 1e-15, "{g1} -> {g2}");
    }

    #[test]
    fn saddle_line_terms_decay_fast(p in 0.55f64..0.9, t in 0.1f64..0.9) {
        let (a1, a2) = thresholds(p);
        let alpha = a1 + t * (a2 - a1);
        // Large p pushes alpha2 up and k = alpha ln n past the word-length cap.
        let params = ModelParams::from_alpha(p, alpha, 1 << 16);
        prop_assume!(params.is_ok());
        let params = params.unwrap();
        prop_assume!(params.alpha_eff() > a1 + 1e-3 && params.alpha_eff() < a2 - 1e-3);
        let terms = c1_saddle_terms(&params, 5).unwrap();
        prop_assert!(terms[5].norm() / terms[0].norm() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn class_sum_identity(k in 2usize..=10, s in -3.0f64..1.0, p in 0.55f64..0.9, e in 8u32..24) {
        let params = ModelParams::from_k(p, 1 << e, k).unwrap();
        let direct = class_sum_direct(s, &params).unwrap();
        let grouped = class_sum_by_classes(s, &params);
        prop_assert!((direct - grouped).abs() <= 1e-10 * direct.abs(), "{direct} vs {grouped}");
    }
}
