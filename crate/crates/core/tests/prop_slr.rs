use std::f64::consts::PI;

use ensctl_core::slr::{
    complete_polynomial_report, forward_recursion, forward_recursion_with, inverse_recursion_report, splitting_error,
    unimodularity_defect, HardPulseStep, DEFAULT_MARGIN,
};
use ensctl_core::Complex64;
use proptest::prelude::*;

// Flips stay below 1 rad: for large flips over many steps the coefficients
// no longer determine the steps to f64 precision.
fn steps(max_len: usize) -> impl Strategy<Value = Vec<HardPulseStep>> {
    prop::collection::vec((0.01..1.0f64, -PI..PI), 1..max_len)
        .prop_map(|v| v.into_iter().map(|(p, t)| HardPulseStep::new(p, t).unwrap()).collect())
}

fn wrapped(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn roundtrip_recovers_steps(s in steps(33)) {
        let back = inverse_recursion_report(&forward_recursion(&s).unwrap()).unwrap().steps;
        prop_assert_eq!(back.len(), s.len());
        for (a, b) in s.iter().zip(&back) {
            prop_assert!((a.phi - b.phi).abs() <= 1e-9);
            prop_assert!(wrapped(a.theta, b.theta) <= 1e-9);
        }
    }

    #[test]
    fn every_step_stays_unimodular(s in steps(33)) {
        let mut worst: f64 = 0.0;
        let poly = forward_recursion_with(&s, |p, q| worst = worst.max(unimodularity_defect(p, q, 256))).unwrap();
        prop_assert!(worst <= 1e-9);
        let rep = inverse_recursion_report(&poly).unwrap();
        prop_assert!(rep.unimodularity.iter().all(|&d| d <= 1e-9));
        // the two boundary conditions vanish together
        for (l, o) in rep.leading_residuals.iter().zip(&rep.low_order_residuals) {
            prop_assert!(*l <= 1e-8 && *o <= 1e-8);
        }
    }

    #[test]
    fn step_coefficients_are_unit(phi in 0.0..PI, theta in -10.0..10.0f64) {
        let st = HardPulseStep::new(phi, theta).unwrap();
        prop_assert!((st.c() * st.c() + st.s().norm_sqr() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn splitting_error_is_second_order(omega in 0.5..5.0f64, u in -2.0..2.0f64, v in -2.0..2.0f64) {
        let e1 = splitting_error(omega, u, v, 1e-3).unwrap();
        let e2 = splitting_error(omega, u, v, 1e-4).unwrap();
        prop_assume!(e1 > 1e-12);
        let ratio = e1 / e2;
        prop_assert!((60.0..=160.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn completion_is_unimodular_and_keeps_q(q in prop::collection::vec((-0.3..0.3f64, -0.3..0.3f64), 2..9)) {
        let q: Vec<Complex64> = q.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
        prop_assume!(q.iter().map(|c| c.norm()).sum::<f64>() < 0.9);
        let c = complete_polynomial_report(&q, DEFAULT_MARGIN).unwrap();
        prop_assert!(c.poly.unimodularity_defect(256) <= 1e-9);
        for (a, b) in c.poly.q.iter().zip(&q) {
            prop_assert!((a - b * c.q_scale).norm() <= 1e-12);
        }
        // deterministic: the same input gives the same factor
        let again = complete_polynomial_report(&q, DEFAULT_MARGIN).unwrap();
        prop_assert_eq!(again.poly, c.poly);
    }
}
