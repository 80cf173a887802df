use ensctl_core::composite::reduce_coupling_tensor;
use ensctl_core::ensemble_sim::two_qubit_propagator;
use ensctl_core::liealg::two_qubit_pauli;
use ensctl_core::linear_ensemble::{companion_matrix, companion_transform, heisenberg_invariant, RATIO_RTOL};
use ensctl_core::LinearSystemSample;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn system(n: usize) -> impl Strategy<Value = LinearSystemSample> {
    (prop::collection::vec(-1.0..1.0f64, n * n), prop::collection::vec(-1.0..1.0f64, n)).prop_map(move |(a, b)| {
        LinearSystemSample::single_input(vec![1.0], DMatrix::from_vec(n, n, a), DVector::from_vec(b)).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn companion_form_reconstructs(s in (2usize..6).prop_flat_map(system)) {
        let c = s.controllability_matrix();
        let sv = c.clone().singular_values();
        // skip nearly uncontrollable draws
        prop_assume!(sv.min() > 1e-3 * sv.max());
        let f = companion_transform(&s).unwrap();
        let n = s.dim();
        let t_inv = f.t.clone().try_inverse().unwrap();
        let comp = &f.t * &s.a * &t_inv;
        prop_assert!((comp - companion_matrix(&f.coefficients)).norm() <= 1e-8 * s.a.norm().max(1.0));
        let tb = &f.t * &s.b;
        for i in 0..n {
            let want = if i + 1 == n { 1.0 } else { 0.0 };
            prop_assert!((tb[(i, 0)] - want).abs() <= 1e-8);
        }
    }

    #[test]
    fn heisenberg_ratios_are_constant(
        u1 in prop::collection::vec(-1.0..1.0f64, 1..24),
        u2 in prop::collection::vec(-1.0..1.0f64, 24),
        e in prop::collection::vec(0.2..3.0f64, 2..5),
    ) {
        let u2 = &u2[..u1.len()];
        let r = heisenberg_invariant(&u1, u2, 0.1, &e, [0.0; 3]).unwrap();
        prop_assert!(r.max_relative_spread <= RATIO_RTOL);
    }

    #[test]
    fn coupling_echo_commutes_with_zz(a in -2.0..2.0f64, b in -2.0..2.0f64, g in -2.0..2.0f64, t in 0.01..2.0f64) {
        let u = two_qubit_propagator(&reduce_coupling_tensor(a, b, g, t).unwrap(), 0.0).unwrap();
        let zz = two_qubit_pauli(2, 2);
        prop_assert!((&u * &zz - &zz * &u).norm() <= 1e-12);
    }
}
