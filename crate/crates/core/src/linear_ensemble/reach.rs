use nalgebra::{DMatrix, DVector};

use super::LinearSystemSample;
use crate::error::{invalid, Error, Result};
use crate::linalg;

/// Exact discretisation of `ẋ = Ax + Bu` with `u` held over `dt`:
/// `(e^{A dt}, ∫₀^{dt} e^{Aτ} dτ B)` from one augmented exponential.
pub fn zero_order_hold(a: &DMatrix<f64>, b: &DMatrix<f64>, dt: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n, m) = (a.nrows(), b.ncols());
    let mut aug = DMatrix::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&(a * dt));
    aug.view_mut((0, n), (n, m)).copy_from(&(b * dt));
    let e = aug.exp();
    (e.view((0, 0), (n, n)).into_owned(), e.view((0, n), (n, m)).into_owned())
}

/// Smallest `‖(x_s(T) − target_s)_s‖₂` over piecewise-constant controls of
/// `horizon` steps of `dt`, all members starting from rest and sharing the
/// control.
pub fn reachability_residual(
    samples: &[LinearSystemSample],
    targets: &[DVector<f64>],
    horizon: usize,
    dt: f64,
) -> Result<f64> {
    if samples.is_empty() {
        return invalid("no samples");
    }
    if horizon == 0 {
        return invalid("horizon must be at least one step");
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return invalid("step must be positive");
    }
    if targets.len() != samples.len() {
        return Err(Error::DimensionMismatch {
            expected: samples.len(),
            found: targets.len(),
        });
    }
    let m = samples[0].inputs();
    if samples.iter().any(|s| s.inputs() != m) {
        return invalid("samples must share the input dimension");
    }
    for (s, t) in samples.iter().zip(targets) {
        if t.len() != s.dim() {
            return Err(Error::DimensionMismatch {
                expected: s.dim(),
                found: t.len(),
            });
        }
    }
    let rows: usize = samples.iter().map(LinearSystemSample::dim).sum();
    let mut map = DMatrix::zeros(rows, m * horizon);
    let mut rhs = DVector::zeros(rows);
    let mut r0 = 0;
    for (s, t) in samples.iter().zip(targets) {
        let n = s.dim();
        let (ad, bd) = zero_order_hold(&s.a, &s.b, dt);
        // x(N) = Σ_k A_d^{N−1−k} B_d u_k, filled from the last step back
        let mut block = bd;
        for k in (0..horizon).rev() {
            map.view_mut((r0, k * m), (n, m)).copy_from(&block);
            block = &ad * block;
        }
        rhs.rows_mut(r0, n).copy_from(t);
        r0 += n;
    }
    if map.iter().all(|x| *x == 0.0) {
        return Ok(rhs.norm());
    }
    let u = linalg::lstsq(&map, &rhs)?;
    Ok((map * u - rhs).norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(eps: f64) -> LinearSystemSample {
        LinearSystemSample::new(vec![eps], DMatrix::zeros(1, 1), DMatrix::from_element(1, 1, eps)).unwrap()
    }

    fn one(x: f64) -> DVector<f64> {
        DVector::from_element(1, x)
    }

    #[test]
    fn scaled_input_pair_has_closed_form_residual() {
        let samples = [scalar(0.9), scalar(1.1)];
        let r = reachability_residual(&samples, &[one(1.0), one(1.0)], 5, 0.1).unwrap();
        // min_U (0.9U − 1)² + (1.1U − 1)² at U = 2/2.02
        let oracle = (2.0 - 4.0 / 2.02_f64).sqrt();
        assert!((r - oracle).abs() < 1e-12, "{r} vs {oracle}");
    }

    #[test]
    fn single_system_reaches_target() {
        let s = LinearSystemSample::new(
            vec![],
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -0.2]),
            DMatrix::from_column_slice(2, 1, &[0.0, 1.0]),
        )
        .unwrap();
        let r = reachability_residual(&[s], &[DVector::from_vec(vec![0.7, -0.3])], 10, 0.2).unwrap();
        assert!(r <= 1e-9, "{r}");
    }

    #[test]
    fn shared_input_distinct_dynamics_reachable() {
        let b = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let samples: Vec<_> = [1.0, 1.3]
            .iter()
            .map(|&s| {
                LinearSystemSample::new(vec![s], DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -s, -0.5]), b.clone()).unwrap()
            })
            .collect();
        let t = DVector::from_vec(vec![0.2, 0.1]);
        let r = reachability_residual(&samples, &[t.clone(), t], 12, 0.25).unwrap();
        assert!(r <= 1e-8, "{r}");
    }

    #[test]
    fn residual_never_grows_with_horizon() {
        let samples = [scalar(0.9), scalar(1.1)];
        let targets = [one(1.0), one(0.5)];
        let rs: Vec<f64> = (1..8).map(|n| reachability_residual(&samples, &targets, n, 0.1).unwrap()).collect();
        assert!(rs.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{rs:?}");
    }

    #[test]
    fn hold_matches_closed_form() {
        let a = DMatrix::from_element(1, 1, -2.0);
        let b = DMatrix::from_element(1, 1, 3.0);
        let (ad, bd) = zero_order_hold(&a, &b, 0.5);
        assert!((ad[(0, 0)] - (-1.0_f64).exp()).abs() < 1e-14);
        assert!((bd[(0, 0)] - 1.5 * (1.0 - (-1.0_f64).exp())).abs() < 1e-14);
    }

    #[test]
    fn mismatched_shapes_rejected() {
        let samples = [scalar(1.0)];
        assert!(reachability_residual(&samples, &[], 3, 0.1).is_err());
        assert!(reachability_residual(&samples, &[DVector::zeros(2)], 3, 0.1).is_err());
        assert!(reachability_residual(&samples, &[one(1.0)], 0, 0.1).is_err());
    }
}
