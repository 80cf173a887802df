use nalgebra::DMatrix;
use serde::Serialize;

use super::LinearSystemSample;
use crate::error::{invalid, Error, Result};
use crate::linalg;

/// Relative tolerance for "equal characteristic polynomials" and for
/// `a₀ = 0`.
pub const CHARPOLY_RTOL: f64 = 1e-8;

/// Relative singular-value cutoff for controllability ranks.
const RANK_RTOL: f64 = 1e-10;

/// Controllable canonical form of a single-input sample.
#[derive(Clone, Debug, PartialEq)]
pub struct CompanionForm {
    /// Similarity with `T A T⁻¹ = companion(a)` and `T b = e_n`.
    pub t: DMatrix<f64>,
    /// Characteristic coefficients `a₀ … a_{n−1}` of `sⁿ + Σ a_i sⁱ`.
    pub coefficients: Vec<f64>,
    /// `‖T A T⁻¹ − companion(a)‖_F`.
    pub residual: f64,
}

/// Ones on the superdiagonal, last row `−a₀ … −a_{n−1}`.
pub fn companion_matrix(a: &[f64]) -> DMatrix<f64> {
    let n = a.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == n {
            -a[j]
        } else if j == i + 1 {
            1.0
        } else {
            0.0
        }
    })
}

fn powers_times(a: &DMatrix<f64>, b: &DMatrix<f64>, from: usize, to: usize) -> DMatrix<f64> {
    let n = a.nrows();
    let mut out = DMatrix::zeros(n, to - from);
    let mut v = b.clone();
    for k in 0..to {
        if k >= from {
            out.set_column(k - from, &v.column(0));
        }
        v = a * v;
    }
    out
}

pub fn companion_transform(sys: &LinearSystemSample) -> Result<CompanionForm> {
    if sys.inputs() != 1 {
        return invalid(format!("companion form needs a single input, sample has {}", sys.inputs()));
    }
    let n = sys.dim();
    let c = sys.controllability_matrix();
    let rank = linalg::rank(&c, RANK_RTOL);
    if rank < n {
        return Err(Error::Uncontrollable { rank, dim: n });
    }
    let c_inv = c
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("controllability matrix is singular".into()))?;
    // q A^k b = δ_{k,n−1} for the last row q of C⁻¹
    let q = c_inv.row(n - 1).into_owned();
    let mut t = DMatrix::zeros(n, n);
    let mut row = q;
    for k in 0..n {
        t.set_row(k, &row);
        row = &row * &sys.a;
    }
    // Aⁿb = −Σ a_i Aⁱb
    let an_b = powers_times(&sys.a, &sys.b, n, n + 1);
    let coefficients: Vec<f64> = (&c_inv * an_b).iter().map(|x| -x).collect();
    let t_inv = t
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("companion similarity is singular".into()))?;
    let residual = (&t * &sys.a * t_inv - companion_matrix(&coefficients)).norm();
    Ok(CompanionForm {
        t,
        coefficients,
        residual,
    })
}

/// Rank of `[Ab, A²b, …, Aⁿb]`; `n − 1` when `a₀ = 0`, since then every
/// reachable direction from `Ab` on lies in that subspace.
pub fn shifted_krylov_rank(sys: &LinearSystemSample) -> usize {
    let n = sys.dim();
    let mut cols = DMatrix::zeros(n, n * sys.inputs());
    let mut block = &sys.a * &sys.b;
    for k in 0..n {
        cols.view_mut((0, k * sys.inputs()), (n, sys.inputs())).copy_from(&block);
        block = &sys.a * block;
    }
    linalg::rank(&cols, RANK_RTOL)
}

/// Outcome of the necessary-condition checks on a sample set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    pub coefficients: Vec<Vec<f64>>,
    /// Pairs of distinct systems sharing a characteristic polynomial: no
    /// control steers both to the same point.
    pub shared_charpoly: Vec<(usize, usize)>,
    /// Samples with `a₀ = 0` (singular `A`), with the rank of
    /// `[Ab, …, Aⁿb]`.
    pub singular: Vec<(usize, usize)>,
    pub passed: bool,
}

fn scale(x: f64, y: f64) -> f64 {
    x.max(y).max(f64::MIN_POSITIVE)
}

pub fn ensemble_necessary_conditions(samples: &[LinearSystemSample]) -> Result<ConditionReport> {
    if samples.len() < 2 {
        return invalid("necessary conditions compare at least two samples");
    }
    let forms = samples
        .iter()
        .enumerate()
        .map(|(i, s)| companion_transform(s).map_err(|e| Error::InvalidInput(format!("sample {i}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let coefficients: Vec<Vec<f64>> = forms.into_iter().map(|f| f.coefficients).collect();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut shared_charpoly = Vec::new();
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let (ai, aj) = (&coefficients[i], &coefficients[j]);
            if ai.len() != aj.len() {
                continue;
            }
            let d: Vec<f64> = ai.iter().zip(aj).map(|(x, y)| x - y).collect();
            let same_poly = norm(&d) <= CHARPOLY_RTOL * scale(norm(ai), norm(aj));
            let (ma, mb) = (&samples[i].a, &samples[j].a);
            let distinct = (ma - mb).norm() > CHARPOLY_RTOL * scale(ma.norm(), mb.norm());
            if same_poly && distinct {
                shared_charpoly.push((i, j));
            }
        }
    }
    let singular: Vec<(usize, usize)> = coefficients
        .iter()
        .enumerate()
        .filter(|(_, a)| a[0].abs() <= CHARPOLY_RTOL * norm(a).max(1.0))
        .map(|(i, _)| (i, shifted_krylov_rank(&samples[i])))
        .collect();
    Ok(ConditionReport {
        passed: shared_charpoly.is_empty() && singular.is_empty(),
        coefficients,
        shared_charpoly,
        singular,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single(a: DMatrix<f64>, b: &[f64]) -> LinearSystemSample {
        LinearSystemSample::single_input(vec![], a, DVector::from_column_slice(b)).unwrap()
    }

    fn random_sample(rng: &mut ChaCha8Rng, n: usize) -> LinearSystemSample {
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        single(a, &b)
    }

    #[test]
    fn double_integrator_is_already_companion() {
        let f = companion_transform(&single(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]), &[0.0, 1.0])).unwrap();
        assert_eq!(f.t, DMatrix::identity(2, 2));
        assert_eq!(f.coefficients, vec![0.0, 0.0]);
    }

    #[test]
    fn random_samples_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let s = random_sample(&mut rng, 4);
            let f = companion_transform(&s).unwrap();
            assert!(f.residual <= 1e-10 * s.a.norm(), "{}", f.residual);
            let t_inv = f.t.clone().try_inverse().unwrap();
            let a_back = &t_inv * companion_matrix(&f.coefficients) * &f.t;
            let b_back = &t_inv * DVector::from_fn(4, |i, _| if i == 3 { 1.0 } else { 0.0 });
            assert!((a_back - &s.a).norm() <= 1e-10 * s.a.norm().max(1.0));
            assert!((b_back - s.b.column(0)).norm() <= 1e-10);
        }
    }

    #[test]
    fn coefficients_match_eigenvalue_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let s = random_sample(&mut rng, 4);
            let f = companion_transform(&s).unwrap();
            // expand Π (x − λ_i)
            let mut poly = vec![num_complex::Complex64::new(1.0, 0.0)];
            for lambda in s.a.complex_eigenvalues().iter() {
                let mut next = vec![num_complex::Complex64::new(0.0, 0.0); poly.len() + 1];
                for (k, c) in poly.iter().enumerate() {
                    next[k + 1] += c;
                    next[k] -= c * lambda;
                }
                poly = next;
            }
            for (k, a) in f.coefficients.iter().enumerate() {
                assert!((poly[k].re - a).abs() < 1e-8 && poly[k].im.abs() < 1e-8);
            }
        }
    }

    #[test]
    fn uncontrollable_pair_reports_rank() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0]);
        match companion_transform(&single(a, &[1.0, 1.0, 0.0])) {
            Err(Error::Uncontrollable { rank, dim }) => assert_eq!((rank, dim), (2, 3)),
            other => panic!("expected uncontrollable, got {other:?}"),
        }
    }

    #[test]
    fn distinct_spectra_pass() {
        let samples: Vec<_> = [1.0, 1.5, 2.0]
            .iter()
            .map(|&s| single(DMatrix::from_row_slice(2, 2, &[s, 0.0, 0.0, 2.0 * s]), &[1.0, 1.0]))
            .collect();
        let r = ensemble_necessary_conditions(&samples).unwrap();
        assert!(r.passed);
        assert!(ensemble_necessary_conditions(&samples[..1]).is_err());
    }

    #[test]
    fn similar_systems_flagged() {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, -6.0, -11.0, -6.0]);
        let t1 = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        let t2 = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let b = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        let samples: Vec<_> = [&t1, &t2]
            .iter()
            .map(|t| {
                let ti = t.clone_owned().try_inverse().unwrap();
                LinearSystemSample::single_input(vec![], *t * &a * ti, *t * &b).unwrap()
            })
            .collect();
        let r = ensemble_necessary_conditions(&samples).unwrap();
        assert_eq!(r.shared_charpoly, vec![(0, 1)]);
        assert!(!r.passed);
    }

    #[test]
    fn singular_sample_lives_in_proper_subspace() {
        let a = companion_matrix(&[0.0, 2.0, -1.0]);
        let samples = vec![single(a, &[0.0, 0.0, 1.0]), single(companion_matrix(&[1.0, 2.0, 3.0]), &[0.0, 0.0, 1.0])];
        let r = ensemble_necessary_conditions(&samples).unwrap();
        assert_eq!(r.singular, vec![(0, 2)]);
        assert!(!r.passed);
    }
}
