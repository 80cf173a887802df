use num_complex::Complex64;

use super::grid::DispersionGrid;
use super::state::{EnsembleState, PointState};
use crate::error::{invalid, Result};
use crate::linalg::{self, CMatrix};

/// One piece of a two-qubit sequence in time order.
#[derive(Clone, Debug, PartialEq)]
pub enum TwoQubitSegment {
    /// Free evolution `exp(−i J t σzσz)` for `duration`, with `J` taken from
    /// the grid point.
    Coupling { duration: f64 },
    /// Parameter-independent 4×4 unitary, applied instantaneously.
    Local(CMatrix),
    /// Fixed coupling tensor `exp(−i t (a σxσx + b σyσy + c σzσz))`.
    Tensor { xx: f64, yy: f64, zz: f64, duration: f64 },
}

/// `exp(−i J t σzσz)`.
pub fn coupling_propagator(j: f64, t: f64) -> CMatrix {
    let e = Complex64::from_polar(1.0, -j * t);
    let d = [e, e.conj(), e.conj(), e];
    CMatrix::from_fn(4, 4, |r, c| if r == c { d[r] } else { linalg::ZERO })
}

/// `exp(−i t (a σxσx + b σyσy + c σzσz))`; the three terms commute.
pub fn tensor_propagator(a: f64, b: f64, c: f64, t: f64) -> CMatrix {
    [(0, a), (1, b), (2, c)].iter().fold(linalg::identity(4), |acc, &(k, w)| {
        let p = linalg::kron(&linalg::pauli(k), &linalg::pauli(k));
        let (s, co) = (w * t).sin_cos();
        let e = linalg::identity(4) * Complex64::new(co, 0.0) - p * Complex64::new(0.0, s);
        e * acc
    })
}

/// `exp(−i angle/2 σ_axis)` on `qubit` (0 or 1), identity on the other.
pub fn local_rotation(qubit: usize, axis: usize, angle: f64) -> CMatrix {
    let (s, c) = (angle / 2.0).sin_cos();
    let r = linalg::identity(2) * Complex64::new(c, 0.0) - linalg::pauli(axis) * Complex64::new(0.0, s);
    if qubit == 0 {
        linalg::kron(&r, &linalg::identity(2))
    } else {
        linalg::kron(&linalg::identity(2), &r)
    }
}

fn validate(segments: &[TwoQubitSegment]) -> Result<()> {
    for s in segments {
        match s {
            TwoQubitSegment::Coupling { duration } if !(*duration >= 0.0 && duration.is_finite()) => {
                return invalid(format!("coupling duration must be nonnegative, got {duration}"));
            }
            TwoQubitSegment::Local(m) if m.nrows() != 4 || m.ncols() != 4 => {
                return invalid("local segment must be 4x4");
            }
            TwoQubitSegment::Tensor { xx, yy, zz, duration }
                if !(*duration >= 0.0) || ![xx, yy, zz, duration].iter().all(|x| x.is_finite()) =>
            {
                return invalid("tensor segment needs finite weights and a nonnegative duration");
            }
            _ => {}
        }
    }
    Ok(())
}

/// Ordered product of the segments for coupling constant `j`.
pub fn two_qubit_propagator(segments: &[TwoQubitSegment], j: f64) -> Result<CMatrix> {
    validate(segments)?;
    let mut u = linalg::identity(4);
    for s in segments {
        u = match s {
            TwoQubitSegment::Coupling { duration } => coupling_propagator(j, *duration) * u,
            TwoQubitSegment::Local(m) => m * u,
            TwoQubitSegment::Tensor { xx, yy, zz, duration } => tensor_propagator(*xx, *yy, *zz, *duration) * u,
        };
    }
    Ok(u)
}

/// Net unitary at every grid point (only the `J` axis matters).
pub fn propagate_two_qubit(segments: &[TwoQubitSegment], grid: &DispersionGrid) -> Result<EnsembleState> {
    let states = grid
        .points()
        .iter()
        .map(|p| two_qubit_propagator(segments, p.j).map(PointState::Unitary))
        .collect::<Result<_>>()?;
    Ok(EnsembleState::from_parts(grid.clone(), states))
}

/// Total free-evolution time of a segment list.
pub fn coupling_time(segments: &[TwoQubitSegment]) -> f64 {
    segments
        .iter()
        .map(|s| match s {
            TwoQubitSegment::Coupling { duration } => *duration,
            TwoQubitSegment::Tensor { duration, .. } => *duration,
            TwoQubitSegment::Local(_) => 0.0,
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::super::super::liealg::two_qubit_pauli;
    use super::*;

    #[test]
    fn coupling_matches_series_exponential() {
        let (j, t) = (1.3, 0.4);
        let gen = two_qubit_pauli(2, 2) * Complex64::new(0.0, -j * t);
        let mut term = linalg::identity(4);
        let mut sum = term.clone();
        for k in 1..30 {
            term = &term * &gen / Complex64::new(k as f64, 0.0);
            sum += &term;
        }
        assert!(linalg::fro(&(sum - coupling_propagator(j, t))) < 1e-14);
    }

    #[test]
    fn local_pi_rotation_about_z_flips_coupling_sign() {
        let u = local_rotation(0, 2, std::f64::consts::PI);
        let a = coupling_propagator(0.7, 0.3);
        let flipped = u.adjoint() * &a * &u;
        assert!(linalg::fro(&(flipped - coupling_propagator(0.7, -0.3))) > 1e-3);
        let x = local_rotation(0, 0, std::f64::consts::PI);
        let flipped = x.adjoint() * &a * &x;
        assert!(linalg::fro(&(flipped - coupling_propagator(0.7, -0.3))) < 1e-14);
    }

    #[test]
    fn tensor_matches_series_exponential() {
        let (a, b, c, t) = (0.3, -0.2, 0.5, 0.7);
        let gen = (two_qubit_pauli(0, 0) * Complex64::new(a, 0.0)
            + two_qubit_pauli(1, 1) * Complex64::new(b, 0.0)
            + two_qubit_pauli(2, 2) * Complex64::new(c, 0.0))
            * Complex64::new(0.0, -t);
        let mut term = linalg::identity(4);
        let mut sum = term.clone();
        for k in 1..40 {
            term = &term * &gen / Complex64::new(k as f64, 0.0);
            sum += &term;
        }
        assert!(linalg::fro(&(sum - tensor_propagator(a, b, c, t))) < 1e-14);
        assert!(linalg::fro(&(tensor_propagator(0.0, 0.0, 0.9, 1.1) - coupling_propagator(0.9, 1.1))) < 1e-15);
    }

    #[test]
    fn negative_duration_rejected() {
        assert!(two_qubit_propagator(&[TwoQubitSegment::Coupling { duration: -1.0 }], 1.0).is_err());
    }
}
