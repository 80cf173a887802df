use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{DispersionGrid, GridPoint};
use super::state::{fidelity_of, EnsembleState, FidelityMap, PointState, TargetSpec};
use super::su2::Su2;
use crate::error::{invalid, Error, Result};

/// How a constant-amplitude step acts over its duration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepShape {
    /// Drift and rf act together for the whole step.
    #[default]
    Rect,
    /// Free precession for the step, then an instantaneous rf rotation of
    /// the same area.
    Hard,
}

/// Piecewise-constant rf controls `(u_k, v_k)` in rad/s. `v` drives `Ωx`,
/// `u` drives `Ωy`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlSequence {
    dt: f64,
    samples: Vec<(f64, f64)>,
    a_max: Option<f64>,
    shape: StepShape,
}

impl ControlSequence {
    pub fn new(dt: f64, samples: Vec<(f64, f64)>, a_max: Option<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return invalid(format!("step duration must be positive, got {dt}"));
        }
        if samples.iter().any(|(u, v)| !u.is_finite() || !v.is_finite()) {
            return invalid("control samples must be finite");
        }
        if let Some(a) = a_max {
            if !(a > 0.0 && a.is_finite()) {
                return invalid(format!("amplitude bound must be positive, got {a}"));
            }
            if let Some((k, amp)) = samples
                .iter()
                .map(|(u, v)| u.hypot(*v))
                .enumerate()
                .find(|(_, amp)| *amp > a * (1.0 + 1e-12))
            {
                return invalid(format!("step {k} amplitude {amp} exceeds bound {a}"));
            }
        }
        Ok(Self {
            dt,
            samples,
            a_max,
            shape: StepShape::Rect,
        })
    }

    /// `n` steps of zero amplitude.
    pub fn zero(n: usize, dt: f64) -> Result<Self> {
        Self::new(dt, vec![(0.0, 0.0); n], None)
    }

    /// Steps given by flip angle `φ_k = A_k dt` and phase `θ_k`:
    /// `u = A sin θ`, `v = A cos θ`.
    pub fn from_flip_angles(dt: f64, steps: &[(f64, f64)], a_max: Option<f64>) -> Result<Self> {
        let samples = steps
            .iter()
            .map(|&(phi, theta)| {
                let a = phi / dt;
                (a * theta.sin(), a * theta.cos())
            })
            .collect();
        Self::new(dt, samples, a_max)
    }

    pub fn with_shape(mut self, shape: StepShape) -> Self {
        self.shape = shape;
        self
    }

    pub fn with_a_max(self, a_max: Option<f64>) -> Result<Self> {
        let shape = self.shape;
        Ok(Self::new(self.dt, self.samples, a_max)?.with_shape(shape))
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn a_max(&self) -> Option<f64> {
        self.a_max
    }

    pub fn shape(&self) -> StepShape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.samples.len() as f64
    }

    pub fn peak_amplitude(&self) -> f64 {
        self.samples.iter().map(|(u, v)| u.hypot(*v)).fold(0.0, f64::max)
    }

    /// `self` followed by `other`; step duration and shape must agree.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.dt != other.dt || self.shape != other.shape {
            return invalid("concatenated sequences must share step duration and shape");
        }
        let mut samples = self.samples.clone();
        samples.extend_from_slice(&other.samples);
        let a_max = match (self.a_max, other.a_max) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        Ok(Self::new(self.dt, samples, a_max)?.with_shape(self.shape))
    }
}

fn check_finite(xs: &[f64]) -> Result<()> {
    if xs.iter().any(|x| !x.is_finite()) {
        return invalid("non-finite propagator input");
    }
    Ok(())
}

/// `exp(−(i/2) h·σ dt)` with `h = (ε v, ε u, ω)`, in closed form.
fn rect_step(omega: f64, epsilon: f64, u: f64, v: f64, dt: f64) -> Su2 {
    let h = [epsilon * v, epsilon * u, omega];
    let a = (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt();
    let half = 0.5 * a * dt;
    // s = sin(a dt / 2) / a, continued to a = 0
    let s = if half < 1e-8 {
        0.5 * dt * (1.0 - half * half / 6.0)
    } else {
        half.sin() / a
    };
    Su2::new_unchecked(
        Complex64::new(half.cos(), -h[2] * s),
        Complex64::new(h[1] * s, -h[0] * s),
    )
}

/// Exact propagator of one constant step of the Bloch dynamics
/// `Ṁ = (ωΩz + εuΩy + εvΩx)M`. Its SO(3) image is [`Su2::to_so3`].
pub fn step_propagator(omega: f64, epsilon: f64, u: f64, v: f64, dt: f64) -> Result<Su2> {
    check_finite(&[omega, epsilon, u, v, dt])?;
    if dt <= 0.0 {
        return invalid(format!("step duration must be positive, got {dt}"));
    }
    Ok(rect_step(omega, epsilon, u, v, dt))
}

/// Controls seen by the ensemble member at `p`: the phase offset `θ`
/// rotates `v + iu` by `e^{iθ}`.
fn effective_controls(p: &GridPoint, u: f64, v: f64) -> (f64, f64) {
    if p.theta == 0.0 {
        return (u, v);
    }
    let (s, c) = p.theta.sin_cos();
    (v * s + u * c, v * c - u * s)
}

fn step_at(pulse: &ControlSequence, p: &GridPoint, k: usize) -> Su2 {
    let (u, v) = effective_controls(p, pulse.samples[k].0, pulse.samples[k].1);
    match pulse.shape {
        StepShape::Rect => rect_step(p.omega, p.epsilon, u, v, pulse.dt),
        StepShape::Hard => {
            rect_step(0.0, p.epsilon, u, v, pulse.dt) * rect_step(p.omega, 1.0, 0.0, 0.0, pulse.dt)
        }
    }
}

/// Ordered product `U_n ⋯ U_1` of the step propagators at one grid point.
pub fn sequence_propagator(pulse: &ControlSequence, point: &GridPoint) -> Su2 {
    (0..pulse.len()).fold(Su2::IDENTITY, |acc, k| step_at(pulse, point, k) * acc)
}

fn apply(u: &Su2, s: &PointState) -> Result<PointState> {
    Ok(match s {
        PointState::Bloch(x) => PointState::Bloch(u.rotate(*x)),
        PointState::Spinor(a) => PointState::Spinor(*u * *a),
        PointState::Unitary(m) if m.nrows() == 2 => PointState::Unitary(u.to_matrix() * m),
        PointState::Unitary(m) => {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: m.nrows(),
            })
        }
    })
}

pub fn propagate(pulse: &ControlSequence, grid: &DispersionGrid, initial: &EnsembleState) -> Result<EnsembleState> {
    if initial.grid() != grid {
        return Err(Error::GridMismatch("initial state is defined on a different grid".into()));
    }
    let states = grid
        .points()
        .iter()
        .zip(initial.states())
        .map(|(p, s)| apply(&sequence_propagator(pulse, p), s))
        .collect::<Result<_>>()?;
    Ok(EnsembleState::from_parts(grid.clone(), states))
}

/// Fidelity of the propagated ensemble against `target`. The initial state
/// is the z axis for Bloch targets and the identity otherwise.
pub fn fidelity_map(pulse: &ControlSequence, grid: &DispersionGrid, target: &TargetSpec) -> Result<FidelityMap> {
    let first = match target {
        TargetSpec::Constant(s) => s,
        TargetSpec::PerPoint(v) => v.first().ok_or_else(|| Error::GridMismatch("empty target table".into()))?,
    };
    let init = match first {
        PointState::Bloch(_) => PointState::Bloch([0.0, 0.0, 1.0]),
        PointState::Spinor(_) => PointState::Spinor(Su2::IDENTITY),
        PointState::Unitary(m) => PointState::Unitary(crate::linalg::identity(m.nrows())),
    };
    let initial = EnsembleState::uniform(grid.clone(), init)?;
    fidelity_of(&propagate(pulse, grid, &initial)?, target)
}

/// `max_θ ‖exp(−Ωz θ) X_θ(T) x₀ − X₀(T) exp(−Ωz θ) x₀‖` over the grid.
///
/// For `x₀` on the z axis this is the distance between the rotated-frame
/// trajectory and the unrotated one.
pub fn phase_frame_check(pulse: &ControlSequence, grid: &DispersionGrid, x0: [f64; 3]) -> Result<f64> {
    if !grid.has_axis("theta") {
        return invalid("phase frame check needs a theta axis");
    }
    let mut worst: f64 = 0.0;
    for p in grid.points() {
        let back = Su2::from_axis_angle([0.0, 0.0, 1.0], -p.theta);
        let lhs = back.rotate(sequence_propagator(pulse, &p).rotate(x0));
        let p0 = GridPoint { theta: 0.0, ..p };
        let rhs = sequence_propagator(pulse, &p0).rotate(back.rotate(x0));
        let d = ((lhs[0] - rhs[0]).powi(2) + (lhs[1] - rhs[1]).powi(2) + (lhs[2] - rhs[2]).powi(2)).sqrt();
        worst = worst.max(d);
    }
    Ok(worst)
}

/// Residual of `exp(πΩx) exp(ωΩz dt) exp(−πΩx) = exp(−ωΩz dt)` in SU(2),
/// built from simulated π pulses of duration `tau`. Returns the largest
/// entry difference, with the sandwich compared up to the ±1 centre of SU(2).
pub fn drift_reversal_residual(omega: f64, dt: f64, tau: f64) -> Result<f64> {
    let a = std::f64::consts::PI / tau;
    let plus = step_propagator(0.0, 1.0, 0.0, a, tau)?;
    let minus = step_propagator(0.0, 1.0, 0.0, -a, tau)?;
    let drift = step_propagator(omega, 1.0, 0.0, 0.0, dt)?;
    let sandwich = plus * drift * minus;
    let reversed = step_propagator(-omega, 1.0, 0.0, 0.0, dt)?;
    let neg = Su2::new_unchecked(-reversed.alpha, -reversed.beta);
    Ok(sandwich.max_abs_diff(&reversed).min(sandwich.max_abs_diff(&neg)))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use super::*;
    use crate::linalg::{self, CMatrix};

    /// Taylor series of `exp(G dt)` for the 2×2 generator, summed to 40 terms.
    fn series_oracle(omega: f64, epsilon: f64, u: f64, v: f64, dt: f64) -> CMatrix {
        let i = linalg::I;
        let g = (linalg::pauli_x() * Complex64::new(epsilon * v, 0.0)
            + linalg::pauli_y() * Complex64::new(epsilon * u, 0.0)
            + linalg::pauli_z() * Complex64::new(omega, 0.0))
            * (-i * 0.5 * dt);
        let mut term = linalg::identity(2);
        let mut sum = term.clone();
        for k in 1..40 {
            term = &term * &g / Complex64::new(k as f64, 0.0);
            sum += &term;
        }
        sum
    }

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (*seed >> 11) as f64 / (1u64 << 53) as f64
    }

    #[test]
    fn quarter_turn_about_y_takes_z_to_x() {
        let u = step_propagator(0.0, 1.0, FRAC_PI_2, 0.0, 1.0).unwrap();
        let x = u.rotate([0.0, 0.0, 1.0]);
        assert!((x[0] - 1.0).abs() < 1e-15 && x[1].abs() < 1e-15 && x[2].abs() < 1e-15);
    }

    #[test]
    fn pure_drift_is_diagonal_half_phase() {
        let (w, dt) = (0.8, 0.3);
        let u = step_propagator(w, 1.0, 0.0, 0.0, dt).unwrap();
        assert!((u.alpha - Complex64::from_polar(1.0, -w * dt / 2.0)).norm() < 1e-15);
        assert_eq!(u.beta, linalg::ZERO);
    }

    #[test]
    fn closed_form_matches_series() {
        let mut seed = 7;
        for _ in 0..50 {
            let mut r = || 4.0 * lcg(&mut seed) - 2.0;
            let (w, e, u, v, dt) = (r(), r(), r(), r(), r().abs() + 0.01);
            let got = step_propagator(w, e, u, v, dt).unwrap();
            let m = got.to_matrix();
            assert!(linalg::fro(&(series_oracle(w, e, u, v, dt) - &m)) < 1e-12);
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            assert!((det - linalg::ONE).norm() < 1e-12);
        }
    }

    #[test]
    fn so3_image_matches_bloch_generator() {
        // integrate the Bloch equation's generator directly
        let (w, e, u, v, dt) = (0.4, 1.1, -0.7, 0.9, 0.5);
        let g = [[0.0, -w, e * u], [w, 0.0, -e * v], [-e * u, e * v, 0.0]];
        let mut term = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let mut sum = term;
        for k in 1..40 {
            let mut next = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    next[i][j] = (0..3).map(|l| term[i][l] * g[l][j]).sum::<f64>() * dt / k as f64;
                }
            }
            term = next;
            for i in 0..3 {
                for j in 0..3 {
                    sum[i][j] += term[i][j];
                }
            }
        }
        let r = step_propagator(w, e, u, v, dt).unwrap().to_so3();
        for i in 0..3 {
            for j in 0..3 {
                assert!((r[i][j] - sum[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn sequence_matches_direct_product() {
        let mut seed = 11;
        let samples: Vec<_> = (0..16).map(|_| (6.0 * lcg(&mut seed) - 3.0, 6.0 * lcg(&mut seed) - 3.0)).collect();
        let pulse = ControlSequence::new(0.05, samples.clone(), None).unwrap();
        let p = GridPoint { omega: 0.7, epsilon: 0.95, ..Default::default() };
        let mut direct = linalg::identity(2);
        for (u, v) in samples {
            direct = series_oracle(p.omega, p.epsilon, u, v, 0.05) * direct;
        }
        assert!(linalg::fro(&(direct - sequence_propagator(&pulse, &p).to_matrix())) < 1e-10);
    }

    #[test]
    fn hard_step_is_precession_then_rotation() {
        let pulse = ControlSequence::new(0.1, vec![(2.0, 1.0)], None).unwrap().with_shape(StepShape::Hard);
        let p = GridPoint { omega: 3.0, ..Default::default() };
        let expected = step_propagator(0.0, 1.0, 2.0, 1.0, 0.1).unwrap()
            * step_propagator(3.0, 1.0, 0.0, 0.0, 0.1).unwrap();
        assert_eq!(sequence_propagator(&pulse, &p), expected);
    }

    #[test]
    fn long_pulses_preserve_norm() {
        let mut seed = 3;
        let samples: Vec<_> = (0..10_000).map(|_| (lcg(&mut seed) - 0.5, lcg(&mut seed) - 0.5)).collect();
        let pulse = ControlSequence::new(0.01, samples, None).unwrap();
        let grid = DispersionGrid::omega_epsilon(2.0, 5, 0.2, 3).unwrap();
        let b = EnsembleState::uniform(grid.clone(), PointState::Bloch([0.0, 0.0, 1.0])).unwrap();
        assert!(propagate(&pulse, &grid, &b).unwrap().max_norm_defect() < 1e-9);
        let s = EnsembleState::uniform(grid.clone(), PointState::Spinor(Su2::IDENTITY)).unwrap();
        assert!(propagate(&pulse, &grid, &s).unwrap().max_norm_defect() < 1e-9);
    }

    #[test]
    fn composition() {
        let p1 = ControlSequence::new(0.1, vec![(1.0, 2.0), (-0.5, 0.3)], None).unwrap();
        let p2 = ControlSequence::new(0.1, vec![(0.2, -1.0)], None).unwrap();
        let grid = DispersionGrid::omega_epsilon(1.0, 3, 0.1, 3).unwrap();
        let init = EnsembleState::uniform(grid.clone(), PointState::Spinor(Su2::IDENTITY)).unwrap();
        let both = propagate(&p1.concat(&p2).unwrap(), &grid, &init).unwrap();
        let seq = propagate(&p2, &grid, &propagate(&p1, &grid, &init).unwrap()).unwrap();
        for (a, b) in both.states().iter().zip(seq.states()) {
            let (PointState::Spinor(a), PointState::Spinor(b)) = (a, b) else { panic!() };
            assert!(a.max_abs_diff(b) < 1e-10);
        }
    }

    #[test]
    fn epsilon_scaling_is_exact_at_zero_offset() {
        let (e, u, v) = (1.07, 0.83, -1.9);
        let a = step_propagator(0.0, e, u, v, 0.2).unwrap();
        let b = step_propagator(0.0, 1.0, e * u, e * v, 0.2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn drift_reversal() {
        assert!(drift_reversal_residual(0.9, 0.4, 1e-3).unwrap() < 1e-10);
    }

    #[test]
    fn phase_frame() {
        let pulse = ControlSequence::new(0.1, vec![(1.0, 2.0), (-0.5, 0.3), (2.0, 0.1)], None).unwrap();
        let grid = DispersionGrid::axis("theta", vec![0.0, 0.5, 1.0]).unwrap();
        assert!(phase_frame_check(&pulse, &grid, [0.0, 0.0, 1.0]).unwrap() < 1e-9);
        let zero = ControlSequence::zero(4, 0.1).unwrap();
        assert_eq!(phase_frame_check(&zero, &grid, [0.0, 0.0, 1.0]).unwrap(), 0.0);
        let no_theta = DispersionGrid::nominal();
        assert!(phase_frame_check(&pulse, &no_theta, [0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn zero_pulse_and_orthogonal_target() {
        let grid = DispersionGrid::omega_epsilon(1.0, 4, 0.1, 2).unwrap();
        let t = TargetSpec::constant(PointState::Bloch([1.0, 0.0, 0.0])).unwrap();
        let f = fidelity_map(&ControlSequence::zero(3, 0.1).unwrap(), &grid, &t).unwrap();
        assert!(f.values.iter().all(|&x| (x - 0.5).abs() < 1e-15));
        let init = EnsembleState::uniform(grid.clone(), PointState::Bloch([0.0, 0.0, 1.0])).unwrap();
        let out = propagate(&ControlSequence::zero(3, 0.1).unwrap(), &grid, &init).unwrap();
        assert_eq!(out, init);
    }

    #[test]
    fn invalid_sequences() {
        assert!(ControlSequence::new(0.0, vec![], None).is_err());
        assert!(ControlSequence::new(0.1, vec![(3.0, 4.0)], Some(4.9)).is_err());
        assert!(ControlSequence::new(0.1, vec![(3.0, 4.0)], Some(5.0)).is_ok());
        assert!(step_propagator(f64::NAN, 1.0, 0.0, 0.0, 1.0).is_err());
        let grid = DispersionGrid::nominal();
        let other = DispersionGrid::axis("epsilon", vec![1.0]).unwrap();
        let init = EnsembleState::uniform(other, PointState::Spinor(Su2::IDENTITY)).unwrap();
        assert!(propagate(&ControlSequence::zero(1, 1.0).unwrap(), &grid, &init).is_err());
    }
}
