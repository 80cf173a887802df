use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::CMatrix;

/// Element of SU(2) stored by its Cayley–Klein parameters,
/// `U = [[α, −β̄], [β, ᾱ]]`.
///
/// As a spin state the element stands for its first column `(α, β)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Su2 {
    pub alpha: Complex64,
    pub beta: Complex64,
}

/// Unimodularity tolerance for [`Su2::new`].
pub const SU2_TOL: f64 = 1e-10;

impl Su2 {
    pub const IDENTITY: Su2 = Su2 {
        alpha: Complex64::new(1.0, 0.0),
        beta: Complex64::new(0.0, 0.0),
    };

    pub fn new(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let s = Self { alpha, beta };
        if !(s.defect() <= SU2_TOL) {
            return invalid(format!("|α|²+|β|² deviates from 1 by {:e}", s.defect()));
        }
        Ok(s)
    }

    pub(crate) fn new_unchecked(alpha: Complex64, beta: Complex64) -> Self {
        Self { alpha, beta }
    }

    /// `exp(−i φ/2 n·σ)` for a unit axis `n`.
    pub fn from_axis_angle(n: [f64; 3], phi: f64) -> Self {
        let (s, c) = (phi / 2.0).sin_cos();
        Self {
            alpha: Complex64::new(c, -n[2] * s),
            beta: Complex64::new(n[1] * s, -n[0] * s),
        }
    }

    /// `| |α|²+|β|² − 1 |`.
    pub fn defect(&self) -> f64 {
        (self.alpha.norm_sqr() + self.beta.norm_sqr() - 1.0).abs()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            alpha: self.alpha.conj(),
            beta: -self.beta,
        }
    }

    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::from_row_slice(
            2,
            2,
            &[self.alpha, -self.beta.conj(), self.beta, self.alpha.conj()],
        )
    }

    /// Reads the first column of a 2×2 matrix; no unitarity check.
    pub fn from_matrix(m: &CMatrix) -> Result<Self> {
        if m.nrows() != 2 || m.ncols() != 2 {
            return invalid("SU(2) element needs a 2x2 matrix");
        }
        Self::new(m[(0, 0)], m[(1, 0)])
    }

    /// Unit quaternion `(q0, q1, q2, q3)` with `U = q0 − i q·σ`.
    pub fn quaternion(&self) -> [f64; 4] {
        [self.alpha.re, -self.beta.im, self.beta.re, -self.alpha.im]
    }

    /// The SO(3) image acting on Bloch vectors.
    pub fn to_so3(&self) -> [[f64; 3]; 3] {
        let [q0, q1, q2, q3] = self.quaternion();
        [
            [
                1.0 - 2.0 * (q2 * q2 + q3 * q3),
                2.0 * (q1 * q2 - q0 * q3),
                2.0 * (q1 * q3 + q0 * q2),
            ],
            [
                2.0 * (q1 * q2 + q0 * q3),
                1.0 - 2.0 * (q1 * q1 + q3 * q3),
                2.0 * (q2 * q3 - q0 * q1),
            ],
            [
                2.0 * (q1 * q3 - q0 * q2),
                2.0 * (q2 * q3 + q0 * q1),
                1.0 - 2.0 * (q1 * q1 + q2 * q2),
            ],
        ]
    }

    pub fn rotate(&self, x: [f64; 3]) -> [f64; 3] {
        let r = self.to_so3();
        [0, 1, 2].map(|i| r[i][0] * x[0] + r[i][1] * x[1] + r[i][2] * x[2])
    }

    /// Bloch vector of the spin state `(α, β)`.
    pub fn bloch(&self) -> [f64; 3] {
        self.rotate([0.0, 0.0, 1.0])
    }

    /// `|⟨other|self⟩|²` of the first columns.
    pub fn state_overlap(&self, other: &Self) -> f64 {
        (other.alpha.conj() * self.alpha + other.beta.conj() * self.beta).norm_sqr()
    }

    /// `min_φ ‖ψ − e^{iφ} g‖` for the first columns.
    pub fn state_distance(&self, other: &Self) -> f64 {
        let ip = other.alpha.conj() * self.alpha + other.beta.conj() * self.beta;
        let ph = if ip.norm() > 0.0 { ip / ip.norm() } else { Complex64::new(1.0, 0.0) };
        ((self.alpha - ph * other.alpha).norm_sqr() + (self.beta - ph * other.beta).norm_sqr()).sqrt()
    }

    /// Largest entry-wise modulus difference between the matrices.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.alpha - other.alpha).norm().max((self.beta - other.beta).norm())
    }
}

impl Mul for Su2 {
    type Output = Su2;

    /// Matrix product: `(a * b)` applies `b` first.
    fn mul(self, b: Su2) -> Su2 {
        Su2 {
            alpha: self.alpha * b.alpha - self.beta.conj() * b.beta,
            beta: self.beta * b.alpha + self.alpha.conj() * b.beta,
        }
    }
}
