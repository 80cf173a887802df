use std::fmt;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, CMatrix, I, ONE, ZERO};

/// A labelled square complex matrix used as a Lie-algebra generator.
#[derive(Clone, PartialEq)]
pub struct GeneratorMatrix {
    label: String,
    entries: CMatrix,
}

impl fmt::Debug for GeneratorMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GeneratorMatrix({}, {}x{})", self.label, self.dim(), self.dim())
    }
}

impl GeneratorMatrix {
    pub fn new(label: impl Into<String>, entries: CMatrix) -> Result<Self> {
        if entries.nrows() == 0 || entries.nrows() != entries.ncols() {
            return invalid(format!(
                "generator must be square and nonempty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            ));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return invalid("generator has non-finite entries");
        }
        Ok(Self {
            label: label.into(),
            entries,
        })
    }

    /// Like [`new`](Self::new) but also requires the matrix to be
    /// skew-Hermitian to within `1e-12` of its norm.
    pub fn rotation(label: impl Into<String>, entries: CMatrix) -> Result<Self> {
        let g = Self::new(label, entries)?;
        let defect = linalg::fro(&(&g.entries + g.entries.adjoint()));
        if defect > 1e-12 * g.norm().max(f64::MIN_POSITIVE) {
            return invalid(format!(
                "generator {} is not skew-Hermitian (defect {defect:e})",
                g.label
            ));
        }
        Ok(g)
    }

    pub(crate) fn from_parts(label: impl Into<String>, entries: CMatrix) -> Self {
        Self {
            label: label.into(),
            entries,
        }
    }

    pub fn zeros(label: impl Into<String>, dim: usize) -> Self {
        Self::from_parts(label, CMatrix::zeros(dim, dim))
    }

    pub fn from_real(label: impl Into<String>, dim: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: rows.len(),
            });
        }
        let entries = CMatrix::from_row_iterator(dim, dim, rows.iter().map(|&x| Complex64::new(x, 0.0)));
        Self::new(label, entries)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        linalg::fro(&self.entries)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|z| *z == ZERO)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_parts(self.label.clone(), &self.entries * Complex64::new(s, 0.0))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dims(self, other)?;
        Ok(Self::from_parts(
            format!("{}+{}", self.label, other.label),
            &self.entries + &other.entries,
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dims(self, other)?;
        Ok(Self::from_parts(
            format!("{}-{}", self.label, other.label),
            &self.entries - &other.entries,
        ))
    }

    /// Real trace inner product `Re tr(A† B)`.
    pub fn inner(&self, other: &Self) -> f64 {
        linalg::re_inner(&self.entries, &other.entries)
    }

    /// Real and imaginary parts stacked into one real vector.
    pub(crate) fn to_real_vec(&self) -> Vec<f64> {
        self.entries
            .iter()
            .flat_map(|z| [z.re, z.im])
            .collect()
    }
}

fn check_dims(a: &GeneratorMatrix, b: &GeneratorMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// Commutator `[a, b] = ab − ba`.
pub fn bracket(a: &GeneratorMatrix, b: &GeneratorMatrix) -> Result<GeneratorMatrix> {
    check_dims(a, b)?;
    let ab = &a.entries * &b.entries;
    let ba = &b.entries * &a.entries;
    Ok(GeneratorMatrix::from_parts(
        format!("[{},{}]", a.label, b.label),
        ab - ba,
    ))
}

fn real3(label: &str, rows: [f64; 9]) -> GeneratorMatrix {
    GeneratorMatrix::from_parts(
        label,
        CMatrix::from_row_iterator(3, 3, rows.iter().map(|&x| Complex64::new(x, 0.0))),
    )
}

/// Generator of rotations about x, acting on Bloch vectors.
pub fn omega_x() -> GeneratorMatrix {
    real3("Ωx", [0., 0., 0., 0., 0., -1., 0., 1., 0.])
}

pub fn omega_y() -> GeneratorMatrix {
    real3("Ωy", [0., 0., 1., 0., 0., 0., -1., 0., 0.])
}

pub fn omega_z() -> GeneratorMatrix {
    real3("Ωz", [0., -1., 0., 1., 0., 0., 0., 0., 0.])
}

/// `Ωx`, `Ωy`, `Ωz` by axis index.
pub fn omega(axis: usize) -> GeneratorMatrix {
    match axis {
        0 => omega_x(),
        1 => omega_y(),
        _ => omega_z(),
    }
}

/// `σ_a ⊗ σ_b` on two qubits (qubit 1 is the left factor); index 3 is the identity.
pub fn two_qubit_pauli(a: usize, b: usize) -> CMatrix {
    let f = |k: usize| if k == 3 { linalg::identity(2) } else { linalg::pauli(k) };
    linalg::kron(&f(a), &f(b))
}

/// `B₁ = −2i σ_{1y} σ_{2z}`.
pub fn coupling_b1() -> GeneratorMatrix {
    GeneratorMatrix::from_parts("B1", two_qubit_pauli(1, 2) * (I * -2.0))
}

/// `B₂ = −2i σ_{1z} σ_{2z}`.
pub fn coupling_b2() -> GeneratorMatrix {
    GeneratorMatrix::from_parts("B2", two_qubit_pauli(2, 2) * (I * -2.0))
}

/// Strictly upper-triangular 3×3 basis `E12`, `E23`, `E13` of the Heisenberg algebra.
pub fn heisenberg_triple() -> [GeneratorMatrix; 3] {
    let e = |i: usize, j: usize, label: &str| {
        let mut m = CMatrix::zeros(3, 3);
        m[(i, j)] = ONE;
        GeneratorMatrix::from_parts(label, m)
    };
    [e(0, 1, "X"), e(1, 2, "Y"), e(0, 2, "Z")]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn so3_commutation() {
        let z = bracket(&omega_x(), &omega_y()).unwrap();
        assert_eq!(z.entries(), omega_z().entries());
        let x = bracket(&omega_y(), &omega_z()).unwrap();
        assert_eq!(x.entries(), omega_x().entries());
    }

    #[test]
    fn self_bracket_vanishes() {
        assert!(bracket(&omega_x(), &omega_x()).unwrap().is_zero());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let err = bracket(&omega_x(), &coupling_b1()).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn b1_b2_bracket_is_positive_multiple_of_minus_i_sigma1x() {
        // direct 4×4 product, independent of `bracket`
        let b1 = coupling_b1().into_entries();
        let b2 = coupling_b2().into_entries();
        let direct = &b1 * &b2 - &b2 * &b1;
        let got = bracket(&coupling_b1(), &coupling_b2()).unwrap();
        assert!(linalg::fro(&(got.entries() - &direct)) < 1e-14);
        let dir = two_qubit_pauli(0, 3) * (-I);
        let c = linalg::re_inner(&dir, &direct) / linalg::re_inner(&dir, &dir);
        assert!((c - 8.0).abs() < 1e-12);
        assert!(linalg::fro(&(direct - dir * Complex64::new(c, 0.0))) < 1e-12);
    }

    #[test]
    fn rotation_requires_skew_hermitian() {
        assert!(GeneratorMatrix::rotation("x", omega_x().into_entries()).is_ok());
        let sym = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ONE]);
        assert!(GeneratorMatrix::rotation("s", sym).is_err());
    }
}
