//! Ensembles of linear systems `ẋ = A_s x + B_s u` sampled at finitely many
//! parameter values: companion forms, the necessary conditions for steering
//! them with one control, least-squares reachability and the invariant of
//! the scaled nonholonomic integrator.

mod companion;
mod heisenberg;
mod reach;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use companion::{
    companion_matrix, companion_transform, ensemble_necessary_conditions, shifted_krylov_rank, CompanionForm,
    ConditionReport, CHARPOLY_RTOL,
};
pub use heisenberg::{heisenberg_invariant, heisenberg_target_residual, HeisenbergReport, RATIO_RTOL};
pub use reach::{reachability_residual, zero_order_hold};

/// One member of a linear ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSystemSample {
    /// Parameter value(s) of this member.
    pub s: Vec<f64>,
    pub a: DMatrix<f64>,
    /// `n × m` input matrix; single-input systems have `m = 1`.
    pub b: DMatrix<f64>,
}

impl LinearSystemSample {
    pub fn new(s: Vec<f64>, a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return invalid(format!("A must be square and nonempty, got {}x{}", a.nrows(), a.ncols()));
        }
        if b.nrows() != n || b.ncols() == 0 {
            return invalid(format!("B must have {n} rows and at least one column"));
        }
        if a.iter().chain(b.iter()).chain(&s).any(|x| !x.is_finite()) {
            return invalid("system entries must be finite");
        }
        Ok(Self { s, a, b })
    }

    /// Single-input sample from a column `b`.
    pub fn single_input(s: Vec<f64>, a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let n = b.len();
        Self::new(s, a, DMatrix::from_column_slice(n, 1, b.as_slice()))
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    /// `[B, AB, …, A^{n−1}B]`.
    pub fn controllability_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        let m = self.inputs();
        let mut c = DMatrix::zeros(n, n * m);
        let mut block = self.b.clone();
        for k in 0..n {
            c.view_mut((0, k * m), (n, m)).copy_from(&block);
            block = &self.a * block;
        }
        c
    }
}

/// Row-major matrix, or a bare vector read as one column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum MatrixRecord {
    Column(Vec<f64>),
    Rows(Vec<Vec<f64>>),
}

impl MatrixRecord {
    fn to_matrix(&self, what: &str) -> Result<DMatrix<f64>> {
        match self {
            MatrixRecord::Column(v) => Ok(DMatrix::from_column_slice(v.len(), 1, v)),
            MatrixRecord::Rows(rows) => {
                let cols = rows.first().map_or(0, Vec::len);
                if rows.iter().any(|r| r.len() != cols) {
                    return invalid(format!("{what} has ragged rows"));
                }
                Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
            }
        }
    }

    fn from_matrix(m: &DMatrix<f64>) -> Self {
        MatrixRecord::Rows(m.row_iter().map(|r| r.iter().copied().collect()).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleRecord {
    #[serde(default)]
    s: Vec<f64>,
    a: MatrixRecord,
    b: MatrixRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleSetRecord {
    samples: Vec<SampleRecord>,
    /// Optional per-sample targets for reachability checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    targets: Option<Vec<Vec<f64>>>,
}

/// A sample set as read from JSON.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    pub samples: Vec<LinearSystemSample>,
    pub targets: Option<Vec<DVector<f64>>>,
}

impl SampleSet {
    /// Parse `{"samples": [{"s": [..], "a": [[..]], "b": [..]}], "targets": [[..]]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let rec: SampleSetRecord = serde_json::from_str(text).map_err(|e| {
            crate::Error::InvalidInput(format!("sample set line {} column {}: {e}", e.line(), e.column()))
        })?;
        let samples = rec
            .samples
            .iter()
            .enumerate()
            .map(|(i, r)| {
                LinearSystemSample::new(r.s.clone(), r.a.to_matrix("A")?, r.b.to_matrix("B")?)
                    .map_err(|e| crate::Error::InvalidInput(format!("sample {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let targets = rec.targets.map(|t| t.into_iter().map(DVector::from_vec).collect());
        Ok(Self { samples, targets })
    }

    pub fn to_json(&self) -> String {
        let rec = SampleSetRecord {
            samples: self
                .samples
                .iter()
                .map(|s| SampleRecord {
                    s: s.s.clone(),
                    a: MatrixRecord::from_matrix(&s.a),
                    b: MatrixRecord::from_matrix(&s.b),
                })
                .collect(),
            targets: self.targets.as_ref().map(|t| t.iter().map(|v| v.iter().copied().collect()).collect()),
        };
        serde_json::to_string_pretty(&rec).expect("sample sets serialise")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_set_json_roundtrip() {
        let text = r#"{"samples": [
            {"s": [1.0], "a": [[0, 1], [-2, -3]], "b": [0, 1]},
            {"s": [2.0], "a": [[0, 1], [-4, -3]], "b": [[0], [1]]}
        ], "targets": [[1, 0], [1, 0]]}"#;
        let set = SampleSet::from_json(text).unwrap();
        assert_eq!(set.samples.len(), 2);
        assert_eq!(set.samples[0].b, set.samples[1].b);
        assert_eq!(set.samples[1].a[(1, 0)], -4.0);
        assert_eq!(SampleSet::from_json(&set.to_json()).unwrap(), set);
    }

    #[test]
    fn malformed_sample_sets_rejected() {
        for bad in [
            r#"{"samples": [{"a": [[0, 1], [2]], "b": [0, 1]}]}"#,
            r#"{"samples": [{"a": [[0, 1], [2, 3]], "b": [0, 1, 2]}]}"#,
            r#"{"samples": [{"a": [[0, 1], [2, 3]], "b": [0, 1], "c": 1}]}"#,
            r#"{"samples": "#,
        ] {
            assert!(SampleSet::from_json(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn controllability_matrix_columns() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -2.0, -3.0]);
        let s = LinearSystemSample::single_input(vec![], a, DVector::from_vec(vec![0.0, 1.0])).unwrap();
        let c = s.controllability_matrix();
        assert_eq!(c, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, -3.0]));
    }
}
