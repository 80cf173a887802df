use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::poly::{eval_monomial, format_exponents, Exponents};
use crate::error::{invalid, Error, Result};
use crate::linalg;

/// A real function sampled on a parameter grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFunction {
    pub points: Vec<BTreeMap<String, f64>>,
    pub values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(points: Vec<BTreeMap<String, f64>>, values: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("target has non-finite samples");
        }
        Ok(Self { points, values })
    }

    /// Samples `f` on a one-parameter grid.
    pub fn on_axis(param: &str, grid: &[f64], f: impl Fn(f64) -> f64) -> Result<Self> {
        let points = grid
            .iter()
            .map(|&x| [(param.to_string(), x)].into_iter().collect())
            .collect();
        Self::new(points, grid.iter().map(|&x| f(x)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Candidate functions for a least-squares fit.
#[derive(Clone, Debug, PartialEq)]
pub enum FunctionFamily {
    Monomials(Vec<Exponents>),
    /// Family members given by their values at the target's grid points.
    Sampled(Vec<Vec<f64>>),
}

impl FunctionFamily {
    pub fn len(&self) -> usize {
        match self {
            FunctionFamily::Monomials(m) => m.len(),
            FunctionFamily::Sampled(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn labels(&self) -> Vec<String> {
        match self {
            FunctionFamily::Monomials(m) => m.iter().map(format_exponents).collect(),
            FunctionFamily::Sampled(s) => (0..s.len()).map(|i| format!("f{i}")).collect(),
        }
    }

    pub(crate) fn design_matrix(&self, target: &SampledFunction) -> Result<DMatrix<f64>> {
        let n = target.len();
        let mut a = DMatrix::zeros(n, self.len());
        match self {
            FunctionFamily::Monomials(ms) => {
                for (j, e) in ms.iter().enumerate() {
                    for (i, p) in target.points.iter().enumerate() {
                        a[(i, j)] = eval_monomial(e, p)?;
                    }
                }
            }
            FunctionFamily::Sampled(cols) => {
                for (j, c) in cols.iter().enumerate() {
                    if c.len() != n {
                        return Err(Error::GridMismatch(format!(
                            "family member {j} has {} samples, target has {n}",
                            c.len()
                        )));
                    }
                    for (i, v) in c.iter().enumerate() {
                        a[(i, j)] = *v;
                    }
                }
            }
        }
        Ok(a)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitVerdict {
    Achievable,
    NotAchievable,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FitResult {
    pub coefficients: Vec<f64>,
    /// Root-mean-square residual over the grid.
    pub l2_residual: f64,
    pub max_residual: f64,
    pub verdict: FitVerdict,
}

/// Least-squares fit of `target` by a linear combination of `family`.
pub fn approximable(target: &SampledFunction, family: &FunctionFamily, tol: f64) -> Result<FitResult> {
    if target.is_empty() {
        return invalid("target grid is empty");
    }
    if family.is_empty() {
        return invalid("function family is empty");
    }
    if !(tol >= 0.0) {
        return invalid("tolerance must be nonnegative");
    }
    let a = family.design_matrix(target)?;
    if linalg::rank(&a, linalg::LSQ_RCOND) == 0 {
        return Err(Error::Numerical("function family is degenerate on the grid".into()));
    }
    let b = DVector::from_column_slice(&target.values);
    let x = linalg::lstsq(&a, &b)?;
    let r = &a * &x - &b;
    let max_residual = r.amax();
    let l2_residual = (r.norm_squared() / r.len() as f64).sqrt();
    Ok(FitResult {
        coefficients: x.iter().copied().collect(),
        l2_residual,
        max_residual,
        verdict: if max_residual <= tol {
            FitVerdict::Achievable
        } else {
            FitVerdict::NotAchievable
        },
    })
}
