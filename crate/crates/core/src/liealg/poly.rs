use std::collections::BTreeMap;

use num_complex::Complex64;

use super::matrix::{bracket, GeneratorMatrix};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Exponent map of a dispersion monomial, e.g. `{"eps1": 3, "eps2": 1}`.
/// Canonical maps never store a zero exponent.
pub type Exponents = BTreeMap<String, u32>;

/// Builds a canonical exponent map from `(name, power)` pairs.
pub fn exponents(pairs: &[(&str, u32)]) -> Exponents {
    let mut e = Exponents::new();
    for &(name, p) in pairs {
        if p > 0 {
            *e.entry(name.to_string()).or_insert(0) += p;
        }
    }
    e
}

fn add_exponents(a: &Exponents, b: &Exponents) -> Exponents {
    let mut out = a.clone();
    for (k, v) in b {
        *out.entry(k.clone()).or_insert(0) += v;
    }
    out
}

/// Value of a monomial at a parameter point.
pub fn eval_monomial(e: &Exponents, params: &BTreeMap<String, f64>) -> Result<f64> {
    let mut v = 1.0;
    for (name, &p) in e {
        let x = params
            .get(name)
            .ok_or_else(|| Error::InvalidInput(format!("missing parameter '{name}'")))?;
        v *= x.powi(p as i32);
    }
    Ok(v)
}

pub fn format_exponents(e: &Exponents) -> String {
    if e.is_empty() {
        return "1".into();
    }
    e.iter()
        .map(|(k, v)| if *v == 1 { k.clone() } else { format!("{k}^{v}") })
        .collect::<Vec<_>>()
        .join("*")
}

#[derive(Clone, Debug, PartialEq)]
pub struct DispersionMonomial {
    pub exponents: Exponents,
    pub coeff: GeneratorMatrix,
}

impl DispersionMonomial {
    pub fn new(exponents: Exponents, coeff: GeneratorMatrix) -> Self {
        let exponents = exponents.into_iter().filter(|(_, p)| *p > 0).collect();
        Self { exponents, coeff }
    }
}

/// A sum of matrix directions weighted by dispersion monomials.
#[derive(Clone, Debug, PartialEq)]
pub struct DispersionPolyElement {
    dim: usize,
    monomials: Vec<DispersionMonomial>,
}

/// Monomials whose coefficient falls below this fraction of the largest
/// contribution are pruned after a merge.
const PRUNE_RTOL: f64 = 1e-14;

impl DispersionPolyElement {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            monomials: Vec::new(),
        }
    }

    pub fn monomial(exponents: Exponents, coeff: GeneratorMatrix) -> Self {
        let dim = coeff.dim();
        Self::from_monomials(dim, vec![DispersionMonomial::new(exponents, coeff)])
            .expect("single monomial has consistent dimension")
    }

    /// `x·G` for one parameter `x` with power 1.
    pub fn linear(param: &str, coeff: GeneratorMatrix) -> Self {
        Self::monomial(exponents(&[(param, 1)]), coeff)
    }

    /// A parameter-free generator.
    pub fn constant(coeff: GeneratorMatrix) -> Self {
        Self::monomial(Exponents::new(), coeff)
    }

    pub fn from_monomials(dim: usize, monomials: Vec<DispersionMonomial>) -> Result<Self> {
        if let Some(m) = monomials.iter().find(|m| m.coeff.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: m.coeff.dim(),
            });
        }
        Ok(Self::canonical(dim, monomials))
    }

    fn canonical(dim: usize, monomials: Vec<DispersionMonomial>) -> Self {
        let scale = monomials
            .iter()
            .map(|m| m.coeff.norm())
            .fold(0.0_f64, f64::max);
        let mut merged: BTreeMap<Exponents, (String, CMatrix)> = BTreeMap::new();
        for m in monomials {
            let label = m.coeff.label().to_string();
            let entries = m.coeff.into_entries();
            merged
                .entry(m.exponents)
                .and_modify(|(_, acc)| *acc += &entries)
                .or_insert((label, entries));
        }
        let monomials = merged
            .into_iter()
            .filter_map(|(exponents, (label, entries))| {
                let g = GeneratorMatrix::from_parts(label, entries);
                let n = g.norm();
                (n > PRUNE_RTOL * scale && n > 0.0).then(|| DispersionMonomial { exponents, coeff: g })
            })
            .collect();
        Self { dim, monomials }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn monomials(&self) -> &[DispersionMonomial] {
        &self.monomials
    }

    pub fn is_zero(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::canonical(
            self.dim,
            self.monomials
                .iter()
                .map(|m| DispersionMonomial {
                    exponents: m.exponents.clone(),
                    coeff: m.coeff.scale(s),
                })
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut all = self.monomials.clone();
        all.extend(other.monomials.iter().cloned());
        Ok(Self::canonical(self.dim, all))
    }

    /// Coefficient matrix attached to an exponent map, if present.
    pub fn coefficient(&self, e: &Exponents) -> Option<&GeneratorMatrix> {
        self.monomials
            .iter()
            .find(|m| &m.exponents == e)
            .map(|m| &m.coeff)
    }

    /// Matrix obtained by substituting parameter values.
    pub fn evaluate(&self, params: &BTreeMap<String, f64>) -> Result<CMatrix> {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for m in &self.monomials {
            let w = eval_monomial(&m.exponents, params)?;
            out += m.coeff.entries() * Complex64::new(w, 0.0);
        }
        Ok(out)
    }
}

/// Bracket of two dispersion polynomials: monomial brackets with added exponents.
pub fn bracket_poly(
    a: &DispersionPolyElement,
    b: &DispersionPolyElement,
) -> Result<DispersionPolyElement> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    let mut out = Vec::with_capacity(a.monomials.len() * b.monomials.len());
    for ma in &a.monomials {
        for mb in &b.monomials {
            out.push(DispersionMonomial {
                exponents: add_exponents(&ma.exponents, &mb.exponents),
                coeff: bracket(&ma.coeff, &mb.coeff)?,
            });
        }
    }
    Ok(DispersionPolyElement::canonical(a.dim, out))
}

/// `ad_x^k(y)`.
pub fn ad_power(
    x: &DispersionPolyElement,
    k: usize,
    y: &DispersionPolyElement,
) -> Result<DispersionPolyElement> {
    let mut acc = y.clone();
    for _ in 0..k {
        acc = bracket_poly(x, &acc)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::super::matrix::{omega_x, omega_y, omega_z};
    use super::*;

    #[test]
    fn eps_bracket_raises_power() {
        let a = DispersionPolyElement::linear("eps", omega_x());
        let b = DispersionPolyElement::linear("eps", omega_y());
        let c = bracket_poly(&a, &b).unwrap();
        assert_eq!(c.monomials().len(), 1);
        assert_eq!(c.monomials()[0].exponents, exponents(&[("eps", 2)]));
        assert_eq!(c.monomials()[0].coeff.entries(), omega_z().entries());
    }

    #[test]
    fn bracket_with_zero_is_zero() {
        let a = DispersionPolyElement::linear("eps", omega_x());
        assert!(bracket_poly(&a, &DispersionPolyElement::zero(3)).unwrap().is_zero());
    }

    #[test]
    fn merge_and_prune() {
        let x = DispersionPolyElement::linear("eps", omega_x());
        let sum = x.add(&x.scale(-1.0)).unwrap();
        assert!(sum.is_zero());
        let twice = x.add(&x).unwrap();
        assert_eq!(twice.monomials().len(), 1);
        assert_eq!(twice.monomials()[0].coeff.entries(), omega_x().scale(2.0).entries());
    }

    #[test]
    fn zero_exponents_are_not_stored() {
        assert!(exponents(&[("eps", 0)]).is_empty());
        let m = DispersionMonomial::new(
            [("eps".to_string(), 0u32)].into_iter().collect(),
            omega_x(),
        );
        assert!(m.exponents.is_empty());
    }

    #[test]
    fn evaluate_substitutes_parameters() {
        let x = DispersionPolyElement::monomial(exponents(&[("eps", 3)]), omega_x());
        let p: BTreeMap<String, f64> = [("eps".to_string(), 2.0)].into_iter().collect();
        let m = x.evaluate(&p).unwrap();
        assert_eq!(m, omega_x().scale(8.0).into_entries());
        assert!(x.evaluate(&BTreeMap::new()).is_err());
    }
}
