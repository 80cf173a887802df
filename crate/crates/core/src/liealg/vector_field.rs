use std::collections::BTreeMap;

use crate::error::{invalid, Error, Result};

/// Real multivariate polynomial in a fixed number of variables.
///
/// Terms are keyed by exponent vectors; zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    /// The coordinate `x_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(e, 1.0);
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Vec<u32>, f64)>) -> Result<Self> {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(Error::DimensionMismatch {
                    expected: nvars,
                    found: e.len(),
                });
            }
            if !c.is_finite() {
                return invalid("non-finite polynomial coefficient");
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, e: Vec<u32>, c: f64) {
        let entry = self.terms.entry(e).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.retain(|_, v| *v != 0.0);
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, f64> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    /// Partial derivative with respect to `x_i`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut d = e.clone();
                d[i] -= 1;
                out.add_term(d, c * e[i] as f64);
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(x).map(|(&p, &xi)| xi.powi(p as i32)).product::<f64>())
            .sum()
    }
}

/// Polynomial vector field on `R^nvars`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyVectorField {
    nvars: usize,
    components: Vec<Polynomial>,
}

impl PolyVectorField {
    pub fn new(components: Vec<Polynomial>) -> Result<Self> {
        let nvars = components.len();
        if nvars == 0 {
            return invalid("vector field needs at least one component");
        }
        if let Some(p) = components.iter().find(|p| p.nvars() != nvars) {
            return Err(Error::DimensionMismatch {
                expected: nvars,
                found: p.nvars(),
            });
        }
        Ok(Self { nvars, components })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Polynomial::is_zero)
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|p| p.eval(x)).collect()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            nvars: self.nvars,
            components: self.components.iter().map(|p| p.scale(s)).collect(),
        }
    }

    /// `(Dv) w`, the derivative of `v` along `w`.
    fn directional(v: &Self, w: &Self) -> Vec<Polynomial> {
        (0..v.nvars)
            .map(|i| {
                (0..v.nvars).fold(Polynomial::zero(v.nvars), |acc, j| {
                    acc.add(&v.components[i].derivative(j).mul(&w.components[j]))
                })
            })
            .collect()
    }
}

/// Vector-field bracket `[f, g] = (Dg) f − (Df) g`.
pub fn vf_bracket(f: &PolyVectorField, g: &PolyVectorField) -> Result<PolyVectorField> {
    if f.nvars != g.nvars {
        return Err(Error::DimensionMismatch {
            expected: f.nvars,
            found: g.nvars,
        });
    }
    let dg_f = PolyVectorField::directional(g, f);
    let df_g = PolyVectorField::directional(f, g);
    Ok(PolyVectorField {
        nvars: f.nvars,
        components: dg_f
            .iter()
            .zip(&df_g)
            .map(|(a, b)| a.add(&b.scale(-1.0)))
            .collect(),
    })
}

/// The nonholonomic-integrator fields `g₁ = (1, 0, −x₂)`, `g₂ = (0, 1, x₁)`.
pub fn heisenberg_fields() -> (PolyVectorField, PolyVectorField) {
    let g1 = PolyVectorField::new(vec![
        Polynomial::constant(3, 1.0),
        Polynomial::zero(3),
        Polynomial::var(3, 1).scale(-1.0),
    ])
    .expect("three components");
    let g2 = PolyVectorField::new(vec![
        Polynomial::zero(3),
        Polynomial::constant(3, 1.0),
        Polynomial::var(3, 0),
    ])
    .expect("three components");
    (g1, g2)
}
