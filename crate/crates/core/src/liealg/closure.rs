use std::collections::{BTreeSet, HashMap};

use num_complex::Complex64;

use super::matrix::GeneratorMatrix;
use super::poly::{bracket_poly, DispersionPolyElement, Exponents};
use super::vector_field::{vf_bracket, PolyVectorField};
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, CMatrix};

pub const DEFAULT_MAX_DEPTH: usize = 8;

/// A new direction is accepted when its orthogonal residual exceeds this
/// fraction of its norm.
pub const SPAN_RTOL: f64 = 1e-10;

/// Outcome of the lower-central-series test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Nilpotency {
    /// `C_{step+1} = 0`.
    Nilpotent { step: usize },
    NotNilpotent,
    UndecidedAtBound,
}

/// Orthonormal basis of real vectors; shorter vectors are zero-padded.
#[derive(Clone, Debug, Default)]
pub(crate) struct OrthoBasis {
    vecs: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl OrthoBasis {
    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vecs
    }

    pub fn residual(&self, v: &[f64]) -> Vec<f64> {
        let width = self.vecs.iter().map(Vec::len).chain([v.len()]).max().unwrap_or(0);
        let mut r = v.to_vec();
        r.resize(width, 0.0);
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for b in &self.vecs {
                let c = dot(b, &r);
                for (ri, bi) in r.iter_mut().zip(b) {
                    *ri -= c * bi;
                }
            }
        }
        r
    }

    /// Adds `v` if its residual exceeds `SPAN_RTOL · max(‖v‖, scale)`.
    pub fn try_add(&mut self, v: &[f64], scale: f64) -> bool {
        let n = norm(v);
        if n == 0.0 {
            return false;
        }
        let r = self.residual(v);
        let rn = norm(&r);
        if rn > SPAN_RTOL * n.max(scale) {
            self.vecs.push(r.into_iter().map(|x| x / rn).collect());
            true
        } else {
            false
        }
    }

    pub fn contains(&self, v: &[f64], rtol: f64) -> bool {
        let n = norm(v);
        n == 0.0 || norm(&self.residual(v)) <= rtol * n
    }
}

/// Left-normed breadth-first generation of the Lie algebra spanned by `gens`.
///
/// Returns spanning elements that are linearly independent, and whether the
/// span closed under brackets within `max_depth` levels.
fn generate_algebra<T: Clone>(
    gens: &[T],
    max_depth: usize,
    br: &impl Fn(&T, &T) -> Result<T>,
    vectorize: &mut impl FnMut(&T) -> Vec<f64>,
) -> Result<(Vec<T>, bool)> {
    let mut basis = OrthoBasis::default();
    let mut elems = Vec::new();
    let mut frontier = Vec::new();
    for g in gens {
        if basis.try_add(&vectorize(g), 0.0) {
            elems.push(g.clone());
            frontier.push(g.clone());
        }
    }
    for _ in 2..=max_depth {
        let mut next = Vec::new();
        for g in gens {
            for x in &frontier {
                let b = br(g, x)?;
                let scale = norm(&vectorize(g)) * norm(&vectorize(x));
                if basis.try_add(&vectorize(&b), scale) {
                    elems.push(b.clone());
                    next.push(b);
                }
            }
        }
        if next.is_empty() {
            return Ok((elems, true));
        }
        frontier = next;
    }
    // depth bound hit: closed only if every pairwise bracket already lies in the span
    for a in &elems {
        for b in &elems {
            let c = vectorize(&br(a, b)?);
            let scale = norm(&vectorize(a)) * norm(&vectorize(b));
            if norm(&basis.residual(&c)) > SPAN_RTOL * norm(&c).max(scale) {
                return Ok((elems, false));
            }
        }
    }
    Ok((elems, true))
}

/// Lower central series `C₁ = g`, `C_{k+1} = [g, C_k]` on a spanning set of `g`.
fn lower_central_series<T: Clone>(
    algebra: &[T],
    max_steps: usize,
    br: &impl Fn(&T, &T) -> Result<T>,
    vectorize: &mut impl FnMut(&T) -> Vec<f64>,
) -> Result<Nilpotency> {
    let mut current: Vec<T> = algebra.to_vec();
    for step in 1..=max_steps {
        let mut span = OrthoBasis::default();
        let mut next = Vec::new();
        for x in algebra {
            for y in &current {
                let b = br(x, y)?;
                let scale = norm(&vectorize(x)) * norm(&vectorize(y));
                if span.try_add(&vectorize(&b), scale) {
                    next.push(b);
                }
            }
        }
        if next.is_empty() {
            return Ok(Nilpotency::Nilpotent { step });
        }
        if next.len() == current.len() {
            return Ok(Nilpotency::NotNilpotent);
        }
        current = next;
    }
    Ok(Nilpotency::UndecidedAtBound)
}

fn matrix_vec(m: &CMatrix) -> Vec<f64> {
    m.iter().flat_map(|z| [z.re, z.im]).collect()
}

fn matrix_bracket(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    Ok(a * b - b * a)
}

/// Closure and nilpotency of the matrix algebra generated by `mats`.
pub fn matrix_algebra(mats: &[GeneratorMatrix], max_depth: usize) -> Result<(Vec<CMatrix>, bool, Nilpotency)> {
    let raw: Vec<CMatrix> = mats.iter().map(|m| m.entries().clone()).collect();
    let (elems, closed) = generate_algebra(&raw, max_depth.max(2), &matrix_bracket, &mut |m| matrix_vec(m))?;
    let nil = if closed {
        lower_central_series(&elems, max_depth, &matrix_bracket, &mut |m| matrix_vec(m))?
    } else {
        Nilpotency::UndecidedAtBound
    };
    Ok((elems, closed, nil))
}

/// Nilpotency of the algebra generated by polynomial vector fields.
pub fn vf_nilpotency(gens: &[PolyVectorField], max_depth: usize) -> Result<Nilpotency> {
    if gens.is_empty() {
        return invalid("no generators");
    }
    let mut index: HashMap<(usize, Vec<u32>), usize> = HashMap::new();
    let mut vectorize = |f: &PolyVectorField| {
        let mut v = Vec::new();
        for (i, p) in f.components().iter().enumerate() {
            for (e, c) in p.terms() {
                let next = index.len();
                let k = *index.entry((i, e.clone())).or_insert(next);
                if v.len() <= k {
                    v.resize(k + 1, 0.0);
                }
                v[k] = *c;
            }
        }
        v
    };
    let (elems, closed) = generate_algebra(gens, max_depth.max(2), &vf_bracket, &mut vectorize)?;
    if !closed {
        return Ok(Nilpotency::UndecidedAtBound);
    }
    lower_central_series(&elems, max_depth, &vf_bracket, &mut vectorize)
}

/// Matrix-valued function sampled on a parameter grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledGenerator {
    pub label: String,
    pub values: Vec<CMatrix>,
}

impl SampledGenerator {
    pub fn new(label: impl Into<String>, values: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = values.first() else {
            return invalid("sampled generator has no samples");
        };
        let d = first.nrows();
        if values.iter().any(|m| m.nrows() != d || m.ncols() != d) {
            return invalid("sampled generator samples differ in shape");
        }
        Ok(Self {
            label: label.into(),
            values,
        })
    }

    pub fn from_fn(label: impl Into<String>, samples: &[f64], f: impl Fn(f64) -> CMatrix) -> Result<Self> {
        Self::new(label, samples.iter().map(|&s| f(s)).collect())
    }

    fn bracket(&self, other: &Self) -> Result<Self> {
        if self.values.len() != other.values.len() {
            return Err(Error::GridMismatch(format!(
                "{} vs {} samples",
                self.values.len(),
                other.values.len()
            )));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| matrix_bracket(a, b))
            .collect::<Result<_>>()?;
        Ok(Self {
            label: format!("[{},{}]", self.label, other.label),
            values,
        })
    }
}

/// Functions attached to a matrix direction.
#[derive(Clone, Debug, PartialEq)]
pub enum FunctionSet {
    Monomials(BTreeSet<Exponents>),
    /// One sampled coordinate function per generated element.
    Sampled(Vec<Vec<f64>>),
}

impl FunctionSet {
    pub fn len(&self) -> usize {
        match self {
            FunctionSet::Monomials(m) => m.len(),
            FunctionSet::Sampled(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug)]
enum Elements {
    Symbolic(Vec<DispersionPolyElement>),
    Sampled(Vec<SampledGenerator>),
}

#[derive(Clone, Debug)]
pub struct ClosureReport {
    /// Orthonormal (under `Re tr(A†B)`) matrix directions spanning the algebra.
    pub basis: Vec<GeneratorMatrix>,
    pub per_direction_functions: Vec<FunctionSet>,
    /// Deepest bracket level that produced a nonzero element.
    pub depth_reached: usize,
    pub nilpotency: Nilpotency,
    /// Whether the span is closed under brackets.
    pub closed: bool,
    elements: Elements,
}

impl ClosureReport {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    /// Number of distinct (up to scale) bracket elements generated.
    pub fn element_count(&self) -> usize {
        match &self.elements {
            Elements::Symbolic(e) => e.len(),
            Elements::Sampled(e) => e.len(),
        }
    }
}

/// Whether `a` is a scalar multiple of `b`.
fn parallel(a: &[f64], b: &[f64]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let (na, nb) = (norm(a), norm(b));
    na > 0.0 && nb > 0.0 && (dot(a, b).abs() - na * nb).abs() <= 1e-12 * na * nb
}

/// Breadth-first left-normed bracket words, deduplicated up to scale.
fn bfs_words<T: Clone>(
    gens: &[T],
    max_depth: usize,
    br: impl Fn(&T, &T) -> Result<T>,
    signature: impl Fn(&T) -> Option<(Vec<String>, Vec<f64>)>,
) -> Result<(Vec<T>, usize)> {
    let mut all: Vec<(T, (Vec<String>, Vec<f64>))> = Vec::new();
    let mut frontier = Vec::new();
    let push = |x: T, all: &mut Vec<(T, (Vec<String>, Vec<f64>))>| -> Option<T> {
        let sig = signature(&x)?;
        if all.iter().any(|(_, s)| s.0 == sig.0 && parallel(&s.1, &sig.1)) {
            return None;
        }
        all.push((x.clone(), sig));
        Some(x)
    };
    for g in gens {
        if let Some(x) = push(g.clone(), &mut all) {
            frontier.push(x);
        }
    }
    let mut depth_reached = usize::from(!frontier.is_empty());
    for depth in 2..=max_depth {
        let mut next = Vec::new();
        let mut nonzero = false;
        for g in gens {
            for x in &frontier {
                let b = br(g, x)?;
                if signature(&b).is_some() {
                    nonzero = true;
                }
                if let Some(b) = push(b, &mut all) {
                    next.push(b);
                }
            }
        }
        if nonzero {
            depth_reached = depth;
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok((all.into_iter().map(|(x, _)| x).collect(), depth_reached))
}

fn check_depth(n_gens: usize, max_depth: usize) -> Result<()> {
    if n_gens == 0 {
        return invalid("lie_closure needs at least one generator");
    }
    if max_depth < 1 {
        return invalid("max_depth must be at least 1");
    }
    Ok(())
}

fn orthonormal_basis(mats: impl Iterator<Item = CMatrix>, dim: usize) -> OrthoBasis {
    let mut basis = OrthoBasis::default();
    for m in mats {
        debug_assert_eq!(m.nrows(), dim);
        basis.try_add(&matrix_vec(&m), 0.0);
    }
    basis
}

fn basis_matrices(basis: &OrthoBasis, dim: usize) -> Vec<GeneratorMatrix> {
    basis
        .vectors()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let m = CMatrix::from_iterator(
                dim,
                dim,
                v.chunks(2).map(|c| Complex64::new(c[0], c[1])),
            );
            GeneratorMatrix::from_parts(format!("e{i}"), m)
        })
        .collect()
}

fn finish(
    basis: OrthoBasis,
    dim: usize,
    max_depth: usize,
    depth_reached: usize,
    elements: Elements,
) -> Result<ClosureReport> {
    let basis = basis_matrices(&basis, dim);
    let (_, closed, nilpotency) = matrix_algebra(&basis, max_depth)?;
    let mut report = ClosureReport {
        basis: basis.clone(),
        per_direction_functions: Vec::new(),
        depth_reached,
        nilpotency,
        closed,
        elements,
    };
    report.per_direction_functions = basis
        .iter()
        .map(|b| project_functions(&report, b))
        .collect();
    Ok(report)
}

/// Closure of dispersion-polynomial generators with monomial bookkeeping.
///
/// Brackets are formed breadth first up to `max_depth` levels; every monomial
/// of every generated element is credited to each basis direction its
/// coefficient has a component along.
pub fn lie_closure(gens: &[DispersionPolyElement], max_depth: usize) -> Result<ClosureReport> {
    check_depth(gens.len(), max_depth)?;
    let dim = gens[0].dim();
    if let Some(g) = gens.iter().find(|g| g.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: g.dim(),
        });
    }
    let signature = |e: &DispersionPolyElement| {
        if e.is_zero() {
            return None;
        }
        let keys = e
            .monomials()
            .iter()
            .map(|m| super::poly::format_exponents(&m.exponents))
            .collect();
        let v = e.monomials().iter().flat_map(|m| m.coeff.to_real_vec()).collect();
        Some((keys, v))
    };
    let (elems, depth_reached) = bfs_words(gens, max_depth, bracket_poly, signature)?;
    let basis = orthonormal_basis(
        elems
            .iter()
            .flat_map(|e| e.monomials().iter().map(|m| m.coeff.entries().clone())),
        dim,
    );
    finish(basis, dim, max_depth, depth_reached, Elements::Symbolic(elems))
}

/// Closure of generators sampled on a parameter grid.
pub fn lie_closure_sampled(gens: &[SampledGenerator], max_depth: usize) -> Result<ClosureReport> {
    check_depth(gens.len(), max_depth)?;
    let n = gens[0].values.len();
    let dim = gens[0].values[0].nrows();
    if gens.iter().any(|g| g.values.len() != n || g.values[0].nrows() != dim) {
        return Err(Error::GridMismatch("sampled generators differ in grid or dimension".into()));
    }
    let signature = |e: &SampledGenerator| {
        let v: Vec<f64> = e.values.iter().flat_map(matrix_vec).collect();
        (norm(&v) > 0.0).then(|| (Vec::new(), v))
    };
    let (elems, depth_reached) = bfs_words(gens, max_depth, |a, b| a.bracket(b), signature)?;
    let basis = orthonormal_basis(elems.iter().flat_map(|e| e.values.iter().cloned()), dim);
    finish(basis, dim, max_depth, depth_reached, Elements::Sampled(elems))
}

fn project_functions(report: &ClosureReport, direction: &GeneratorMatrix) -> FunctionSet {
    let d2 = direction.inner(direction);
    match &report.elements {
        Elements::Symbolic(elems) => {
            let mut set = BTreeSet::new();
            for e in elems {
                for m in e.monomials() {
                    let c = direction.inner(&m.coeff);
                    if c.abs() > SPAN_RTOL * m.coeff.norm() * d2.sqrt() {
                        set.insert(m.exponents.clone());
                    }
                }
            }
            FunctionSet::Monomials(set)
        }
        Elements::Sampled(elems) => {
            let mut fns: Vec<Vec<f64>> = Vec::new();
            for e in elems {
                let f: Vec<f64> = e
                    .values
                    .iter()
                    .map(|m| linalg::re_inner(direction.entries(), m) / d2)
                    .collect();
                let scale = e.values.iter().map(linalg::fro).fold(0.0, f64::max) / d2.sqrt();
                if f.iter().any(|x| x.abs() > SPAN_RTOL * scale)
                    && !fns.iter().any(|g| parallel(g, &f))
                {
                    fns.push(f);
                }
            }
            FunctionSet::Sampled(fns)
        }
    }
}

/// Functions reachable along `direction`, which must lie in the report's span.
pub fn reachable_functions(report: &ClosureReport, direction: &GeneratorMatrix) -> Result<FunctionSet> {
    let dim = report.basis.first().map(GeneratorMatrix::dim).unwrap_or(0);
    if direction.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: direction.dim(),
        });
    }
    let n = direction.norm();
    if n == 0.0 {
        return invalid("direction is zero");
    }
    let mut basis = OrthoBasis::default();
    for b in &report.basis {
        basis.try_add(&b.to_real_vec(), 0.0);
    }
    if !basis.contains(&direction.to_real_vec(), 1e-8) {
        return invalid(format!(
            "direction {} lies outside the span of the closure",
            direction.label()
        ));
    }
    Ok(project_functions(report, direction))
}

/// Convenience: closure of a set of plain matrices.
pub fn matrix_closure(mats: &[GeneratorMatrix], max_depth: usize) -> Result<ClosureReport> {
    let gens: Vec<_> = mats.iter().cloned().map(DispersionPolyElement::constant).collect();
    lie_closure(&gens, max_depth)
}
