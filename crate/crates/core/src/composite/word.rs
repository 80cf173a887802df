use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::liealg::{bracket_poly, DispersionPolyElement, Exponents, GeneratorMatrix};

/// Deepest bracket nesting the compilers will realise.
pub const MAX_WORD_DEPTH: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WordNode {
    Leaf(String),
    Ad(Box<BracketWord>, Box<BracketWord>),
}

/// `scale · node`, where `Ad(a, b)` stands for `[a, b]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketWord {
    pub node: WordNode,
    pub scale: f64,
}

/// One directly accessible exponential `exp(strength · G_label)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeafPulse {
    pub label: String,
    pub strength: f64,
}

impl BracketWord {
    pub fn leaf(label: impl Into<String>) -> Self {
        Self {
            node: WordNode::Leaf(label.into()),
            scale: 1.0,
        }
    }

    pub fn ad(a: BracketWord, b: BracketWord) -> Self {
        Self {
            node: WordNode::Ad(Box::new(a), Box::new(b)),
            scale: 1.0,
        }
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.scale *= s;
        self
    }

    /// Bracket nesting depth; a leaf has depth 0.
    pub fn depth(&self) -> usize {
        match &self.node {
            WordNode::Leaf(_) => 0,
            WordNode::Ad(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    pub fn labels(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_labels(&mut out);
        out
    }

    fn collect_labels(&self, out: &mut BTreeSet<String>) {
        match &self.node {
            WordNode::Leaf(l) => {
                out.insert(l.clone());
            }
            WordNode::Ad(a, b) => {
                a.collect_labels(out);
                b.collect_labels(out);
            }
        }
    }

    /// The word as a dispersion polynomial, with leaves looked up in `gens`.
    pub fn evaluate(&self, gens: &BTreeMap<String, DispersionPolyElement>) -> Result<DispersionPolyElement> {
        let inner = match &self.node {
            WordNode::Leaf(l) => gens
                .get(l)
                .cloned()
                .ok_or_else(|| Error::InvalidInput(format!("unknown generator label '{l}'")))?,
            WordNode::Ad(a, b) => bracket_poly(&a.evaluate(gens)?, &b.evaluate(gens)?)?,
        };
        Ok(inner.scale(self.scale))
    }

    /// Leaf exponentials, in time order, whose product approximates
    /// `exp(t · word)`.
    ///
    /// `[a, b]` at strength `τ > 0` is the group commutator
    /// `e^{−sa} e^{−sb} e^{sa} e^{sb}` with `s = √τ`; negative `τ` swaps
    /// the operands. `mirrored` uses `−s` instead, which has the same
    /// leading term and the opposite third-order term.
    pub fn realize(&self, t: f64, mirrored: bool) -> Result<Vec<LeafPulse>> {
        if self.depth() > MAX_WORD_DEPTH {
            return invalid(format!("word depth {} exceeds {MAX_WORD_DEPTH}", self.depth()));
        }
        if !t.is_finite() {
            return invalid("word strength must be finite");
        }
        let mut out = Vec::new();
        self.realize_into(t, mirrored, &mut out);
        Ok(out)
    }

    fn realize_into(&self, t: f64, mirrored: bool, out: &mut Vec<LeafPulse>) {
        let tau = t * self.scale;
        if tau == 0.0 {
            return;
        }
        match &self.node {
            WordNode::Leaf(l) => out.push(LeafPulse {
                label: l.clone(),
                strength: tau,
            }),
            WordNode::Ad(a, b) => {
                let (p, q) = if tau > 0.0 { (a, b) } else { (b, a) };
                let s = if mirrored { -tau.abs().sqrt() } else { tau.abs().sqrt() };
                q.realize_into(s, mirrored, out);
                p.realize_into(s, mirrored, out);
                q.realize_into(-s, mirrored, out);
                p.realize_into(-s, mirrored, out);
            }
        }
    }
}

/// Adds adjacent pulses on the same label and drops zeros.
pub fn merge_leaves(leaves: Vec<LeafPulse>) -> Vec<LeafPulse> {
    let mut out: Vec<LeafPulse> = Vec::with_capacity(leaves.len());
    for l in leaves {
        match out.last_mut() {
            Some(last) if last.label == l.label => last.strength += l.strength,
            _ => out.push(l),
        }
        if out.last().is_some_and(|x| x.strength == 0.0) {
            out.pop();
        }
    }
    out
}

/// `exp(t · word)` split into `m` equal pieces, alternating plain and
/// mirrored commutators so that third-order errors cancel in pairs.
pub fn subdivided(word: &BracketWord, t: f64, m: usize) -> Result<Vec<LeafPulse>> {
    if m == 0 {
        return invalid("subdivision count must be positive");
    }
    let mut out = Vec::new();
    for k in 0..m {
        out.extend(word.realize(t / m as f64, k % 2 == 1)?);
    }
    Ok(merge_leaves(out))
}

/// Projection of a single-monomial word value onto `direction`.
///
/// Fails unless the value is exactly one monomial with the expected
/// exponents and a coefficient parallel to `direction`.
pub fn word_coefficient(value: &DispersionPolyElement, expected: &Exponents, direction: &GeneratorMatrix) -> Result<f64> {
    let ms = value.monomials();
    if ms.len() != 1 || &ms[0].exponents != expected {
        return Err(Error::Infeasible(format!(
            "word does not reduce to a single {expected:?} term"
        )));
    }
    let c = &ms[0].coeff;
    let k = direction.inner(c) / direction.inner(direction);
    let off = c.sub(&direction.scale(k))?.norm();
    if off > 1e-12 * c.norm() || k == 0.0 {
        return Err(Error::Infeasible(format!(
            "word direction is not along {}",
            direction.label()
        )));
    }
    Ok(k)
}

fn x() -> BracketWord {
    BracketWord::leaf("x")
}

fn y() -> BracketWord {
    BracketWord::leaf("y")
}

/// Word built from `px` copies of the `x` leaf and `py` copies of the `y`
/// leaf whose value lies along `Ω_axis` (0, 1, 2 = x, y, z).
///
/// With leaves `ε₁Ωx`, `ε₂Ωy` the value is a multiple of `ε₁^px ε₂^py`.
/// Reachable exponents: x needs `px` odd, `py` even and not `(≥3, 0)`;
/// y needs `px` even, `py` odd and not `(0, ≥3)`; z needs both odd.
pub fn direction_word(axis: usize, px: u32, py: u32) -> Result<BracketWord> {
    let unreachable = || {
        Err(Error::Infeasible(format!(
            "no bracket of the x and y generators gives ε₁^{px} ε₂^{py} along axis {axis}"
        )))
    };
    match axis {
        0 => match (px, py) {
            (1, 0) => Ok(x()),
            (p, q) if p % 2 == 1 && q % 2 == 0 && q >= 2 => Ok(BracketWord::ad(y(), direction_word(2, p, q - 1)?)),
            _ => unreachable(),
        },
        1 => match (px, py) {
            (0, 1) => Ok(y()),
            (p, q) if p % 2 == 0 && q % 2 == 1 && p >= 2 => Ok(BracketWord::ad(direction_word(2, p - 1, q)?, x())),
            _ => unreachable(),
        },
        2 => match (px, py) {
            (p, q) if p % 2 == 1 && q % 2 == 1 => {
                if q >= 3 {
                    Ok(BracketWord::ad(direction_word(0, p, q - 1)?, y()))
                } else {
                    Ok(BracketWord::ad(x(), direction_word(1, p - 1, 1)?))
                }
            }
            _ => unreachable(),
        },
        _ => invalid(format!("axis index {axis} out of range")),
    }
}

/// `ad_a^k(b)` as a word.
pub fn ad_power_word(a: &BracketWord, k: usize, b: BracketWord) -> BracketWord {
    (0..k).fold(b, |acc, _| BracketWord::ad(a.clone(), acc))
}

/// Words `ad_{ε₁Ωx}^{2k+1}(ε₂Ωy)` for `k = 0..=kmax`, over leaves `x`, `y`.
pub fn eq2_words(kmax: usize) -> Vec<BracketWord> {
    (0..=kmax).map(|k| ad_power_word(&x(), 2 * k + 1, y())).collect()
}
