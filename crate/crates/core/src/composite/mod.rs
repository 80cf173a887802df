//! Compensating sequences synthesised from Lie brackets: group-commutator
//! realisation of bracket words, dispersion-polynomial fitting and the
//! single-spin and two-qubit constructions built on them.

mod coupling;
mod single;
mod word;

use serde::{Deserialize, Serialize};

use crate::ensemble_sim::{ControlSequence, Su2, TwoQubitSegment};
use crate::error::{Error, Result};
use crate::liealg::{approximable, Exponents, FitResult, FunctionFamily, SampledFunction};
use crate::linalg;

pub use coupling::{
    compile_j_robust_zz, j_word, reduce_coupling_tensor, JRobustSpec, COUPLING_LABELS,
};
pub use single::{
    compensate_epsilon_small_flip, compile_euler, compile_omega_robust, compile_robust_rotation,
    compile_two_param, commutator_block, rf_propagator, small_flip_linearity, EulerSpec,
    OmegaRobustSpec, RobustRotationSpec, SmallFlipSpec, TwoParamSpec, EPSILON, EPSILON_1,
    EPSILON_2, OMEGA,
};
pub use word::{
    ad_power_word, direction_word, eq2_words, merge_leaves, subdivided, word_coefficient,
    BracketWord, LeafPulse, WordNode, MAX_WORD_DEPTH,
};

/// Largest basis the compilers will try when choosing one automatically.
pub const MAX_BASIS_TERMS: usize = 5;

/// Strong-rf segment: free precession or an instantaneous rotation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RfSegment {
    Free { duration: f64 },
    Pulse { axis: usize, angle: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum CompiledSegments {
    /// rf controls for the `ε`-scaled single-spin plant.
    Pulse(ControlSequence),
    /// Ideal rotations `exp(s ε₁ Ωx)` (label `x`) and `exp(s ε₂ Ωy)`
    /// (label `y`) for the two-parameter plant.
    Rotations(Vec<LeafPulse>),
    StrongRf(Vec<RfSegment>),
    TwoQubit(Vec<TwoQubitSegment>),
}

/// Fit and simulation figures for a compiled design.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// One fit per synthesised factor.
    pub fits: Vec<FitResult>,
    /// Worst fidelity of `exp(predicted)` against the target over the grid.
    pub generator_min_fidelity: f64,
    /// Worst fidelity of the simulated sequence against the target.
    pub simulated_min_fidelity: f64,
    /// Worst simulated fidelity per subdivision count, ascending in `m`.
    pub subdivision_fidelities: Vec<(usize, f64)>,
    /// Per-factor generator-level worst fidelities (Euler designs).
    pub factor_fidelities: Vec<f64>,
    /// Leading-order commutator error estimate `Σ |t_w|^{3/2} / √m` over
    /// bracket words.
    pub commutator_budget: f64,
}

impl Diagnostics {
    /// True when the simulated fidelity never drops as `m` grows.
    pub fn subdivision_monotone(&self) -> bool {
        self.subdivision_fidelities.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-12)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompiledSequence {
    pub segments: CompiledSegments,
    /// Fitted generator of each factor, in time order.
    pub predicted: Vec<crate::liealg::DispersionPolyElement>,
    pub diagnostics: Diagnostics,
}

/// Least-squares coefficients of `target` over monomials `basis`.
///
/// Unlike a bare fit, a basis that is rank-deficient on the grid is an
/// error: its coefficients would not be determined.
pub fn fit_coefficients(target: &SampledFunction, basis: &[Exponents], tol: f64) -> Result<FitResult> {
    let family = FunctionFamily::Monomials(basis.to_vec());
    if !basis.is_empty() && !target.is_empty() {
        let a = family.design_matrix(target)?;
        let r = linalg::rank(&a, 1e-10);
        if r < basis.len() {
            return Err(Error::Numerical(format!(
                "basis of {} monomials has rank {r} on the grid",
                basis.len()
            )));
        }
    }
    approximable(target, &family, tol)
}

/// Shortest prefix of `candidates` (at most [`MAX_BASIS_TERMS`]) whose fit
/// meets `tol`.
pub fn select_basis(target: &SampledFunction, candidates: &[Exponents], tol: f64) -> Result<(usize, FitResult)> {
    let mut last = None;
    for k in 1..=candidates.len().min(MAX_BASIS_TERMS) {
        let fit = match fit_coefficients(target, &candidates[..k], tol) {
            Ok(f) => f,
            Err(Error::Numerical(_)) => break,
            Err(e) => return Err(e),
        };
        if fit.max_residual <= tol {
            return Ok((k, fit));
        }
        last = Some(fit.max_residual);
    }
    Err(Error::Infeasible(format!(
        "no basis of at most {MAX_BASIS_TERMS} terms meets tolerance {tol:e} (best max residual {:e})",
        last.unwrap_or(f64::INFINITY)
    )))
}

/// Worst-case Bloch fidelity between two rotations: the minimum over
/// initial Bloch vectors of `(1 + m_a·m_b)/2`, equal to `(tr(a†b)/2)²`.
pub fn rotation_fidelity(a: &Su2, b: &Su2) -> f64 {
    let re = (a.alpha.conj() * b.alpha + a.beta.conj() * b.beta).re;
    re * re
}

/// Rotation `exp(G)` for a real 3×3 skew generator `G = Σ w_i Ω_i`.
pub(crate) fn rotation_of_generator(g: &linalg::CMatrix) -> Su2 {
    let w = [g[(2, 1)].re, g[(0, 2)].re, g[(1, 0)].re];
    let angle = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    if angle == 0.0 {
        return Su2::IDENTITY;
    }
    Su2::from_axis_angle([w[0] / angle, w[1] / angle, w[2] / angle], angle)
}

/// `|tr(G†U)| / dim`.
pub fn gate_fidelity(target: &linalg::CMatrix, u: &linalg::CMatrix) -> f64 {
    (target.adjoint() * u).trace().norm() / target.nrows() as f64
}
