use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use super::word::{ad_power_word, direction_word, merge_leaves, subdivided, word_coefficient, BracketWord, LeafPulse};
use super::{
    fit_coefficients, rotation_fidelity, rotation_of_generator, CompiledSegments, CompiledSequence, Diagnostics,
    RfSegment,
};
use crate::ensemble_sim::{sequence_propagator, ControlSequence, GridPoint, Su2};
use crate::error::{invalid, Error, Result};
use crate::liealg::{exponents, omega, DispersionPolyElement, Exponents, FitResult, FitVerdict, SampledFunction};

/// Parameter names used by the single-spin compilers.
pub const EPSILON: &str = "epsilon";
pub const EPSILON_1: &str = "epsilon1";
pub const EPSILON_2: &str = "epsilon2";
pub const OMEGA: &str = "omega";

fn unit(axis: usize) -> [f64; 3] {
    let mut n = [0.0; 3];
    n[axis] = 1.0;
    n
}

/// Robust rotation `exp(θ(ε) Ω_axis)` for the `ε`-scaled plant.
#[derive(Clone, Debug, PartialEq)]
pub struct RobustRotationSpec {
    /// 0 = x, 1 = y.
    pub axis: usize,
    /// Target angle over the `epsilon` grid.
    pub target: SampledFunction,
    /// Odd powers of `ε`.
    pub basis: Vec<u32>,
    pub tol: f64,
    pub subdivisions: usize,
    /// Duration of one leaf step in the emitted pulse.
    pub leaf_dt: f64,
}

/// `exp(Σ c_k m_k Ω_axis)` with the words and strengths realising each term.
struct Factor {
    fit: FitResult,
    predicted: DispersionPolyElement,
    terms: Vec<(BracketWord, f64)>,
}

impl Factor {
    fn build(
        axis: usize,
        target: &SampledFunction,
        exps: Vec<Exponents>,
        words: Vec<BracketWord>,
        gens: &BTreeMap<String, DispersionPolyElement>,
        tol: f64,
    ) -> Result<Self> {
        let fit = fit_coefficients(target, &exps, tol)?;
        if fit.verdict == FitVerdict::NotAchievable {
            return Err(Error::Infeasible(format!(
                "fit max residual {:e} exceeds tolerance {tol:e}",
                fit.max_residual
            )));
        }
        let mut predicted = DispersionPolyElement::zero(3);
        let mut terms = Vec::with_capacity(words.len());
        for ((word, e), &c) in words.into_iter().zip(&exps).zip(&fit.coefficients) {
            let k = word_coefficient(&word.evaluate(gens)?, e, &omega(axis))?;
            predicted = predicted.add(&DispersionPolyElement::monomial(e.clone(), omega(axis).scale(c)))?;
            terms.push((word, c / k));
        }
        Ok(Self {
            fit,
            predicted,
            terms,
        })
    }

    fn leaves(&self, m: usize) -> Result<Vec<LeafPulse>> {
        let mut out = Vec::new();
        for (w, t) in &self.terms {
            out.extend(subdivided(w, *t, m)?);
        }
        Ok(merge_leaves(out))
    }

    fn budget(&self, m: usize) -> f64 {
        self.terms
            .iter()
            .filter(|(w, _)| w.depth() > 0)
            .map(|(_, t)| t.abs().powf(1.5) / (m as f64).sqrt())
            .sum()
    }

    fn generator_rotation(&self, point: &BTreeMap<String, f64>) -> Result<Su2> {
        Ok(rotation_of_generator(&self.predicted.evaluate(point)?))
    }
}

fn check_common(tol: f64, m: usize) -> Result<()> {
    if !(tol >= 0.0) {
        return invalid("fit tolerance must be nonnegative");
    }
    if m == 0 {
        return invalid("subdivision count must be positive");
    }
    Ok(())
}

/// True when every sample sits at the same parameter point.
fn single_point(target: &SampledFunction) -> bool {
    target.points.windows(2).all(|w| w[0] == w[1])
}

fn param(point: &BTreeMap<String, f64>, name: &str) -> Result<f64> {
    point
        .get(name)
        .copied()
        .ok_or_else(|| Error::InvalidInput(format!("target point lacks '{name}'")))
}

fn eps_generators() -> BTreeMap<String, DispersionPolyElement> {
    [
        ("x".to_string(), DispersionPolyElement::linear(EPSILON, omega(0))),
        ("y".to_string(), DispersionPolyElement::linear(EPSILON, omega(1))),
    ]
    .into_iter()
    .collect()
}

fn robust_factor(axis: usize, target: &SampledFunction, basis: &[u32], tol: f64) -> Result<Factor> {
    if axis > 1 {
        return invalid("robust rotations are about x (0) or y (1)");
    }
    if basis.is_empty() {
        return invalid("basis is empty");
    }
    if let Some(n) = basis.iter().find(|n| *n % 2 == 0) {
        return Err(Error::Infeasible(format!(
            "ε^{n} is not reachable: brackets of εΩx, εΩy give odd powers along x and y"
        )));
    }
    let basis = if single_point(target) { &basis[..1] } else { basis };
    let exps = basis.iter().map(|&n| exponents(&[(EPSILON, n)])).collect();
    let words = basis
        .iter()
        .map(|&n| if axis == 0 { direction_word(0, 1, n - 1) } else { direction_word(1, n - 1, 1) })
        .collect::<Result<_>>()?;
    Factor::build(axis, target, exps, words, &eps_generators(), tol)
}

/// rf controls realising leaf rotations: `x` leaves drive `v`, `y` leaves `u`.
fn leaves_to_pulse(leaves: &[LeafPulse], leaf_dt: f64) -> Result<ControlSequence> {
    let samples = leaves
        .iter()
        .map(|l| match l.label.as_str() {
            "x" => Ok((0.0, l.strength / leaf_dt)),
            "y" => Ok((l.strength / leaf_dt, 0.0)),
            other => invalid(format!("leaf '{other}' has no rf realisation")),
        })
        .collect::<Result<_>>()?;
    ControlSequence::new(leaf_dt, samples, None)
}

fn at_epsilon(pulse: &ControlSequence, eps: f64) -> Su2 {
    sequence_propagator(
        pulse,
        &GridPoint {
            epsilon: eps,
            ..Default::default()
        },
    )
}

/// Subdivision counts reported in diagnostics: powers of 4 below `m`, then `m`.
fn subdivision_ladder(m: usize) -> Vec<usize> {
    let mut out: Vec<usize> = std::iter::successors(Some(1usize), |k| Some(k * 4)).take_while(|k| *k < m).collect();
    out.push(m);
    out
}

fn min_over<T>(items: &[T], f: impl Fn(&T) -> Result<f64>) -> Result<f64> {
    items.iter().try_fold(1.0_f64, |acc, x| Ok(acc.min(f(x)?)))
}

/// The four-segment block `exp(t[A, B])` for `A, B ∈ {x, y}` under the
/// `ε`-scaled plant.
pub fn commutator_block(a: &str, b: &str, t: f64, leaf_dt: f64) -> Result<ControlSequence> {
    if !(t >= 0.0) {
        return invalid("bracket strength must be nonnegative");
    }
    let word = BracketWord::ad(BracketWord::leaf(a), BracketWord::leaf(b));
    leaves_to_pulse(&word.realize(t, false)?, leaf_dt)
}

pub fn compile_robust_rotation(spec: &RobustRotationSpec) -> Result<CompiledSequence> {
    check_common(spec.tol, spec.subdivisions)?;
    if !(spec.leaf_dt > 0.0) {
        return invalid("leaf duration must be positive");
    }
    let factor = robust_factor(spec.axis, &spec.target, &spec.basis, spec.tol)?;
    let n = unit(spec.axis);
    let targets: Vec<(f64, Su2)> = spec
        .target
        .points
        .iter()
        .zip(&spec.target.values)
        .map(|(p, &v)| Ok((param(p, EPSILON)?, Su2::from_axis_angle(n, v))))
        .collect::<Result<_>>()?;
    let simulate = |m: usize| -> Result<(ControlSequence, f64)> {
        let pulse = leaves_to_pulse(&factor.leaves(m)?, spec.leaf_dt)?;
        let worst = min_over(&targets, |(e, t)| Ok(rotation_fidelity(&at_epsilon(&pulse, *e), t)))?;
        Ok((pulse, worst))
    };
    let mut ladder = Vec::new();
    let mut last = None;
    for m in subdivision_ladder(spec.subdivisions) {
        let (pulse, f) = simulate(m)?;
        ladder.push((m, f));
        last = Some((pulse, f));
    }
    let (pulse, simulated) = last.expect("ladder is nonempty");
    let points = &spec.target.points;
    let generator = min_over(&(0..points.len()).collect::<Vec<_>>(), |&i| {
        Ok(rotation_fidelity(&factor.generator_rotation(&points[i])?, &targets[i].1))
    })?;
    Ok(CompiledSequence {
        segments: CompiledSegments::Pulse(pulse),
        predicted: vec![factor.predicted.clone()],
        diagnostics: Diagnostics {
            fits: vec![factor.fit.clone()],
            generator_min_fidelity: generator,
            simulated_min_fidelity: simulated,
            subdivision_fidelities: ladder,
            factor_fidelities: Vec::new(),
            commutator_budget: factor.budget(spec.subdivisions),
        },
    })
}

/// `Θ(ε) = exp(α(ε)Ωx) exp(β(ε)Ωy) exp(γ(ε)Ωx)`, all three angles sampled
/// on the same `epsilon` points.
#[derive(Clone, Debug, PartialEq)]
pub struct EulerSpec {
    pub alpha: SampledFunction,
    pub beta: SampledFunction,
    pub gamma: SampledFunction,
    pub basis: Vec<u32>,
    pub tol: f64,
    pub subdivisions: usize,
    pub leaf_dt: f64,
}

/// Three robust factors in time order `γ` (x), `β` (y), `α` (x).
pub fn compile_euler(spec: &EulerSpec) -> Result<CompiledSequence> {
    check_common(spec.tol, spec.subdivisions)?;
    if spec.alpha.points != spec.beta.points || spec.alpha.points != spec.gamma.points {
        return Err(Error::GridMismatch("Euler angles are sampled on different points".into()));
    }
    let parts = [(0, &spec.gamma), (1, &spec.beta), (0, &spec.alpha)];
    let factors: Vec<Factor> = parts
        .iter()
        .map(|(axis, f)| robust_factor(*axis, f, &spec.basis, spec.tol))
        .collect::<Result<_>>()?;
    let points = &spec.alpha.points;
    let eps: Vec<f64> = points.iter().map(|p| param(p, EPSILON)).collect::<Result<_>>()?;
    let idx: Vec<usize> = (0..points.len()).collect();
    let factor_target = |k: usize, i: usize| Su2::from_axis_angle(unit(parts[k].0), parts[k].1.values[i]);
    let target = |i: usize| factor_target(2, i) * factor_target(1, i) * factor_target(0, i);

    let leaves_for = |m: usize| -> Result<Vec<LeafPulse>> {
        let mut all = Vec::new();
        for f in &factors {
            all.extend(f.leaves(m)?);
        }
        Ok(merge_leaves(all))
    };
    let mut ladder = Vec::new();
    let mut pulse = None;
    for m in subdivision_ladder(spec.subdivisions) {
        let p = leaves_to_pulse(&leaves_for(m)?, spec.leaf_dt)?;
        ladder.push((m, min_over(&idx, |&i| Ok(rotation_fidelity(&at_epsilon(&p, eps[i]), &target(i))))?));
        pulse = Some(p);
    }
    let factor_fidelities = (0..3)
        .map(|k| min_over(&idx, |&i| Ok(rotation_fidelity(&factors[k].generator_rotation(&points[i])?, &factor_target(k, i)))))
        .collect::<Result<Vec<_>>>()?;
    let generator = min_over(&idx, |&i| {
        let g = factors[2].generator_rotation(&points[i])?
            * factors[1].generator_rotation(&points[i])?
            * factors[0].generator_rotation(&points[i])?;
        Ok(rotation_fidelity(&g, &target(i)))
    })?;
    Ok(CompiledSequence {
        segments: CompiledSegments::Pulse(pulse.expect("ladder is nonempty")),
        predicted: factors.iter().map(|f| f.predicted.clone()).collect(),
        diagnostics: Diagnostics {
            fits: factors.iter().map(|f| f.fit.clone()).collect(),
            generator_min_fidelity: generator,
            simulated_min_fidelity: ladder.last().expect("ladder is nonempty").1,
            subdivision_fidelities: ladder,
            factor_fidelities,
            commutator_budget: factors.iter().map(|f| f.budget(spec.subdivisions)).sum(),
        },
    })
}

/// Rotation `exp(θ(ε₁, ε₂) Ω_axis)` for the plant `(ε₁uΩx + ε₂vΩy)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoParamSpec {
    /// 0, 1, 2 = x, y, z.
    pub axis: usize,
    /// Target over `epsilon1`, `epsilon2`.
    pub target: SampledFunction,
    /// Exponent pairs `(p, q)` of `ε₁^p ε₂^q`.
    pub basis: Vec<(u32, u32)>,
    pub tol: f64,
    pub subdivisions: usize,
}

fn two_param_rotation(leaves: &[LeafPulse], e1: f64, e2: f64) -> Su2 {
    leaves.iter().fold(Su2::IDENTITY, |acc, l| {
        let (n, e) = if l.label == "x" { (unit(0), e1) } else { (unit(1), e2) };
        Su2::from_axis_angle(n, l.strength * e) * acc
    })
}

pub fn compile_two_param(spec: &TwoParamSpec) -> Result<CompiledSequence> {
    check_common(spec.tol, spec.subdivisions)?;
    if spec.axis > 2 {
        return invalid("axis index must be 0, 1 or 2");
    }
    if spec.basis.is_empty() {
        return invalid("basis is empty");
    }
    let pts: Vec<(f64, f64)> = spec
        .target
        .points
        .iter()
        .map(|p| Ok((param(p, EPSILON_1)?, param(p, EPSILON_2)?)))
        .collect::<Result<_>>()?;
    if pts.iter().any(|&(a, b)| a == 0.0 || b == 0.0) {
        return invalid("dispersion ranges must exclude 0");
    }
    let basis = if single_point(&spec.target) { &spec.basis[..1] } else { &spec.basis[..] };
    let exps = basis.iter().map(|&(p, q)| exponents(&[(EPSILON_1, p), (EPSILON_2, q)])).collect();
    let words = basis
        .iter()
        .map(|&(p, q)| direction_word(spec.axis, p, q))
        .collect::<Result<_>>()?;
    let gens: BTreeMap<String, DispersionPolyElement> = [
        ("x".to_string(), DispersionPolyElement::linear(EPSILON_1, omega(0))),
        ("y".to_string(), DispersionPolyElement::linear(EPSILON_2, omega(1))),
    ]
    .into_iter()
    .collect();
    let factor = Factor::build(spec.axis, &spec.target, exps, words, &gens, spec.tol)?;
    let n = unit(spec.axis);
    let idx: Vec<usize> = (0..pts.len()).collect();
    let target = |i: usize| Su2::from_axis_angle(n, spec.target.values[i]);
    let mut ladder = Vec::new();
    let mut leaves = Vec::new();
    for m in subdivision_ladder(spec.subdivisions) {
        leaves = factor.leaves(m)?;
        let f = min_over(&idx, |&i| Ok(rotation_fidelity(&two_param_rotation(&leaves, pts[i].0, pts[i].1), &target(i))))?;
        ladder.push((m, f));
    }
    let generator = min_over(&idx, |&i| {
        Ok(rotation_fidelity(&factor.generator_rotation(&spec.target.points[i])?, &target(i)))
    })?;
    Ok(CompiledSequence {
        segments: CompiledSegments::Rotations(leaves),
        predicted: vec![factor.predicted.clone()],
        diagnostics: Diagnostics {
            fits: vec![factor.fit.clone()],
            generator_min_fidelity: generator,
            simulated_min_fidelity: ladder.last().expect("ladder is nonempty").1,
            subdivision_fidelities: ladder,
            factor_fidelities: Vec::new(),
            commutator_budget: factor.budget(spec.subdivisions),
        },
    })
}

/// Rotation `exp(f(ω) Ω_axis)` for the strong-rf plant `(ωΩz + uΩx + vΩy)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OmegaRobustSpec {
    /// 0 = x, 1 = y.
    pub axis: usize,
    /// Target over `omega`.
    pub target: SampledFunction,
    /// Powers of `ω` to fit with.
    pub powers: Vec<u32>,
    /// Both rf quadratures available; otherwise only `Ωx` pulses.
    pub dual_quadrature: bool,
    pub tol: f64,
    pub subdivisions: usize,
}

/// Free precession for nonnegative `z` strengths, π-pulse drift reversal
/// for negative ones; `x`, `y` leaves are instantaneous pulses.
fn leaves_to_rf(leaves: &[LeafPulse]) -> Result<Vec<RfSegment>> {
    let mut out: Vec<RfSegment> = Vec::new();
    let mut push = |s: RfSegment| {
        if let (Some(RfSegment::Pulse { axis: a, angle }), RfSegment::Pulse { axis: b, angle: add }) = (out.last_mut(), s) {
            if *a == b {
                *angle += add;
                if *angle == 0.0 {
                    out.pop();
                }
                return;
            }
        }
        out.push(s);
    };
    for l in leaves {
        match l.label.as_str() {
            "z" if l.strength >= 0.0 => push(RfSegment::Free { duration: l.strength }),
            "z" => {
                push(RfSegment::Pulse { axis: 0, angle: -PI });
                push(RfSegment::Free { duration: -l.strength });
                push(RfSegment::Pulse { axis: 0, angle: PI });
            }
            "x" => push(RfSegment::Pulse { axis: 0, angle: l.strength }),
            "y" => push(RfSegment::Pulse { axis: 1, angle: l.strength }),
            other => return invalid(format!("leaf '{other}' has no strong-rf realisation")),
        }
    }
    Ok(out)
}

/// Net rotation of a strong-rf segment list at offset `omega`.
pub fn rf_propagator(segments: &[RfSegment], omega: f64) -> Su2 {
    segments.iter().fold(Su2::IDENTITY, |acc, s| {
        let step = match *s {
            RfSegment::Free { duration } => Su2::from_axis_angle(unit(2), omega * duration),
            RfSegment::Pulse { axis, angle } => Su2::from_axis_angle(unit(axis), angle),
        };
        step * acc
    })
}

pub fn compile_omega_robust(spec: &OmegaRobustSpec) -> Result<CompiledSequence> {
    check_common(spec.tol, spec.subdivisions)?;
    if spec.axis > 1 {
        return invalid("ω-robust rotations are about x (0) or y (1)");
    }
    if spec.powers.is_empty() {
        return invalid("no powers of ω requested");
    }
    // ad_{ωΩz}^k maps Ωx to ±ω^k Ωx (k even) or ±ω^k Ωy (k odd), and Ωy
    // to the other axis for odd k
    let source_is_x = |k: u32| (spec.axis == 0) == (k % 2 == 0);
    let powers: Vec<u32> = spec
        .powers
        .iter()
        .copied()
        .filter(|&k| spec.dual_quadrature || source_is_x(k))
        .collect();
    let parity = if spec.axis == 0 { "even" } else { "odd" };
    if powers.is_empty() {
        return Err(Error::Infeasible(format!(
            "with one rf quadrature only {parity} powers of ω reach this axis"
        )));
    }
    let powers = if single_point(&spec.target) { &powers[..1] } else { &powers[..] };
    let z = BracketWord::leaf("z");
    let exps = powers.iter().map(|&k| exponents(&[(OMEGA, k)])).collect();
    let words = powers
        .iter()
        .map(|&k| ad_power_word(&z, k as usize, BracketWord::leaf(if source_is_x(k) { "x" } else { "y" })))
        .collect();
    let gens: BTreeMap<String, DispersionPolyElement> = [
        ("z".to_string(), DispersionPolyElement::linear(OMEGA, omega(2))),
        ("x".to_string(), DispersionPolyElement::constant(omega(0))),
        ("y".to_string(), DispersionPolyElement::constant(omega(1))),
    ]
    .into_iter()
    .collect();
    let factor = match Factor::build(spec.axis, &spec.target, exps, words, &gens, spec.tol) {
        Err(Error::Infeasible(msg)) if !spec.dual_quadrature => {
            return Err(Error::Infeasible(format!(
                "{msg}; with one rf quadrature only {parity} powers of ω reach this axis"
            )))
        }
        other => other?,
    };
    let ws: Vec<f64> = spec.target.points.iter().map(|p| param(p, OMEGA)).collect::<Result<_>>()?;
    let n = unit(spec.axis);
    let idx: Vec<usize> = (0..ws.len()).collect();
    let target = |i: usize| Su2::from_axis_angle(n, spec.target.values[i]);
    let mut ladder = Vec::new();
    let mut segments = Vec::new();
    for m in subdivision_ladder(spec.subdivisions) {
        segments = leaves_to_rf(&factor.leaves(m)?)?;
        ladder.push((m, min_over(&idx, |&i| Ok(rotation_fidelity(&rf_propagator(&segments, ws[i]), &target(i))))?));
    }
    let generator = min_over(&idx, |&i| {
        Ok(rotation_fidelity(&factor.generator_rotation(&spec.target.points[i])?, &target(i)))
    })?;
    Ok(CompiledSequence {
        segments: CompiledSegments::StrongRf(segments),
        predicted: vec![factor.predicted.clone()],
        diagnostics: Diagnostics {
            fits: vec![factor.fit.clone()],
            generator_min_fidelity: generator,
            simulated_min_fidelity: ladder.last().expect("ladder is nonempty").1,
            subdivision_fidelities: ladder,
            factor_fidelities: Vec::new(),
            commutator_budget: factor.budget(spec.subdivisions),
        },
    })
}

/// Compensation of `ε` using copies of a small-flip block.
#[derive(Clone, Debug, PartialEq)]
pub struct SmallFlipSpec {
    pub block: ControlSequence,
    pub epsilon: Vec<f64>,
    /// Net rotation angle about x.
    pub angle: f64,
    pub basis: Vec<u32>,
    pub tol: f64,
    pub subdivisions: usize,
}

/// Relative deviation of a block from a linear-in-`ε` rotation.
const LINEARITY_TOL: f64 = 0.05;

fn rotation_vector(u: &Su2) -> [f64; 3] {
    let q = u.quaternion();
    let (q0, v) = if q[0] < 0.0 { (-q[0], [-q[1], -q[2], -q[3]]) } else { (q[0], [q[1], q[2], q[3]]) };
    let s = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if s == 0.0 {
        return [0.0; 3];
    }
    let angle = 2.0 * s.atan2(q0);
    [v[0] / s * angle, v[1] / s * angle, v[2] / s * angle]
}

/// Pulse whose net x-rotation follows the fitted odd polynomial in `ε`,
/// assembled from phase-shifted, amplitude-scaled copies of `block`.
pub fn compensate_epsilon_small_flip(spec: &SmallFlipSpec) -> Result<ControlSequence> {
    check_common(spec.tol, spec.subdivisions)?;
    if spec.epsilon.is_empty() {
        return invalid("ε grid is empty");
    }
    let r1 = rotation_vector(&at_epsilon(&spec.block, 1.0));
    let phi = (r1[0] * r1[0] + r1[1] * r1[1] + r1[2] * r1[2]).sqrt();
    if phi == 0.0 {
        return invalid("block has no net rotation");
    }
    if r1[2].abs() > LINEARITY_TOL * phi {
        return invalid("small-flip precondition violated: block axis leaves the transverse plane");
    }
    for &e in &spec.epsilon {
        let r = rotation_vector(&at_epsilon(&spec.block, e));
        let dev = (0..3).map(|k| (r[k] - e * r1[k]).powi(2)).sum::<f64>().sqrt();
        if dev > LINEARITY_TOL * e.abs() * phi {
            return invalid(format!(
                "small-flip precondition violated: response at ε = {e} deviates from linear by {dev:e}"
            ));
        }
    }
    let block_phase = r1[1].atan2(r1[0]);
    let target = SampledFunction::on_axis(EPSILON, &spec.epsilon, |_| spec.angle)?;
    let factor = robust_factor(0, &target, &spec.basis, spec.tol)?;
    let mut samples = Vec::new();
    for leaf in factor.leaves(spec.subdivisions)? {
        let axis_phase = if leaf.label == "x" { 0.0 } else { FRAC_PI_2 };
        let phase = axis_phase + if leaf.strength < 0.0 { PI } else { 0.0 } - block_phase;
        let scale = leaf.strength.abs() / phi;
        let copies = scale.ceil().max(1.0) as usize;
        let rot = Complex64::from_polar(scale / copies as f64, phase);
        for _ in 0..copies {
            samples.extend(spec.block.samples().iter().map(|&(u, v)| {
                let w = rot * Complex64::new(v, u);
                (w.im, w.re)
            }));
        }
    }
    Ok(ControlSequence::new(spec.block.dt(), samples, None)?.with_shape(spec.block.shape()))
}

/// `max |β(ω, ε) − ε β(ω, 1)|` of a pulse: how far its response is from
/// the small-flip law `Q(z, ε) ≈ ε Q(z, 1)`.
pub fn small_flip_linearity(pulse: &ControlSequence, omega: &[f64], epsilon: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for &w in omega {
        let base = sequence_propagator(pulse, &GridPoint { omega: w, ..Default::default() }).beta;
        for &e in epsilon {
            let b = sequence_propagator(
                pulse,
                &GridPoint {
                    omega: w,
                    epsilon: e,
                    ..Default::default()
                },
            )
            .beta;
            worst = worst.max((b - base * e).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble_sim::linspace;

    fn half_pi_over(grid: &[f64]) -> SampledFunction {
        SampledFunction::on_axis(EPSILON, grid, |_| FRAC_PI_2).unwrap()
    }

    fn robust(basis: Vec<u32>, m: usize) -> CompiledSequence {
        let spec = RobustRotationSpec {
            axis: 0,
            target: half_pi_over(&linspace(0.9, 1.1, 21)),
            basis,
            tol: 1.0,
            subdivisions: m,
            leaf_dt: 1e-3,
        };
        compile_robust_rotation(&spec).unwrap()
    }

    #[test]
    fn commutator_block_error_is_three_halves_order() {
        let err = |t: f64| {
            let p = commutator_block("y", "x", t, 1e-3).unwrap();
            // [Ωy, Ωx] = −Ωz
            at_epsilon(&p, 1.0).max_abs_diff(&Su2::from_axis_angle(unit(2), -t))
        };
        let e: Vec<f64> = [1e-2, 1e-3, 1e-4].iter().map(|&t| err(t)).collect();
        for w in e.windows(2) {
            let slope = (w[0] / w[1]).log10();
            assert!((1.35..=1.65).contains(&slope), "slope {slope}");
        }
        assert!(commutator_block("y", "x", 0.0, 1e-3).unwrap().is_empty());
        assert!(commutator_block("y", "x", -1.0, 1e-3).is_err());
    }

    #[test]
    fn predicted_generator_reproduces_fit_residual() {
        let c = robust(vec![1, 3], 1);
        let fit = &c.diagnostics.fits[0];
        let grid = linspace(0.9, 1.1, 21);
        let worst = grid.iter().fold(0.0_f64, |acc, &e| {
            let p = [(EPSILON.to_string(), e)].into_iter().collect();
            let r = rotation_of_generator(&c.predicted[0].evaluate(&p).unwrap());
            let angle = 2.0 * r.quaternion()[1].atan2(r.quaternion()[0]);
            acc.max((angle - FRAC_PI_2).abs())
        });
        assert!((worst - fit.max_residual).abs() < 1e-10);
        assert!(c.diagnostics.generator_min_fidelity >= 0.9999);
    }

    #[test]
    fn larger_basis_compensates_better() {
        let g: Vec<f64> = [vec![1], vec![1, 3], vec![1, 3, 5]]
            .into_iter()
            .map(|b| 1.0 - robust(b, 1).diagnostics.generator_min_fidelity)
            .collect();
        assert!(g[0] > g[1] && g[1] > g[2], "{g:?}");
    }

    #[test]
    fn subdivision_improves_simulated_fidelity() {
        for basis in [vec![1, 3], vec![1, 3, 5]] {
            let c = robust(basis, 16);
            let ms: Vec<usize> = c.diagnostics.subdivision_fidelities.iter().map(|p| p.0).collect();
            assert_eq!(ms, vec![1, 4, 16]);
            assert!(c.diagnostics.subdivision_monotone(), "{:?}", c.diagnostics.subdivision_fidelities);
        }
        let c = robust(vec![1, 3], 64);
        assert!(c.diagnostics.simulated_min_fidelity > 0.999);
        assert!(c.diagnostics.commutator_budget > 0.0);
    }

    #[test]
    fn single_point_is_plain_rotation() {
        let spec = RobustRotationSpec {
            axis: 1,
            target: half_pi_over(&[1.0]),
            basis: vec![1, 3, 5],
            tol: 1e-12,
            subdivisions: 4,
            leaf_dt: 1e-3,
        };
        let c = compile_robust_rotation(&spec).unwrap();
        assert!((c.diagnostics.simulated_min_fidelity - 1.0).abs() < 1e-12);
        let CompiledSegments::Pulse(p) = &c.segments else { panic!("expected a pulse") };
        assert_eq!(p.len(), 1);
    }

    #[test]
    fn unreachable_or_unfit_bases_are_infeasible() {
        let mut spec = RobustRotationSpec {
            axis: 0,
            target: half_pi_over(&linspace(0.9, 1.1, 21)),
            basis: vec![1, 2],
            tol: 1e-3,
            subdivisions: 1,
            leaf_dt: 1e-3,
        };
        assert!(matches!(compile_robust_rotation(&spec), Err(Error::Infeasible(_))));
        // a constant is even in ε: odd powers cannot fit it across zero
        spec.basis = vec![1, 3];
        spec.target = half_pi_over(&linspace(-0.2, 0.2, 21));
        assert!(matches!(compile_robust_rotation(&spec), Err(Error::Infeasible(_))));
        spec.subdivisions = 0;
        assert!(matches!(compile_robust_rotation(&spec), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn euler_design_has_three_factors() {
        let grid = linspace(0.9, 1.1, 11);
        let spec = EulerSpec {
            alpha: SampledFunction::on_axis(EPSILON, &grid, |e| 0.1 + 0.2 * e).unwrap(),
            beta: SampledFunction::on_axis(EPSILON, &grid, |e| 0.3 * e).unwrap(),
            gamma: SampledFunction::on_axis(EPSILON, &grid, |e| 0.05 * e.powi(3)).unwrap(),
            basis: vec![1, 3],
            tol: 1e-2,
            subdivisions: 16,
            leaf_dt: 1e-3,
        };
        let c = compile_euler(&spec).unwrap();
        assert_eq!(c.predicted.len(), 3);
        assert_eq!(c.diagnostics.factor_fidelities.len(), 3);
        assert!(c.diagnostics.factor_fidelities.iter().all(|f| *f > 0.99999));
        assert!(c.diagnostics.generator_min_fidelity > 0.99999);
        assert!(c.diagnostics.simulated_min_fidelity > 0.99);
        assert!(c.diagnostics.subdivision_monotone());
    }

    #[test]
    fn two_parameter_z_rotation() {
        let g = linspace(0.9, 1.1, 9);
        let points = g
            .iter()
            .flat_map(|&a| g.iter().map(move |&b| [(EPSILON_1.to_string(), a), (EPSILON_2.to_string(), b)].into_iter().collect()))
            .collect::<Vec<BTreeMap<String, f64>>>();
        let target = SampledFunction::new(points, vec![FRAC_PI_2; 81]).unwrap();
        let spec = TwoParamSpec {
            axis: 2,
            target,
            basis: vec![(1, 1), (3, 1), (1, 3), (3, 3)],
            tol: 5e-2,
            subdivisions: 16,
        };
        let c = compile_two_param(&spec).unwrap();
        assert!(c.diagnostics.generator_min_fidelity >= 0.999, "{}", c.diagnostics.generator_min_fidelity);
        assert!(c.diagnostics.subdivision_monotone());

        let single = SampledFunction::new(vec![spec.target.points[40].clone()], vec![FRAC_PI_2]).unwrap();
        let c = compile_two_param(&TwoParamSpec { target: single, ..spec.clone() }).unwrap();
        assert!((c.diagnostics.generator_min_fidelity - 1.0).abs() < 1e-12);

        let zero = SampledFunction::new(
            vec![[(EPSILON_1.to_string(), 0.0), (EPSILON_2.to_string(), 1.0)].into_iter().collect()],
            vec![1.0],
        )
        .unwrap();
        assert!(compile_two_param(&TwoParamSpec { target: zero, ..spec }).is_err());
    }

    #[test]
    fn pi_pulse_reverses_drift() {
        for w in [-0.7, 0.2, 1.3] {
            let segs = [
                RfSegment::Pulse { axis: 0, angle: -PI },
                RfSegment::Free { duration: 0.4 },
                RfSegment::Pulse { axis: 0, angle: PI },
            ];
            let reversed = Su2::from_axis_angle(unit(2), -w * 0.4);
            assert!(rf_propagator(&segs, w).max_abs_diff(&reversed) < 1e-12);
        }
    }

    fn omega_spec(axis: usize, ws: &[f64], f: impl Fn(f64) -> f64, powers: Vec<u32>, dual: bool) -> OmegaRobustSpec {
        OmegaRobustSpec {
            axis,
            target: SampledFunction::on_axis(OMEGA, ws, f).unwrap(),
            powers,
            dual_quadrature: dual,
            tol: 1e-3,
            subdivisions: 16,
        }
    }

    #[test]
    fn omega_robust_inversion() {
        let ws = linspace(-0.3, 0.3, 21);
        let c = compile_omega_robust(&omega_spec(0, &ws, |_| PI, vec![0, 1, 2], true)).unwrap();
        assert!(c.diagnostics.generator_min_fidelity >= 0.999);
        assert!(c.diagnostics.simulated_min_fidelity >= 0.999);
        let c = compile_omega_robust(&omega_spec(0, &[0.0], |_| PI, vec![0, 1, 2], false)).unwrap();
        let CompiledSegments::StrongRf(segs) = &c.segments else { panic!("expected rf segments") };
        assert!(matches!(segs[..], [RfSegment::Pulse { axis: 0, angle }] if (angle - PI).abs() < 1e-12));
    }

    #[test]
    fn omega_dependent_target_needs_brackets() {
        let ws = linspace(-0.3, 0.3, 21);
        let spec = omega_spec(0, &ws, |w| FRAC_PI_2 + 0.4 * w - 0.3 * w * w, vec![0, 1, 2], true);
        let c = compile_omega_robust(&spec).unwrap();
        assert!(c.diagnostics.generator_min_fidelity > 1.0 - 1e-12);
        assert!(c.diagnostics.subdivision_monotone(), "{:?}", c.diagnostics.subdivision_fidelities);
        let CompiledSegments::StrongRf(segs) = &c.segments else { panic!("expected rf segments") };
        assert!(segs.iter().all(|s| !matches!(s, RfSegment::Free { duration } if *duration < 0.0)));
    }

    #[test]
    fn single_quadrature_parity() {
        let ws = linspace(-0.3, 0.3, 21);
        // only odd powers reach y: an even target fails
        let even = omega_spec(1, &ws, |_| FRAC_PI_2, vec![1, 3], false);
        match compile_omega_robust(&even) {
            Err(Error::Infeasible(msg)) => assert!(msg.contains("odd")),
            other => panic!("expected infeasible, got {other:?}"),
        }
        let none = omega_spec(1, &ws, |_| FRAC_PI_2, vec![0, 2], false);
        assert!(matches!(compile_omega_robust(&none), Err(Error::Infeasible(_))));
        // the same target is fine with both quadratures
        assert!(compile_omega_robust(&omega_spec(1, &ws, |_| FRAC_PI_2, vec![0, 2], true)).is_ok());
        // and x takes even powers from Ωx alone
        assert!(compile_omega_robust(&omega_spec(0, &ws, |w| 1.0 + w * w, vec![0, 2], false)).is_ok());
    }

    fn flip_block(phi: f64) -> ControlSequence {
        ControlSequence::new(1e-4, vec![(0.0, phi / 1e-4)], None).unwrap()
    }

    fn worst_x(pulse: &ControlSequence, grid: &[f64], angle: f64) -> f64 {
        grid.iter()
            .map(|&e| rotation_fidelity(&at_epsilon(pulse, e), &Su2::from_axis_angle(unit(0), angle)))
            .fold(1.0, f64::min)
    }

    #[test]
    fn small_flip_compensation_beats_repetition() {
        let grid = linspace(0.9, 1.1, 11);
        let block = flip_block(0.1);
        let spec = SmallFlipSpec {
            block: block.clone(),
            epsilon: grid.clone(),
            angle: FRAC_PI_2,
            basis: vec![1, 3],
            tol: 2e-2,
            subdivisions: 64,
        };
        let plain = compensate_epsilon_small_flip(&SmallFlipSpec { basis: vec![1], tol: 1.0, ..spec.clone() }).unwrap();
        let compensated = compensate_epsilon_small_flip(&spec).unwrap();
        let (fp, fc) = (worst_x(&plain, &grid, FRAC_PI_2), worst_x(&compensated, &grid, FRAC_PI_2));
        assert!(fp < 0.9940 && fc > fp, "plain {fp}, compensated {fc}");
        assert!(compensated.peak_amplitude() <= block.peak_amplitude() * (1.0 + 1e-12));

        let single = compensate_epsilon_small_flip(&SmallFlipSpec { epsilon: vec![1.0], ..spec.clone() }).unwrap();
        assert_eq!(single.len(), 16);
        assert!((worst_x(&single, &[1.0], FRAC_PI_2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nonlinear_block_rejected() {
        let block = ControlSequence::new(1.0, vec![(0.0, 1.5), (1.5, 0.0)], None).unwrap();
        let spec = SmallFlipSpec {
            block,
            epsilon: linspace(0.9, 1.1, 5),
            angle: FRAC_PI_2,
            basis: vec![1],
            tol: 1.0,
            subdivisions: 1,
        };
        match compensate_epsilon_small_flip(&spec) {
            Err(Error::InvalidInput(msg)) => assert!(msg.contains("small-flip")),
            other => panic!("expected precondition error, got {other:?}"),
        }
    }

    #[test]
    fn small_flip_block_is_linear_in_epsilon() {
        let phi = 0.1;
        let block = flip_block(phi);
        let band = linspace(-0.2 / 1e-4, 0.2 / 1e-4, 9);
        let dev = small_flip_linearity(&block, &band, &linspace(0.9, 1.1, 5));
        assert!(dev <= 0.05 * phi / 2.0, "{dev}");
        let big = flip_block(2.5);
        assert!(small_flip_linearity(&big, &band, &linspace(0.9, 1.1, 5)) > 0.05 * 2.5 / 2.0);
    }
}
