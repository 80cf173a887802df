use std::collections::BTreeMap;

use num_complex::Complex64;

use super::word::{ad_power_word, merge_leaves, subdivided, word_coefficient, BracketWord, LeafPulse};
use super::{fit_coefficients, gate_fidelity, CompiledSegments, CompiledSequence, Diagnostics};
use crate::ensemble_sim::{linspace, local_rotation, two_qubit_propagator, TwoQubitSegment};
use crate::error::{invalid, Error, Result};
use crate::liealg::{coupling_b1, coupling_b2, exponents, DispersionPolyElement, FitVerdict, SampledFunction};
use crate::linalg::{self, CMatrix};

/// Leaf labels of the two-qubit words: `B1 = −2iσ1yσ2z`, `B2 = −2iσ1zσ2z`,
/// both scaled by the coupling `J`.
pub const COUPLING_LABELS: [&str; 2] = ["B1", "B2"];

const J: &str = "J";

/// Word reaching `J^n B2` for odd `n`: `B2`, then `ad_{B1}²` repeatedly.
pub fn j_word(n: u32) -> Result<BracketWord> {
    if n % 2 == 0 {
        return Err(Error::Infeasible(format!(
            "J^{n} is not reachable: brackets of J·B1, J·B2 give odd powers along B2"
        )));
    }
    let b1 = BracketWord::leaf(COUPLING_LABELS[0]);
    Ok((1..n).step_by(2).fold(BracketWord::leaf(COUPLING_LABELS[1]), |w, _| ad_power_word(&b1, 2, w)))
}

/// Gate `exp(−iθ σzσz)` robust over `J ∈ [J₀(1−δ), J₀(1+δ)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct JRobustSpec {
    pub theta: f64,
    pub j0: f64,
    pub delta: f64,
    /// Odd powers of `J`.
    pub basis: Vec<u32>,
    pub tol: f64,
    pub subdivisions: usize,
    /// Number of `J` samples for the fit and the fidelity check.
    pub samples: usize,
}

impl JRobustSpec {
    pub fn new(theta: f64, j0: f64, delta: f64, basis: Vec<u32>) -> Self {
        Self {
            theta,
            j0,
            delta,
            basis,
            tol: 1e-3,
            subdivisions: 1,
            samples: 21,
        }
    }
}

fn zz_gate(theta: f64) -> CMatrix {
    let e = Complex64::from_polar(1.0, -theta);
    let d = [e, e.conj(), e.conj(), e];
    CMatrix::from_fn(4, 4, |r, c| if r == c { d[r] } else { linalg::ZERO })
}

/// Free evolution with sign: drift reversal by a π pulse on qubit 1 when
/// the strength is negative.
fn b2_segments(s: f64, out: &mut Vec<TwoQubitSegment>) {
    if s >= 0.0 {
        out.push(TwoQubitSegment::Coupling { duration: 2.0 * s });
    } else {
        let flip = local_rotation(0, 0, std::f64::consts::PI);
        out.push(TwoQubitSegment::Local(flip.clone()));
        out.push(TwoQubitSegment::Coupling { duration: -2.0 * s });
        out.push(TwoQubitSegment::Local(flip));
    }
}

fn leaves_to_segments(leaves: &[LeafPulse]) -> Result<Vec<TwoQubitSegment>> {
    // L = exp(iπ/4 σ1x) takes σ1z to σ1y, so exp(sB1) = L exp(sB2) L†
    let l = local_rotation(0, 0, -std::f64::consts::FRAC_PI_2);
    let l_dag = l.adjoint();
    let mut raw = Vec::new();
    for leaf in leaves {
        match leaf.label.as_str() {
            "B2" => b2_segments(leaf.strength, &mut raw),
            "B1" => {
                raw.push(TwoQubitSegment::Local(l_dag.clone()));
                b2_segments(leaf.strength, &mut raw);
                raw.push(TwoQubitSegment::Local(l.clone()));
            }
            other => return invalid(format!("leaf '{other}' has no two-qubit realisation")),
        }
    }
    let mut out: Vec<TwoQubitSegment> = Vec::with_capacity(raw.len());
    for s in raw {
        match (out.last_mut(), s) {
            (Some(TwoQubitSegment::Local(prev)), TwoQubitSegment::Local(m)) => *prev = m * &*prev,
            (_, s) => out.push(s),
        }
    }
    // drop locals that merged to the identity up to phase
    out.retain(|s| match s {
        TwoQubitSegment::Local(m) => {
            let tr = m.trace();
            (tr.norm() - 4.0).abs() > 1e-13 || (m - linalg::identity(4) * (tr / 4.0)).norm() > 1e-13
        }
        _ => true,
    });
    Ok(out)
}

/// Compile `exp(−iθσzσz)` insensitive to the coupling over `J₀[1 − δ, 1 + δ]`,
/// as free evolutions interleaved with qubit-1 rotations.
pub fn compile_j_robust_zz(spec: &JRobustSpec) -> Result<CompiledSequence> {
    if !(spec.j0 > 0.0 && spec.j0.is_finite()) {
        return invalid("nominal coupling must be positive");
    }
    if !(0.0..1.0).contains(&spec.delta) {
        return invalid(format!("coupling spread must lie in [0, 1), got {}", spec.delta));
    }
    if !(spec.tol >= 0.0) || spec.subdivisions == 0 || spec.samples == 0 {
        return invalid("tolerance, subdivisions and sample count must be valid");
    }
    if spec.basis.is_empty() {
        return invalid("basis is empty");
    }
    let target_gate = zz_gate(spec.theta);
    if spec.delta == 0.0 {
        let segments = vec![TwoQubitSegment::Coupling {
            duration: spec.theta / spec.j0,
        }];
        let f = gate_fidelity(&target_gate, &two_qubit_propagator(&segments, spec.j0)?);
        return Ok(CompiledSequence {
            segments: CompiledSegments::TwoQubit(segments),
            predicted: vec![DispersionPolyElement::linear(J, coupling_b2().scale(spec.theta / (2.0 * spec.j0)))],
            diagnostics: Diagnostics {
                fits: Vec::new(),
                generator_min_fidelity: f,
                simulated_min_fidelity: f,
                subdivision_fidelities: vec![(1, f)],
                factor_fidelities: Vec::new(),
                commutator_budget: 0.0,
            },
        });
    }
    let js = linspace(spec.j0 * (1.0 - spec.delta), spec.j0 * (1.0 + spec.delta), spec.samples);
    let target = SampledFunction::on_axis(J, &js, |_| spec.theta)?;
    let exps: Vec<_> = spec.basis.iter().map(|&n| exponents(&[(J, n)])).collect();
    let words: Vec<BracketWord> = spec.basis.iter().map(|&n| j_word(n)).collect::<Result<_>>()?;
    let fit = fit_coefficients(&target, &exps, spec.tol)?;
    if fit.verdict == FitVerdict::NotAchievable {
        return Err(Error::Infeasible(format!(
            "fit max residual {:e} exceeds tolerance {:e}",
            fit.max_residual, spec.tol
        )));
    }
    let gens: BTreeMap<String, DispersionPolyElement> = [
        (COUPLING_LABELS[0].to_string(), DispersionPolyElement::linear(J, coupling_b1())),
        (COUPLING_LABELS[1].to_string(), DispersionPolyElement::linear(J, coupling_b2())),
    ]
    .into_iter()
    .collect();
    let mut terms = Vec::new();
    let mut predicted = DispersionPolyElement::zero(4);
    for ((w, e), &c) in words.into_iter().zip(&exps).zip(&fit.coefficients) {
        let k = word_coefficient(&w.evaluate(&gens)?, e, &coupling_b2())?;
        // t κ J^n B2 = −i c J^n σzσz
        terms.push((w, c / (2.0 * k)));
        predicted = predicted.add(&DispersionPolyElement::monomial(e.clone(), coupling_b2().scale(c / 2.0)))?;
    }
    let build = |m: usize| -> Result<Vec<TwoQubitSegment>> {
        let mut leaves = Vec::new();
        for (w, t) in &terms {
            leaves.extend(subdivided(w, *t, m)?);
        }
        leaves_to_segments(&merge_leaves(leaves))
    };
    let worst = |segs: &[TwoQubitSegment]| -> Result<f64> {
        js.iter()
            .try_fold(1.0_f64, |acc, &j| Ok(acc.min(gate_fidelity(&target_gate, &two_qubit_propagator(segs, j)?))))
    };
    let mut ladder = Vec::new();
    let mut segments;
    let mut m = 1;
    loop {
        let m_now = m.min(spec.subdivisions);
        segments = build(m_now)?;
        ladder.push((m_now, worst(&segments)?));
        if m_now == spec.subdivisions {
            break;
        }
        m *= 4;
    }
    let generator = js.iter().try_fold(1.0_f64, |acc, &j| -> Result<f64> {
        let g = predicted.evaluate(&[(J.to_string(), j)].into_iter().collect())?;
        // the generator is diagonal
        let u = CMatrix::from_fn(4, 4, |r, c| if r == c { g[(r, r)].exp() } else { linalg::ZERO });
        Ok(acc.min(gate_fidelity(&target_gate, &u)))
    })?;
    let budget = terms
        .iter()
        .filter(|(w, _)| w.depth() > 0)
        .map(|(_, t)| t.abs().powf(1.5) / (spec.subdivisions as f64).sqrt())
        .sum();
    Ok(CompiledSequence {
        segments: CompiledSegments::TwoQubit(segments),
        predicted: vec![predicted],
        diagnostics: Diagnostics {
            fits: vec![fit],
            generator_min_fidelity: generator,
            simulated_min_fidelity: ladder.last().expect("ladder is nonempty").1,
            subdivision_fidelities: ladder,
            factor_fidelities: Vec::new(),
            commutator_budget: budget,
        },
    })
}

/// Reduce a fixed coupling tensor `a σxσx + b σyσy + c σzσz` to pure
/// `σzσz`: two evolutions of `duration` sandwiching a z π-rotation of
/// qubit 1 and its inverse give `exp(−2i c·duration σzσz)`.
pub fn reduce_coupling_tensor(alpha: f64, beta: f64, gamma: f64, duration: f64) -> Result<Vec<TwoQubitSegment>> {
    if !(duration >= 0.0 && duration.is_finite()) {
        return invalid("duration must be nonnegative");
    }
    let u = local_rotation(0, 2, std::f64::consts::PI);
    let a = TwoQubitSegment::Tensor {
        xx: alpha,
        yy: beta,
        zz: gamma,
        duration,
    };
    Ok(vec![a.clone(), TwoQubitSegment::Local(u.adjoint()), a, TwoQubitSegment::Local(u)])
}
