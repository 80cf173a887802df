use serde::Serialize;

use crate::error::{invalid, Result};

/// Relative agreement required of the scaled final states.
pub const RATIO_RTOL: f64 = 1e-6;

/// Ratios below this fraction of their a-priori bound count as zero.
const NOISE_FLOOR: f64 = 1e-9;

/// Substep refinement stops once doubling moves no final coordinate by
/// more than this.
const REFINE_TOL: f64 = 1e-9;
const MAX_SUBSTEPS: usize = 1 << 14;

/// Final states of the scaled integrator `ẋ = ε(u₁g₁ + u₂g₂)` and the
/// ratios that do not depend on `ε`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeisenbergReport {
    pub epsilons: Vec<f64>,
    pub finals: Vec<[f64; 3]>,
    /// `(x₁/ε, x₂/ε, x₃/ε²)` per member.
    pub ratios: Vec<[f64; 3]>,
    /// Largest spread of a ratio across members, relative to its magnitude.
    pub max_relative_spread: f64,
    /// RK4 substeps per control sample after refinement.
    pub substeps: usize,
    pub holds: bool,
}

fn field(eps: f64, u1: f64, u2: f64, x: [f64; 3]) -> [f64; 3] {
    // g₁ = (1, 0, −x₂), g₂ = (0, 1, x₁)
    [eps * u1, eps * u2, eps * (u2 * x[0] - u1 * x[1])]
}

fn integrate(u1: &[f64], u2: &[f64], dt: f64, eps: f64, substeps: usize) -> [f64; 3] {
    let h = dt / substeps as f64;
    let mut x = [0.0; 3];
    let axpy = |x: [f64; 3], k: [f64; 3], s: f64| [x[0] + s * k[0], x[1] + s * k[1], x[2] + s * k[2]];
    for (&a, &b) in u1.iter().zip(u2) {
        for _ in 0..substeps {
            let k1 = field(eps, a, b, x);
            let k2 = field(eps, a, b, axpy(x, k1, h / 2.0));
            let k3 = field(eps, a, b, axpy(x, k2, h / 2.0));
            let k4 = field(eps, a, b, axpy(x, k3, h));
            for i in 0..3 {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
    }
    x
}

/// Integrate the nonholonomic integrator for each `ε` under shared
/// piecewise-constant controls and test the ratio law.
pub fn heisenberg_invariant(u1: &[f64], u2: &[f64], dt: f64, epsilons: &[f64], initial: [f64; 3]) -> Result<HeisenbergReport> {
    if initial != [0.0; 3] {
        return invalid("the ratio law is stated for trajectories starting at the origin");
    }
    if u1.len() != u2.len() {
        return invalid(format!("control lengths differ: {} vs {}", u1.len(), u2.len()));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return invalid("step must be positive");
    }
    if epsilons.is_empty() || epsilons.iter().any(|e| *e == 0.0 || !e.is_finite()) {
        return invalid("scalings must be finite and nonzero");
    }
    if u1.iter().chain(u2).any(|u| !u.is_finite()) {
        return invalid("controls must be finite");
    }
    let run = |k: usize| -> Vec<[f64; 3]> { epsilons.iter().map(|&e| integrate(u1, u2, dt, e, k)).collect() };
    let mut substeps = 1;
    let mut finals = run(substeps);
    while substeps < MAX_SUBSTEPS {
        let finer = run(substeps * 2);
        let change = finals
            .iter()
            .zip(&finer)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(p, q)| (p - q).abs()))
            .fold(0.0_f64, f64::max);
        substeps *= 2;
        finals = finer;
        if change < REFINE_TOL {
            break;
        }
    }
    let ratios: Vec<[f64; 3]> = finals
        .iter()
        .zip(epsilons)
        .map(|(x, &e)| [x[0] / e, x[1] / e, x[2] / (e * e)])
        .collect();
    // |x₁/ε| ≤ ∫|u₁|, |x₂/ε| ≤ ∫|u₂|, |x₃/ε²| ≤ ∫|u₁|·∫|u₂|; a ratio far below
    // its bound (e.g. x₃ = 0 under constant controls) is compared against
    // the bound instead, so roundoff is not reported as a spread
    let a: f64 = u1.iter().map(|u| u.abs() * dt).sum();
    let b: f64 = u2.iter().map(|u| u.abs() * dt).sum();
    let bounds = [a, b, a * b];
    let mut spread: f64 = 0.0;
    for i in 0..3 {
        let vals: Vec<f64> = ratios.iter().map(|r| r[i]).collect();
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let mag = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(NOISE_FLOOR * bounds[i]);
        if mag > 0.0 {
            spread = spread.max((hi - lo) / mag);
        }
    }
    Ok(HeisenbergReport {
        epsilons: epsilons.to_vec(),
        finals,
        ratios,
        max_relative_spread: spread,
        substeps,
        holds: spread <= RATIO_RTOL,
    })
}

/// Best achievable `‖(x₃,ε(T) − target)_ε‖₂` for any control: since
/// `x₃,ε = ε² c` for a control-dependent `c`, this is a one-variable least
/// squares in `c`. Returns `(c*, residual)`.
pub fn heisenberg_target_residual(epsilons: &[f64], target: f64) -> Result<(f64, f64)> {
    if epsilons.is_empty() {
        return invalid("no scalings");
    }
    let s2: f64 = epsilons.iter().map(|e| e.powi(2)).sum();
    let s4: f64 = epsilons.iter().map(|e| e.powi(4)).sum();
    if s4 == 0.0 {
        return invalid("scalings are all zero");
    }
    let c = target * s2 / s4;
    let r = epsilons.iter().map(|e| (e * e * c - target).powi(2)).sum::<f64>().sqrt();
    Ok((c, r))
}
