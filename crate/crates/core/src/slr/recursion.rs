use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// One hard pulse: flip angle `φ ∈ [0, π]` and rf phase `θ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardPulseStep {
    pub phi: f64,
    pub theta: f64,
}

impl HardPulseStep {
    pub fn new(phi: f64, theta: f64) -> Result<Self> {
        if !phi.is_finite() || !theta.is_finite() {
            return invalid("hard pulse step must be finite");
        }
        if !(0.0..=std::f64::consts::PI).contains(&phi) {
            return invalid(format!("flip angle {phi} outside [0, π]"));
        }
        Ok(Self { phi, theta })
    }

    /// `cos(φ/2)`.
    pub fn c(&self) -> f64 {
        (self.phi / 2.0).cos()
    }

    /// `−i e^{iθ} sin(φ/2)`.
    pub fn s(&self) -> Complex64 {
        -I * Complex64::from_polar((self.phi / 2.0).sin(), self.theta)
    }

    /// Rf amplitude `φ/dt`.
    pub fn amplitude(&self, dt: f64) -> f64 {
        self.phi / dt
    }

    /// Controls `(u, v) = (A sin θ, A cos θ)`.
    pub fn controls(&self, dt: f64) -> (f64, f64) {
        let a = self.amplitude(dt);
        (a * self.theta.sin(), a * self.theta.cos())
    }
}

/// `P_n(z) = Σ p_k z^{−k}` and `Q_n(z) = Σ q_k z^{−k}` of an n-step train.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinorPolynomials {
    pub n: usize,
    pub p: Vec<Complex64>,
    pub q: Vec<Complex64>,
}

/// Evaluates `Σ c_k w^k` by Horner's rule.
pub(crate) fn horner(c: &[Complex64], w: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &x| acc * w + x)
}

/// `m` equally spaced points on the unit circle.
pub fn circle_points(m: usize) -> Vec<Complex64> {
    (0..m)
        .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / m as f64))
        .collect()
}

/// `max | |P|² + |Q|² − 1 |` over `m` unit-circle points.
pub fn unimodularity_defect(p: &[Complex64], q: &[Complex64], m: usize) -> f64 {
    circle_points(m)
        .into_iter()
        .map(|z| {
            let w = z.inv();
            (horner(p, w).norm_sqr() + horner(q, w).norm_sqr() - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

impl SpinorPolynomials {
    pub fn new(p: Vec<Complex64>, q: Vec<Complex64>) -> Result<Self> {
        if p.len() != q.len() || p.is_empty() {
            return invalid("P and Q need the same nonzero number of coefficients");
        }
        if p.iter().chain(&q).any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return invalid("non-finite polynomial coefficient");
        }
        Ok(Self { n: p.len(), p, q })
    }

    /// `(P(z), Q(z))`.
    pub fn eval(&self, z: Complex64) -> (Complex64, Complex64) {
        let w = z.inv();
        (horner(&self.p, w), horner(&self.q, w))
    }

    /// `(P, Q)` at `z = e^{−iω dt}`.
    pub fn eval_omega(&self, omega: f64, dt: f64) -> (Complex64, Complex64) {
        self.eval(Complex64::from_polar(1.0, -omega * dt))
    }

    /// Cayley–Klein parameters `z^{n/2}(P, Q)` of the hard-pulse train.
    pub fn spinor(&self, omega: f64, dt: f64) -> (Complex64, Complex64) {
        let (p, q) = self.eval_omega(omega, dt);
        let half = Complex64::from_polar(1.0, -omega * dt * self.n as f64 / 2.0);
        (half * p, half * q)
    }

    pub fn unimodularity_defect(&self, m: usize) -> f64 {
        unimodularity_defect(&self.p, &self.q, m)
    }
}

/// Applies the hard-pulse recursion from `(P₀, Q₀) = (1, 0)`.
///
/// `on_step` sees `(P_k, Q_k)` after each step.
pub fn forward_recursion_with(
    steps: &[HardPulseStep],
    mut on_step: impl FnMut(&[Complex64], &[Complex64]),
) -> Result<SpinorPolynomials> {
    if steps.is_empty() {
        return invalid("forward recursion needs at least one step");
    }
    let mut p = vec![Complex64::new(1.0, 0.0)];
    let mut q = vec![Complex64::new(0.0, 0.0)];
    for (k, st) in steps.iter().enumerate() {
        let (c, s) = (st.c(), st.s());
        let len = k + 1;
        let mut np = vec![Complex64::new(0.0, 0.0); len];
        let mut nq = vec![Complex64::new(0.0, 0.0); len];
        for j in 0..len {
            let pj = p.get(j).copied().unwrap_or_default();
            let qj1 = if j >= 1 { q.get(j - 1).copied().unwrap_or_default() } else { Complex64::default() };
            np[j] = c * pj - s.conj() * qj1;
            nq[j] = s * pj + c * qj1;
        }
        p = np;
        q = nq;
        on_step(&p, &q);
    }
    SpinorPolynomials::new(p, q)
}

pub fn forward_recursion(steps: &[HardPulseStep]) -> Result<SpinorPolynomials> {
    forward_recursion_with(steps, |_, _| {})
}

/// Unimodularity tolerance for inputs to [`inverse_recursion`].
pub const INPUT_UNIMODULARITY_TOL: f64 = 1e-6;

/// Per-step diagnostics of the backward recursion, in extraction order
/// (last step first).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseReport {
    /// Extracted steps in time order.
    pub steps: Vec<HardPulseStep>,
    /// Leading coefficient that must vanish from `P_{k−1}` (for the first
    /// step, the deviation of `P₀` from 1).
    pub leading_residuals: Vec<f64>,
    /// Constant coefficient that must vanish from `z⁻¹Q_{k−1}`.
    pub low_order_residuals: Vec<f64>,
    /// Unimodularity defect of `(P_{k−1}, Q_{k−1})` on 256 circle points.
    pub unimodularity: Vec<f64>,
}

/// Shinnar–Le Roux extraction of the step list from `(P_n, Q_n)`.
pub fn inverse_recursion_report(poly: &SpinorPolynomials) -> Result<InverseReport> {
    let defect = poly.unimodularity_defect(256.max(4 * poly.n));
    if !(defect <= INPUT_UNIMODULARITY_TOL) {
        return invalid(format!("|P|²+|Q|² deviates from 1 by {defect:e}"));
    }
    let mut p = poly.p.clone();
    let mut q = poly.q.clone();
    let mut rev = Vec::with_capacity(poly.n);
    let mut report = InverseReport {
        steps: Vec::new(),
        leading_residuals: Vec::new(),
        low_order_residuals: Vec::new(),
        unimodularity: Vec::new(),
    };
    for k in (1..=poly.n).rev() {
        let (p0, q0) = (p[0], q[0]);
        let step = if p0.norm() < 1e-14 {
            if q0.norm() > 1e-14 {
                return Err(Error::DegenerateExtraction {
                    step: k,
                    p0: p0.norm(),
                    q0: q0.norm(),
                });
            }
            HardPulseStep { phi: 0.0, theta: 0.0 }
        } else {
            let phi = 2.0 * q0.norm().atan2(p0.norm());
            let theta = if q0.norm() == 0.0 { 0.0 } else { (I * q0 / p0).arg() };
            HardPulseStep { phi, theta }
        };
        let (c, s) = (step.c(), step.s());
        // at k = 1 nothing drops out; the remainder must be P₀ = 1
        let lead = c * p[k - 1] + s.conj() * q[k - 1] - if k == 1 { 1.0 } else { 0.0 };
        let low = -s * p[0] + c * q[0];
        report.leading_residuals.push(lead.norm());
        report.low_order_residuals.push(low.norm());
        let np: Vec<Complex64> = (0..k - 1).map(|j| c * p[j] + s.conj() * q[j]).collect();
        let nq: Vec<Complex64> = (1..k).map(|j| -s * p[j] + c * q[j]).collect();
        p = np;
        q = nq;
        if k > 1 {
            report.unimodularity.push(unimodularity_defect(&p, &q, 256));
        } else {
            report.unimodularity.push(0.0);
        }
        rev.push(step);
    }
    rev.reverse();
    report.steps = rev;
    Ok(report)
}

pub fn inverse_recursion(poly: &SpinorPolynomials) -> Result<Vec<HardPulseStep>> {
    Ok(inverse_recursion_report(poly)?.steps)
}
