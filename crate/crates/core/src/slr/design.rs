use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::complete::{complete_polynomial_report, DEFAULT_MARGIN};
use super::recursion::{forward_recursion, inverse_recursion, HardPulseStep, SpinorPolynomials};
use crate::ensemble_sim::{
    linspace, sequence_propagator, step_propagator, ControlSequence, GridPoint, StepShape, Su2,
};
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, CMatrix};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Largest number of sub-rotations tried under an amplitude bound.
pub const MAX_BLOCKS: usize = 1 << 16;

/// Fit samples per polynomial coefficient.
pub const SAMPLES_PER_COEFF: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RotationAxis {
    X,
    Y,
}

impl RotationAxis {
    /// Rf phase of the axis.
    pub fn phase(self) -> f64 {
        match self {
            RotationAxis::X => 0.0,
            RotationAxis::Y => std::f64::consts::FRAC_PI_2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileKind {
    Broadband { axis: RotationAxis, angle: f64 },
    Pattern,
    Custom,
}

/// Desired Cayley–Klein parameters `(F_α, F_β)` over a frequency band.
///
/// Broadband and custom targets are matched as given. Pattern targets only
/// prescribe `|F_β|`; their `Q` is fitted with the linear phase of a
/// delay of `⌊(n−1)/2⌋` steps, i.e. referenced to the middle of the train. Samples with zero weight are
/// ignored by the fit (transition regions).
#[derive(Clone, Debug, PartialEq)]
pub struct TargetProfile {
    pub omega: Vec<f64>,
    pub f_alpha: Vec<Complex64>,
    pub f_beta: Vec<Complex64>,
    pub weight: Vec<f64>,
    pub kind: ProfileKind,
}

impl TargetProfile {
    pub fn new(
        omega: Vec<f64>,
        f_alpha: Vec<Complex64>,
        f_beta: Vec<Complex64>,
        weight: Vec<f64>,
        kind: ProfileKind,
    ) -> Result<Self> {
        let n = omega.len();
        if n == 0 {
            return invalid("profile has no samples");
        }
        if f_alpha.len() != n || f_beta.len() != n || weight.len() != n {
            return invalid("profile columns differ in length");
        }
        if omega.iter().chain(&weight).any(|x| !x.is_finite()) || weight.iter().any(|w| *w < 0.0) {
            return invalid("profile has non-finite samples or negative weights");
        }
        for (k, (a, b)) in f_alpha.iter().zip(&f_beta).enumerate() {
            let d = (a.norm_sqr() + b.norm_sqr() - 1.0).abs();
            if !(d <= 1e-10) {
                return invalid(format!("sample {k}: |F_α|²+|F_β|² deviates from 1 by {d:e}"));
            }
        }
        if weight.iter().all(|w| *w == 0.0) {
            return invalid("profile has no weighted samples");
        }
        Ok(Self {
            omega,
            f_alpha,
            f_beta,
            weight,
            kind,
        })
    }

    /// Constant rotation by `angle` about `axis` on `count` points of `[−b, b]`.
    pub fn broadband(axis: RotationAxis, angle: f64, b: f64, count: usize) -> Result<Self> {
        let (s, c) = (angle / 2.0).sin_cos();
        let beta = -I * Complex64::from_polar(s, axis.phase());
        let omega = if b == 0.0 { vec![0.0] } else { linspace(-b, b, count) };
        let n = omega.len();
        Self::new(
            omega,
            vec![Complex64::new(c, 0.0); n],
            vec![beta; n],
            vec![1.0; n],
            ProfileKind::Broadband { axis, angle },
        )
    }

    /// x-axis flip angle `flips[k]` at `omega[k]`.
    pub fn flip_pattern(omega: Vec<f64>, flips: &[f64], weight: Vec<f64>) -> Result<Self> {
        if flips.iter().any(|f| !(0.0..=std::f64::consts::PI).contains(f)) {
            return invalid("pattern flip angles must lie in [0, π]");
        }
        let f_alpha = flips.iter().map(|f| Complex64::new((f / 2.0).cos(), 0.0)).collect();
        let f_beta = flips.iter().map(|f| -I * (f / 2.0).sin()).collect();
        Self::new(omega, f_alpha, f_beta, weight, ProfileKind::Pattern)
    }

    /// Flip `inside` for `|ω| ≤ half_band`, `outside` elsewhere, sampled on
    /// `count` points of `(−π/dt, π/dt)`; samples within `transition/2` of the
    /// band edge get zero weight.
    pub fn band_selective(
        inside: f64,
        outside: f64,
        half_band: f64,
        transition: f64,
        dt: f64,
        count: usize,
    ) -> Result<Self> {
        let wmax = std::f64::consts::PI / dt;
        let omega: Vec<f64> = (0..count)
            .map(|k| -wmax + 2.0 * wmax * (k as f64 + 0.5) / count as f64)
            .collect();
        let flips: Vec<f64> = omega.iter().map(|w| if w.abs() <= half_band { inside } else { outside }).collect();
        let weight = omega
            .iter()
            .map(|w| if (w.abs() - half_band).abs() < transition / 2.0 { 0.0 } else { 1.0 })
            .collect();
        Self::flip_pattern(omega, &flips, weight)
    }

    /// Flip angle `2 asin|F_β|` per sample.
    pub fn flips(&self) -> Vec<f64> {
        self.f_beta.iter().map(|b| 2.0 * b.norm().min(1.0).asin()).collect()
    }

    fn weighted_count(&self) -> usize {
        self.weight.iter().filter(|w| **w > 0.0).count()
    }
}

/// Polynomials fitted to a profile, with the achieved band error.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyDesign {
    pub poly: SpinorPolynomials,
    /// Largest `|Q − Q_target|` over weighted samples, before completion.
    pub fit_residual: f64,
    /// Largest phase-invariant spinor distance over weighted samples, or
    /// for pattern targets the largest flip-angle error.
    pub band_error: f64,
    /// Factor applied to `Q` to keep it inside the unit disk.
    pub q_scale: f64,
}

/// Delay, in steps, of the `Q` target relative to `F_β`.
fn reference_delay(kind: ProfileKind, n: usize) -> f64 {
    match kind {
        // integer, so the target stays continuous across ω = ±π/dt
        ProfileKind::Pattern => ((n - 1) / 2) as f64,
        _ => 0.0,
    }
}

/// `Q` target `F_β z^{−delay}` at `z = e^{−iω dt}`.
fn q_target(f_beta: Complex64, omega: f64, dt: f64, delay: f64) -> Complex64 {
    if delay == 0.0 {
        return f_beta;
    }
    f_beta * Complex64::from_polar(1.0, omega * dt * delay)
}

fn flip_of(q: Complex64) -> f64 {
    2.0 * q.norm().min(1.0).asin()
}

/// Phase-invariant distance between `(P, Q)` and the centred target.
fn spinor_error(p: Complex64, q: Complex64, fa: Complex64, fb: Complex64) -> f64 {
    Su2::new_unchecked(p, q).state_distance(&Su2::new_unchecked(fa, fb))
}

fn check_band(profile: &TargetProfile, dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return invalid(format!("step duration must be positive, got {dt}"));
    }
    if let Some(w) = profile.omega.iter().find(|w| w.abs() * dt > std::f64::consts::PI) {
        return invalid(format!("band aliases: |ω|·dt = {} > π", w.abs() * dt));
    }
    Ok(())
}

/// Relative weight of the off-band continuation samples of a broadband fit.
pub const OFF_BAND_WEIGHT: f64 = 1e-3;

/// Profile actually handed to the least-squares fit, when it differs from
/// the caller's.
///
/// Broadband targets are resampled densely in band and continued over the
/// rest of the circle with a small weight. Without the continuation, `|Q|`
/// is free off band, and the minimum-phase `P` then picks up an in-band
/// phase the target does not have.
fn fit_samples(profile: &TargetProfile, n: usize, dt: f64) -> Result<Option<TargetProfile>> {
    let needed = SAMPLES_PER_COEFF * n;
    match profile.kind {
        ProfileKind::Broadband { axis, angle } => {
            let b = profile.omega.iter().fold(0.0_f64, |m, w| m.max(w.abs()));
            let inner = if profile.weighted_count() >= needed {
                profile.clone()
            } else {
                TargetProfile::broadband(axis, angle, b, needed)?
            };
            let mut omega = inner.omega.clone();
            let mut weight = inner.weight.clone();
            let nyquist = std::f64::consts::PI / dt;
            for k in 0..needed {
                let om = -nyquist + 2.0 * nyquist * (k as f64 + 0.5) / needed as f64;
                if om.abs() > b {
                    omega.push(om);
                    weight.push(OFF_BAND_WEIGHT);
                }
            }
            let m = omega.len();
            Ok(Some(TargetProfile {
                omega,
                f_alpha: vec![inner.f_alpha[0]; m],
                f_beta: vec![inner.f_beta[0]; m],
                weight,
                kind: inner.kind,
            }))
        }
        _ if profile.weighted_count() >= needed => Ok(None),
        _ => invalid(format!(
            "profile has {} weighted samples; an {n}-step design needs at least {needed}",
            profile.weighted_count(),
        )),
    }
}

/// Least-squares fit of `Q` to the centred `F_β`, then minimum-phase completion.
pub fn target_to_polys(profile: &TargetProfile, n: usize, dt: f64) -> Result<PolyDesign> {
    if n == 0 {
        return invalid("step count must be positive");
    }
    check_band(profile, dt)?;
    let dense = fit_samples(profile, n, dt)?;
    let fit_profile = dense.as_ref().unwrap_or(profile);
    let delay = reference_delay(profile.kind, n);
    let rows: Vec<usize> = (0..fit_profile.omega.len()).filter(|&j| fit_profile.weight[j] > 0.0).collect();
    let mut a = CMatrix::zeros(rows.len(), n);
    let mut b = DVector::<Complex64>::zeros(rows.len());
    for (r, &j) in rows.iter().enumerate() {
        let (w, om) = (fit_profile.weight[j], fit_profile.omega[j]);
        for k in 0..n {
            a[(r, k)] = Complex64::from_polar(w, om * dt * k as f64);
        }
        b[r] = q_target(fit_profile.f_beta[j], om, dt, delay) * w;
    }
    let q: Vec<Complex64> = if b.iter().all(|x| x.norm() == 0.0) {
        vec![Complex64::new(0.0, 0.0); n]
    } else {
        linalg::lstsq_complex(&a, &b)?.iter().copied().collect()
    };
    let weighted = || (0..profile.omega.len()).filter(|&j| profile.weight[j] > 0.0);
    let fit_residual = weighted()
        .map(|j| {
            let om = profile.omega[j];
            let w = Complex64::from_polar(1.0, om * dt);
            (super::recursion::horner(&q, w) - q_target(profile.f_beta[j], om, dt, delay)).norm()
        })
        .fold(0.0, f64::max);
    let completion = complete_polynomial_report(&q, DEFAULT_MARGIN)?;
    let poly = completion.poly;
    let band_error = weighted()
        .map(|j| {
            let om = profile.omega[j];
            let (p, q) = poly.eval_omega(om, dt);
            match profile.kind {
                ProfileKind::Pattern => (flip_of(q) - flip_of(profile.f_beta[j])).abs(),
                _ => spinor_error(p, q, profile.f_alpha[j], profile.f_beta[j]),
            }
        })
        .fold(0.0, f64::max);
    Ok(PolyDesign {
        poly,
        fit_residual,
        band_error,
        q_scale: completion.q_scale,
    })
}

/// Hard-pulse controls of a step list.
pub fn steps_to_sequence(steps: &[HardPulseStep], dt: f64, a_max: Option<f64>) -> Result<ControlSequence> {
    let samples = steps.iter().map(|s| s.controls(dt)).collect();
    Ok(ControlSequence::new(dt, samples, a_max)?.with_shape(StepShape::Hard))
}

/// Flip angles and phases of a control sequence, `θ = atan2(u, v)`.
pub fn sequence_to_steps(pulse: &ControlSequence) -> Vec<HardPulseStep> {
    pulse
        .samples()
        .iter()
        .map(|&(u, v)| HardPulseStep {
            phi: u.hypot(v) * pulse.dt(),
            theta: u.atan2(v),
        })
        .collect()
}

/// A designed pulse with its verification figures.
#[derive(Clone, Debug, PartialEq)]
pub struct SlrDesign {
    pub pulse: ControlSequence,
    pub steps: Vec<HardPulseStep>,
    /// Polynomials of the whole step list.
    pub poly: SpinorPolynomials,
    /// Number of concatenated sub-rotation blocks.
    pub blocks: usize,
    /// Polynomial band error of one block.
    pub fit_error: f64,
    /// Simulated spinor vs target (flip-angle error for patterns), max over
    /// the check band.
    pub band_error: f64,
    /// Simulated spinor vs `z^{N/2}(P, Q)`, max over the check band.
    pub consistency: f64,
    pub q_scale: f64,
}

/// Frequencies used to verify a broadband design.
pub const CHECK_POINTS: usize = 65;

/// Simulated band error and polynomial consistency of a hard-pulse design.
///
/// The band error is the phase-invariant distance of the simulated spinor
/// from `z^{N/2}(F_α, F_β)`, or the flip-angle error for pattern targets.
pub fn verify_design(
    pulse: &ControlSequence,
    poly: &SpinorPolynomials,
    target: &TargetProfile,
) -> (f64, f64) {
    let dt = pulse.dt();
    let n = pulse.len();
    let mut band: f64 = 0.0;
    let mut cons: f64 = 0.0;
    for j in (0..target.omega.len()).filter(|&j| target.weight[j] > 0.0) {
        let om = target.omega[j];
        let u = sequence_propagator(pulse, &GridPoint { omega: om, ..Default::default() });
        let (a, b) = poly.spinor(om, dt);
        cons = cons.max((a - u.alpha).norm().max((b - u.beta).norm()));
        let err = match target.kind {
            ProfileKind::Pattern => (flip_of(u.beta) - flip_of(target.f_beta[j])).abs(),
            _ => {
                let half = Complex64::from_polar(1.0, -om * dt * n as f64 / 2.0);
                spinor_error(u.alpha, u.beta, half * target.f_alpha[j], half * target.f_beta[j])
            }
        };
        band = band.max(err);
    }
    (band, cons)
}

fn block_design(axis: RotationAxis, angle: f64, b: f64, n: usize, dt: f64) -> Result<(PolyDesign, Vec<HardPulseStep>)> {
    let profile = TargetProfile::broadband(axis, angle, b, SAMPLES_PER_COEFF * n)?;
    let design = target_to_polys(&profile, n, dt)?;
    let steps = inverse_recursion(&design.poly)?;
    Ok((design, steps))
}

/// Broadband rotation by `angle` about `axis` for `|ω| ≤ b`.
///
/// Under an amplitude bound the angle is split into the smallest number `m`
/// of equal sub-rotations whose designed steps all respect the bound; the
/// `m` blocks are concatenated.
pub fn design_broadband(
    axis: RotationAxis,
    angle: f64,
    b: f64,
    n: usize,
    dt: f64,
    a_max: Option<f64>,
) -> Result<SlrDesign> {
    if !(0.0..2.0 * std::f64::consts::PI).contains(&angle) {
        return invalid(format!("rotation angle {angle} outside [0, 2π)"));
    }
    if !(b >= 0.0 && b.is_finite()) {
        return invalid("band half-width must be nonnegative");
    }
    if n == 0 {
        return invalid("step count must be positive");
    }
    if b * dt > std::f64::consts::PI {
        return invalid(format!("band aliases: B·dt = {} > π", b * dt));
    }
    if let Some(a) = a_max {
        if !(a > 0.0 && a.is_finite()) {
            return invalid("amplitude bound must be positive");
        }
    }
    let fits = |steps: &[HardPulseStep]| match a_max {
        None => true,
        Some(a) => steps.iter().all(|s| s.amplitude(dt) <= a * (1.0 + 1e-12)),
    };
    let attempt = |m: usize| -> Result<Option<(PolyDesign, Vec<HardPulseStep>)>> {
        let d = block_design(axis, angle / m as f64, b, n, dt)?;
        Ok(fits(&d.1).then_some(d))
    };
    let (m, (design, block)) = match attempt(1)? {
        Some(d) => (1, d),
        None => {
            let mut hi = 2;
            let found = loop {
                if hi > MAX_BLOCKS {
                    return Err(Error::Infeasible(format!(
                        "no split into at most {MAX_BLOCKS} blocks respects the amplitude bound"
                    )));
                }
                if let Some(d) = attempt(hi)? {
                    break d;
                }
                hi *= 2;
            };
            let (mut lo, mut best) = (hi / 2, (hi, found));
            while best.0 - lo > 1 {
                let mid = (lo + best.0) / 2;
                match attempt(mid)? {
                    Some(d) => best = (mid, d),
                    None => lo = mid,
                }
            }
            best
        }
    };
    let steps: Vec<HardPulseStep> = (0..m).flat_map(|_| block.iter().copied()).collect();
    let pulse = steps_to_sequence(&steps, dt, a_max)?;
    let poly = forward_recursion(&steps)?;
    let check = TargetProfile::broadband(axis, angle, b, CHECK_POINTS)?;
    let (band_error, consistency) = verify_design(&pulse, &poly, &check);
    Ok(SlrDesign {
        pulse,
        steps,
        poly,
        blocks: m,
        fit_error: design.band_error,
        band_error,
        consistency,
        q_scale: design.q_scale,
    })
}

/// Pattern pulse whose flip profile follows `profile` outside its
/// zero-weight transition regions.
pub fn design_pattern(profile: &TargetProfile, n: usize, dt: f64) -> Result<SlrDesign> {
    check_band(profile, dt)?;
    if n == 0 {
        return invalid("step count must be positive");
    }
    let flips = profile.flips();
    let min_width = 4.0 / (n as f64 * dt);
    let cared: Vec<usize> = (0..profile.omega.len()).filter(|&j| profile.weight[j] > 0.0).collect();
    for w in cared.windows(2) {
        let (i, j) = (w[0], w[1]);
        if (flips[i] - flips[j]).abs() > 0.1 && j > i + 1 && profile.omega[j] - profile.omega[i] < min_width {
            return invalid(format!(
                "transition at ω ≈ {} is narrower than 4/(n·dt) = {min_width}",
                profile.omega[i]
            ));
        }
    }
    let design = target_to_polys(profile, n, dt)?;
    let steps = inverse_recursion(&design.poly)?;
    let pulse = steps_to_sequence(&steps, dt, None)?;
    let (band_error, consistency) = verify_design(&pulse, &design.poly, profile);
    Ok(SlrDesign {
        pulse,
        steps,
        poly: design.poly,
        blocks: 1,
        fit_error: design.band_error,
        band_error,
        consistency,
        q_scale: design.q_scale,
    })
}

/// Flip angle `2 asin|β|` of a simulated pulse at each frequency.
pub fn simulated_flips(pulse: &ControlSequence, omega: &[f64]) -> Vec<f64> {
    omega
        .iter()
        .map(|&om| {
            let u = sequence_propagator(pulse, &GridPoint { omega: om, ..Default::default() });
            flip_of(u.beta)
        })
        .collect()
}

/// Frobenius distance between the exact step `exp((ωΩz + uΩy − vΩx)Δt)` and
/// its hard-pulse split `exp((uΩy − vΩx)Δt) exp(ωΩz Δt)`.
pub fn splitting_error(omega: f64, u: f64, v: f64, dt: f64) -> Result<f64> {
    let exact = step_propagator(omega, 1.0, u, -v, dt)?.to_so3();
    let split = (step_propagator(0.0, 1.0, u, -v, dt)? * step_propagator(omega, 1.0, 0.0, 0.0, dt)?).to_so3();
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += (exact[i][j] - split[i][j]).powi(2);
        }
    }
    Ok(s.sqrt())
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
