use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use super::recursion::{horner, SpinorPolynomials};
use crate::error::{invalid, Error, Result};

/// Default shrink margin keeping `|Q|` off 1 on the unit circle.
pub const DEFAULT_MARGIN: f64 = 1e-6;

/// Required unimodularity of a completed pair at `16n` circle points.
pub const COMPLETION_TOL: f64 = 1e-8;

/// Completed pair together with the factor applied to `Q`.
#[derive(Clone, Debug, PartialEq)]
pub struct Completion {
    pub poly: SpinorPolynomials,
    /// `Q` was multiplied by this factor (1 when no shrink was needed).
    pub q_scale: f64,
    /// Unimodularity defect at `16n` circle points.
    pub residual: f64,
}

/// Largest `|Q|` on the unit circle.
///
/// Dense sampling locates the peaks; each sampled local maximum is then
/// polished by golden-section search between its neighbours.
pub fn max_modulus(q: &[Complex64]) -> f64 {
    let m = (64 * q.len()).max(4096);
    let h = 2.0 * std::f64::consts::PI / m as f64;
    let at = |w: f64| horner(q, Complex64::from_polar(1.0, w)).norm();
    let vals: Vec<f64> = (0..m).map(|k| at(k as f64 * h)).collect();
    let top = vals.iter().copied().fold(0.0, f64::max);
    let mut best = top;
    for k in 0..m {
        let (l, r) = (vals[(k + m - 1) % m], vals[(k + 1) % m]);
        if vals[k] < l || vals[k] < r || vals[k] < top * (1.0 - 1e-3) {
            continue;
        }
        let (mut a, mut b) = ((k as f64 - 1.0) * h, (k as f64 + 1.0) * h);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let (mut x1, mut x2) = (b - g * (b - a), a + g * (b - a));
        let (mut f1, mut f2) = (at(x1), at(x2));
        for _ in 0..60 {
            if f1 > f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = at(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = at(x2);
            }
        }
        best = best.max(f1).max(f2);
    }
    best
}

/// Parlett–Reinsch diagonal similarity scaling, in place.
fn balance(m: &mut DMatrix<Complex64>) {
    const RADIX: f64 = 2.0;
    let n = m.nrows();
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in (0..n).filter(|&j| j != i) {
                c += m[(j, i)].l1_norm();
                r += m[(i, j)].l1_norm();
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

/// Roots of `Σ c_k z^k` from the eigenvalues of the companion matrix,
/// refined by Newton steps.
pub(crate) fn polynomial_roots(c: &[Complex64]) -> Result<Vec<Complex64>> {
    let deg = c.len().saturating_sub(1);
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = c[deg];
    if lead.norm() == 0.0 {
        return invalid("leading coefficient is zero");
    }
    let mut m = DMatrix::<Complex64>::zeros(deg, deg);
    for j in 0..deg {
        m[(0, j)] = -c[deg - 1 - j] / lead;
    }
    for i in 1..deg {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    balance(&mut m);
    let schur = Schur::try_new(m, f64::EPSILON, 100 * deg.max(10))
        .ok_or_else(|| Error::Numerical("companion eigenvalue iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    let deriv: Vec<Complex64> = (1..=deg).map(|k| c[k] * k as f64).collect();
    Ok(t.diagonal()
        .iter()
        .map(|&r0| {
            let mut r = r0;
            let mut f = horner(c, r).norm();
            for _ in 0..4 {
                let d = horner(&deriv, r);
                if d.norm() == 0.0 {
                    break;
                }
                let next = r - horner(c, r) / d;
                let fn_ = horner(c, next).norm();
                if !(fn_ < f) {
                    break;
                }
                r = next;
                f = fn_;
            }
            r
        })
        .collect())
}

/// `p₀ ∏(1 − r z⁻¹)` padded to `n` coefficients, with `p₀ > 0` chosen so
/// that the zero-lag autocorrelation equals `d0`.
pub(crate) fn p_from_roots(roots: &[Complex64], d0: f64, n: usize) -> Vec<Complex64> {
    let mut g = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = g.clone();
        next.push(Complex64::new(0.0, 0.0));
        for (k, gk) in g.iter().enumerate() {
            next[k + 1] -= r * gk;
        }
        g = next;
    }
    let energy: f64 = g.iter().map(|c| c.norm_sqr()).sum();
    let p0 = (d0 / energy).sqrt();
    g.resize(n, Complex64::new(0.0, 0.0));
    g.into_iter().map(|c| c * p0).collect()
}

/// `c_d = Σ_k p_{k+d} p̄_k` for `d = 0..n−1`.
fn autocorrelation(p: &[Complex64]) -> Vec<Complex64> {
    let n = p.len();
    (0..n).map(|d| (0..n - d).map(|k| p[k + d] * p[k].conj()).sum()).collect()
}

const REFINE_ITERS: usize = 40;

/// Newton iterations on `autocorrelation(p) = target` with `p₀` kept real.
///
/// Rooting alone loses accuracy when the factor has nearly repeated roots;
/// from the rooted estimate a few real-linearised Newton steps restore the
/// autocorrelation to roundoff while staying on the same spectral factor.
fn refine_factor(p: &mut [Complex64], target: &[Complex64]) {
    let n = p.len();
    let m = 2 * n - 1;
    let pack = |c: &[Complex64]| -> DVector<f64> {
        let mut v = DVector::zeros(m);
        v[0] = c[0].re;
        for d in 1..n {
            v[d] = c[d].re;
            v[n - 1 + d] = c[d].im;
        }
        v
    };
    let residual = |p: &[Complex64]| -> DVector<f64> {
        let c = autocorrelation(p);
        let diff: Vec<Complex64> = c.iter().zip(target).map(|(a, b)| a - b).collect();
        pack(&diff)
    };
    let mut r = residual(p);
    for _ in 0..REFINE_ITERS {
        let before = r.amax();
        if before < 1e-16 {
            break;
        }
        let mut jac = DMatrix::<f64>::zeros(m, m);
        let mut col = 0;
        for k in 0..n {
            let parts: &[Complex64] = if k == 0 {
                &[Complex64::new(1.0, 0.0)]
            } else {
                &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]
            };
            for &e in parts {
                let dc: Vec<Complex64> = (0..n)
                    .map(|d| {
                        let mut v = Complex64::new(0.0, 0.0);
                        if k >= d {
                            v += e * p[k - d].conj();
                        }
                        if k + d < n {
                            v += p[k + d] * e.conj();
                        }
                        v
                    })
                    .collect();
                jac.set_column(col, &pack(&dc));
                col += 1;
            }
        }
        let Some(step) = jac.lu().solve(&(-&r)) else { break };
        // halve the step until the residual drops
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-4 {
            let mut trial = p.to_vec();
            trial[0] += step[0] * t;
            for k in 1..n {
                trial[k] += Complex64::new(step[2 * k - 1], step[2 * k]) * t;
            }
            let rt = residual(&trial);
            if rt.amax() < before {
                p.copy_from_slice(&trial);
                r = rt;
                accepted = true;
                break;
            }
            t /= 2.0;
        }
        if !accepted {
            break;
        }
    }
}

/// Minimum-phase `P` with `|P|² = 1 − |Q|²` on the unit circle.
///
/// If `max|Q|` exceeds `1 − margin`, `Q` is first scaled down to that
/// modulus. With `margin = 0` a `Q` exceeding 1 is rejected.
pub fn complete_polynomial_report(q: &[Complex64], margin: f64) -> Result<Completion> {
    let n = q.len();
    if n == 0 {
        return invalid("Q has no coefficients");
    }
    if !(0.0..1.0).contains(&margin) {
        return invalid(format!("margin {margin} outside [0, 1)"));
    }
    if q.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return invalid("non-finite Q coefficient");
    }
    let peak = max_modulus(q);
    let q_scale = if peak > 1.0 - margin {
        if margin == 0.0 {
            return Err(Error::Infeasible(format!("max |Q| on the unit circle is {peak} > 1")));
        }
        (1.0 - margin) / peak
    } else {
        1.0
    };
    let q: Vec<Complex64> = q.iter().map(|c| c * q_scale).collect();

    // D(z) = 1 − Q(z)Q*(1/z̄) = Σ_d D_d z^{−d}, d = −(n−1)..(n−1)
    let lag = |d: usize| -> Complex64 { (0..n - d).map(|k| q[k + d] * q[k].conj()).sum() };
    let mut dcoef = vec![Complex64::new(0.0, 0.0); 2 * n - 1];
    for d in 0..n {
        let r = lag(d);
        // coefficient of z^{n−1−d} and z^{n−1+d}
        dcoef[n - 1 - d] -= r;
        if d > 0 {
            dcoef[n - 1 + d] -= r.conj();
        }
    }
    dcoef[n - 1] += Complex64::new(1.0, 0.0);
    let d0 = dcoef[n - 1].re;

    let scale = dcoef.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let tiny = 1e-15 * scale;
    let lo = dcoef.iter().position(|c| c.norm() > tiny).unwrap_or(n - 1);
    let hi = dcoef.iter().rposition(|c| c.norm() > tiny).unwrap_or(n - 1);
    let roots = polynomial_roots(&dcoef[lo..=hi])?;
    // Roots pair up as (r, 1/r̄); the smaller half of each pair forms the
    // minimum-phase factor. Ranking by modulus stays correct when a pair
    // straddles the circle by less than the rooting error.
    let want = (hi - lo) / 2;
    if roots.len() != 2 * want {
        return Err(Error::Numerical(format!(
            "autocorrelation polynomial has {} roots, expected {}",
            roots.len(),
            2 * want
        )));
    }
    let mut inside = roots;
    inside.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    inside.truncate(want);
    let mut p = p_from_roots(&inside, d0, n);
    let target: Vec<Complex64> = (0..n).map(|d| dcoef[n - 1 - d]).collect();
    refine_factor(&mut p, &target);
    let poly = SpinorPolynomials::new(p, q)?;
    let residual = poly.unimodularity_defect(16 * n);
    if !(residual <= COMPLETION_TOL) {
        return Err(Error::Numerical(format!(
            "completed pair violates |P|²+|Q|² = 1 by {residual:e}"
        )));
    }
    Ok(Completion {
        poly,
        q_scale,
        residual,
    })
}

pub fn complete_polynomial(q: &[Complex64], margin: f64) -> Result<SpinorPolynomials> {
    Ok(complete_polynomial_report(q, margin)?.poly)
}
