use ensctl_core::composite::{
    compile_j_robust_zz, compile_omega_robust, compile_robust_rotation, gate_fidelity, rf_propagator,
    rotation_fidelity, CompiledSegments, Diagnostics, JRobustSpec, OmegaRobustSpec, RfSegment, RobustRotationSpec,
    EPSILON, OMEGA,
};
use ensctl_core::ensemble_sim::{
    coupling_propagator, fidelity_map, linspace, sequence_propagator, two_qubit_propagator, DispersionGrid,
    FidelityMap, PointState, Su2, TargetSpec, TwoQubitSegment,
};
use ensctl_core::io::{self, SCHEMA_VERSION};
use ensctl_core::liealg::SampledFunction;
use ensctl_core::slr::{design_broadband, design_pattern, simulated_flips, RotationAxis, TargetProfile, CHECK_POINTS};
use ensctl_core::{Error, Result};
use serde::Serialize;

use crate::args::{Axis, CompositeKind, DesignComposite, DesignPattern, DesignSlr, DesignZz};
use crate::Status;

/// Fidelities are clamped into `[0, 1]` against rounding.
fn unit_interval(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

fn infeasible_as_status(r: Result<Status>) -> Result<Status> {
    match r {
        Err(Error::Infeasible(msg)) => Ok(Status::Infeasible(msg)),
        other => other,
    }
}

#[derive(Serialize)]
struct SlrDetails {
    blocks: usize,
    steps: usize,
    fit_residual: f64,
    band_error: f64,
    polynomial_consistency: f64,
    q_scale: f64,
    peak_amplitude: f64,
    duration: f64,
}

pub fn slr(a: &DesignSlr) -> Result<Status> {
    infeasible_as_status(slr_inner(a))
}

fn slr_inner(a: &DesignSlr) -> Result<Status> {
    let axis = match a.axis {
        Axis::X => RotationAxis::X,
        Axis::Y => RotationAxis::Y,
    };
    if !(a.dt > 0.0) {
        return Err(Error::InvalidInput("dt must be positive".into()));
    }
    let design = design_broadband(axis, a.angle, a.band, a.steps, a.dt, a.a_max)?;
    // the delay phase of the hard-pulse train multiplies both Cayley–Klein
    // parameters, so it drops out of the spinor overlap
    let target = Su2::from_axis_angle(a.axis.vector(), a.angle);
    let grid = DispersionGrid::new(vec![
        ("omega".into(), TargetProfile::broadband(axis, a.angle, a.band, CHECK_POINTS)?.omega),
        ("epsilon".into(), vec![1.0]),
    ])?;
    let map = fidelity_map(&design.pulse, &grid, &TargetSpec::constant(PointState::Spinor(target))?)?;
    let out = a.outputs.resolve();
    out.write(
        "design-slr",
        &io::pulse_to_json(&design.pulse)?,
        &map,
        SlrDetails {
            blocks: design.blocks,
            steps: design.steps.len(),
            fit_residual: design.fit_error,
            band_error: design.band_error,
            polynomial_consistency: design.consistency,
            q_scale: design.q_scale,
            peak_amplitude: design.pulse.peak_amplitude(),
            duration: design.pulse.duration(),
        },
    )?;
    Ok(Status::Done)
}

#[derive(Serialize)]
struct PatternDetails {
    steps: usize,
    fit_residual: f64,
    flip_error: f64,
    polynomial_consistency: f64,
    q_scale: f64,
    peak_amplitude: f64,
    /// Map values are `(1 + cos Δ)/2` for the flip-angle error `Δ`.
    map_metric: &'static str,
}

pub fn pattern(a: &DesignPattern) -> Result<Status> {
    infeasible_as_status(pattern_inner(a))
}

fn pattern_inner(a: &DesignPattern) -> Result<Status> {
    if !(a.dt > 0.0) {
        return Err(Error::InvalidInput("dt must be positive".into()));
    }
    let count = a.samples.unwrap_or(16 * a.steps.max(1));
    let profile = TargetProfile::band_selective(a.inside, a.outside, a.half_band, a.transition, a.dt, count)?;
    let design = design_pattern(&profile, a.steps, a.dt)?;
    let cared: Vec<usize> = (0..profile.omega.len()).filter(|&j| profile.weight[j] > 0.0).collect();
    let omega: Vec<f64> = cared.iter().map(|&j| profile.omega[j]).collect();
    let wanted = profile.flips();
    let got = simulated_flips(&design.pulse, &omega);
    let values = cared
        .iter()
        .zip(&got)
        .map(|(&j, g)| unit_interval((1.0 + (g - wanted[j]).cos()) / 2.0))
        .collect();
    let grid = DispersionGrid::new(vec![("omega".into(), omega), ("epsilon".into(), vec![1.0])])?;
    let map = FidelityMap::new(grid, values)?;
    a.outputs.resolve().write(
        "design-pattern",
        &io::pulse_to_json(&design.pulse)?,
        &map,
        PatternDetails {
            steps: design.steps.len(),
            fit_residual: design.fit_error,
            flip_error: design.band_error,
            polynomial_consistency: design.consistency,
            q_scale: design.q_scale,
            peak_amplitude: design.pulse.peak_amplitude(),
            map_metric: "flip",
        },
    )?;
    Ok(Status::Done)
}

#[derive(Serialize)]
struct CompositeDetails<'a> {
    kind: &'a str,
    basis: &'a [u32],
    #[serde(flatten)]
    diagnostics: &'a Diagnostics,
    subdivision_monotone: bool,
}

#[derive(Serialize)]
struct SegmentFile<T: Serialize> {
    schema_version: u32,
    kind: &'static str,
    segments: T,
}

pub fn composite(a: &DesignComposite) -> Result<Status> {
    infeasible_as_status(composite_inner(a))
}

fn composite_inner(a: &DesignComposite) -> Result<Status> {
    if a.points == 0 {
        return Err(Error::InvalidInput("points must be positive".into()));
    }
    let n = a.axis.vector();
    match a.kind {
        CompositeKind::Robust => {
            let (lo, hi) = (a.min.unwrap_or(0.9), a.max.unwrap_or(1.1));
            let basis = a.basis.clone().unwrap_or_else(|| vec![1, 3, 5]);
            let eps = linspace(lo, hi, a.points);
            let compiled = compile_robust_rotation(&RobustRotationSpec {
                axis: a.axis.index(),
                target: SampledFunction::on_axis(EPSILON, &eps, |_| a.angle)?,
                basis: basis.clone(),
                tol: a.tol,
                subdivisions: a.subdivisions,
                leaf_dt: a.leaf_dt,
            })?;
            let CompiledSegments::Pulse(pulse) = &compiled.segments else {
                return Err(Error::Numerical("robust rotation did not compile to a pulse".into()));
            };
            let grid = DispersionGrid::new(vec![("omega".into(), vec![0.0]), ("epsilon".into(), eps)])?;
            let target = Su2::from_axis_angle(n, a.angle);
            let values = grid
                .points()
                .iter()
                .map(|p| unit_interval(rotation_fidelity(&sequence_propagator(pulse, p), &target)))
                .collect();
            let map = FidelityMap::new(grid, values)?;
            let d = &compiled.diagnostics;
            let details = CompositeDetails {
                kind: "robust",
                basis: &basis,
                diagnostics: d,
                subdivision_monotone: d.subdivision_monotone(),
            };
            a.outputs.resolve().write("design-composite", &io::pulse_to_json(pulse)?, &map, details)?;
        }
        CompositeKind::Omega => {
            let (lo, hi) = (a.min.unwrap_or(-1.0), a.max.unwrap_or(1.0));
            let basis = a.basis.clone().unwrap_or_else(|| vec![0, 1]);
            let ws = linspace(lo, hi, a.points);
            let f = |w: f64| a.angle + a.slope * w;
            let compiled = compile_omega_robust(&OmegaRobustSpec {
                axis: a.axis.index(),
                target: SampledFunction::on_axis(OMEGA, &ws, f)?,
                powers: basis.clone(),
                dual_quadrature: !a.single_quadrature,
                tol: a.tol,
                subdivisions: a.subdivisions,
            })?;
            let CompiledSegments::StrongRf(segments) = &compiled.segments else {
                return Err(Error::Numerical("ω-robust rotation did not compile to strong-rf segments".into()));
            };
            let grid = DispersionGrid::new(vec![("omega".into(), ws.clone()), ("epsilon".into(), vec![1.0])])?;
            let values = ws
                .iter()
                .map(|&w| unit_interval(rotation_fidelity(&rf_propagator(segments, w), &Su2::from_axis_angle(n, f(w)))))
                .collect();
            let map = FidelityMap::new(grid, values)?;
            let file = SegmentFile::<&[RfSegment]> {
                schema_version: SCHEMA_VERSION,
                kind: "strong_rf",
                segments,
            };
            let d = &compiled.diagnostics;
            let details = CompositeDetails {
                kind: "omega",
                basis: &basis,
                diagnostics: d,
                subdivision_monotone: d.subdivision_monotone(),
            };
            a.outputs.resolve().write("design-composite", &io::to_json(&file)?, &map, details)?;
        }
    }
    Ok(Status::Done)
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum SegmentRecord {
    Coupling { duration: f64 },
    Local { re: Vec<Vec<f64>>, im: Vec<Vec<f64>> },
    Tensor { xx: f64, yy: f64, zz: f64, duration: f64 },
}

impl From<&TwoQubitSegment> for SegmentRecord {
    fn from(s: &TwoQubitSegment) -> Self {
        match s {
            TwoQubitSegment::Coupling { duration } => SegmentRecord::Coupling { duration: *duration },
            TwoQubitSegment::Local(m) => {
                let rows = |imag: bool| {
                    let at = |r: usize, c: usize| if imag { m[(r, c)].im } else { m[(r, c)].re };
                    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| at(r, c)).collect()).collect()
                };
                SegmentRecord::Local {
                    re: rows(false),
                    im: rows(true),
                }
            }
            TwoQubitSegment::Tensor { xx, yy, zz, duration } => SegmentRecord::Tensor {
                xx: *xx,
                yy: *yy,
                zz: *zz,
                duration: *duration,
            },
        }
    }
}

#[derive(Serialize)]
struct ZzDetails<'a> {
    basis: &'a [u32],
    coupling_time: f64,
    #[serde(flatten)]
    diagnostics: &'a Diagnostics,
}

pub fn zz(a: &DesignZz) -> Result<Status> {
    infeasible_as_status(zz_inner(a))
}

fn zz_inner(a: &DesignZz) -> Result<Status> {
    let spec = JRobustSpec {
        tol: a.tol,
        subdivisions: a.subdivisions,
        samples: a.samples,
        ..JRobustSpec::new(a.theta, a.j0, a.delta, a.basis.clone())
    };
    let compiled = compile_j_robust_zz(&spec)?;
    let CompiledSegments::TwoQubit(segments) = &compiled.segments else {
        return Err(Error::Numerical("ZZ design did not compile to two-qubit segments".into()));
    };
    let js = if a.delta == 0.0 {
        vec![a.j0]
    } else {
        linspace(a.j0 * (1.0 - a.delta), a.j0 * (1.0 + a.delta), a.samples)
    };
    let gate = coupling_propagator(a.theta, 1.0);
    let values = js
        .iter()
        .map(|&j| Ok(unit_interval(gate_fidelity(&gate, &two_qubit_propagator(segments, j)?))))
        .collect::<Result<Vec<_>>>()?;
    let grid = DispersionGrid::new(vec![
        ("omega".into(), vec![0.0]),
        ("epsilon".into(), vec![1.0]),
        ("J".into(), js),
    ])?;
    let map = FidelityMap::new(grid, values)?;
    let file = SegmentFile {
        schema_version: SCHEMA_VERSION,
        kind: "two_qubit",
        segments: segments.iter().map(SegmentRecord::from).collect::<Vec<_>>(),
    };
    let details = ZzDetails {
        basis: &a.basis,
        coupling_time: ensctl_core::ensemble_sim::coupling_time(segments),
        diagnostics: &compiled.diagnostics,
    };
    a.outputs.resolve().write("design-zz", &io::to_json(&file)?, &map, details)?;
    Ok(Status::Done)
}
