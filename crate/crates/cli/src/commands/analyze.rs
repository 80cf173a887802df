use clap::ValueEnum;
use ensctl_core::composite::{EPSILON, EPSILON_1, EPSILON_2, OMEGA};
use ensctl_core::ensemble_sim::linspace;
use ensctl_core::liealg::{
    approximable, coupling_b1, coupling_b2, exponents, format_exponents, heisenberg_fields, heisenberg_triple,
    lie_closure, lie_closure_sampled, matrix_closure, omega_x, omega_y, omega_z, vf_nilpotency, ClosureReport,
    DispersionPolyElement as Poly, FitVerdict, FunctionFamily, FunctionSet, Nilpotency, SampledFunction,
    SampledGenerator,
};
use ensctl_core::linear_ensemble::{
    companion_transform, ensemble_necessary_conditions, reachability_residual, ConditionReport, SampleSet,
};
use ensctl_core::{io, Error, Result};
use serde::Serialize;

use crate::args::{AnalyzeLie, AnalyzeLinear, LieSystem};
use crate::output::report;
use crate::Status;

#[derive(Serialize)]
struct Direction {
    label: String,
    functions: Vec<String>,
}

#[derive(Serialize)]
struct FitReport {
    parameter: &'static str,
    powers: Vec<u32>,
    coefficients: Vec<f64>,
    l2_residual: f64,
    max_residual: f64,
    verdict: FitVerdict,
}

#[derive(Serialize)]
struct LieReport {
    system: String,
    dimension: usize,
    depth_reached: usize,
    closed: bool,
    nilpotency: Nilpotency,
    #[serde(skip_serializing_if = "Option::is_none")]
    vector_field_nilpotency: Option<Nilpotency>,
    directions: Vec<Direction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<FitReport>,
}

fn closure(a: &AnalyzeLie) -> Result<(ClosureReport, Option<Nilpotency>)> {
    let (x, y, z) = (omega_x(), omega_y(), omega_z());
    let symbolic = |gens: Vec<Poly>| lie_closure(&gens, a.depth);
    Ok(match a.system {
        LieSystem::EpsRf => (symbolic(vec![Poly::linear(EPSILON, x), Poly::linear(EPSILON, y)])?, None),
        LieSystem::StrongRf => {
            let mut gens = vec![Poly::linear(OMEGA, z), Poly::constant(x)];
            if !a.single_quadrature {
                gens.push(Poly::constant(y));
            }
            (symbolic(gens)?, None)
        }
        LieSystem::TwoParam => (symbolic(vec![Poly::linear(EPSILON_1, x), Poly::linear(EPSILON_2, y)])?, None),
        LieSystem::Coupling => (symbolic(vec![Poly::constant(coupling_b1()), Poly::linear("J", coupling_b2())])?, None),
        LieSystem::Heisenberg => {
            let (g1, g2) = heisenberg_fields();
            let vf = vf_nilpotency(&[g1, g2], a.depth)?;
            (matrix_closure(&heisenberg_triple()[..2], a.depth)?, Some(vf))
        }
        LieSystem::Phase => {
            if a.points == 0 {
                return Err(Error::InvalidInput("points must be positive".into()));
            }
            let thetas = linspace(0.0, 2.0 * std::f64::consts::PI, a.points);
            // rf generators seen from a frame rotated by θ about z
            let rotated = |c: f64, s: f64| x.scale(c).add(&y.scale(s)).map(|m| m.into_entries());
            let gx = SampledGenerator::new("Ωx(θ)", thetas.iter().map(|t| rotated(t.cos(), t.sin())).collect::<Result<_>>()?)?;
            let gy = SampledGenerator::new("Ωy(θ)", thetas.iter().map(|t| rotated(-t.sin(), t.cos())).collect::<Result<_>>()?)?;
            (lie_closure_sampled(&[gx, gy], a.depth)?, None)
        }
    })
}

fn fit(a: &AnalyzeLie, coeffs: &[f64]) -> Result<FitReport> {
    if a.fit_points == 0 || !(a.fit_min <= a.fit_max) {
        return Err(Error::InvalidInput("fit range needs fit-min ≤ fit-max and at least one point".into()));
    }
    if coeffs.is_empty() || a.fit_powers.is_empty() {
        return Err(Error::InvalidInput("fit target and powers must be nonempty".into()));
    }
    let p = a.system.parameter();
    let grid = linspace(a.fit_min, a.fit_max, a.fit_points);
    let target = SampledFunction::on_axis(p, &grid, |x| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c))?;
    let family = FunctionFamily::Monomials(a.fit_powers.iter().map(|&k| exponents(&[(p, k)])).collect());
    let r = approximable(&target, &family, a.fit_tol)?;
    Ok(FitReport {
        parameter: p,
        powers: a.fit_powers.clone(),
        coefficients: r.coefficients,
        l2_residual: r.l2_residual,
        max_residual: r.max_residual,
        verdict: r.verdict,
    })
}

pub fn lie(a: &AnalyzeLie) -> Result<Status> {
    let (c, vf) = closure(a)?;
    let directions = c
        .basis
        .iter()
        .zip(&c.per_direction_functions)
        .map(|(b, f)| Direction {
            label: b.label().to_string(),
            functions: match f {
                FunctionSet::Monomials(m) => m.iter().map(format_exponents).collect(),
                FunctionSet::Sampled(s) => (0..s.len()).map(|k| format!("sampled[{k}]")).collect(),
            },
        })
        .collect();
    let fit = a.fit_target.as_deref().map(|t| fit(a, t)).transpose()?;
    let verdict = fit.as_ref().map(|f| f.verdict);
    let rep = LieReport {
        system: a.system.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default(),
        dimension: c.dimension(),
        depth_reached: c.depth_reached,
        closed: c.closed,
        nilpotency: c.nilpotency,
        vector_field_nilpotency: vf,
        directions,
        fit,
    };
    report(&rep, a.out.as_deref())?;
    Ok(match verdict {
        Some(FitVerdict::NotAchievable) => Status::Infeasible(format!(
            "target is not approximable by powers {:?} of {} within {:e}",
            a.fit_powers,
            a.system.parameter(),
            a.fit_tol
        )),
        _ => Status::Done,
    })
}

#[derive(Serialize)]
struct Reachability {
    horizon: usize,
    residual: f64,
    refined_horizon: usize,
    refined_residual: f64,
}

#[derive(Serialize)]
struct LinearReport {
    samples: usize,
    companion_residuals: Vec<f64>,
    /// `(sample, controllability rank)` of samples that are not controllable.
    uncontrollable: Vec<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    conditions: Option<ConditionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reachability: Option<Reachability>,
}

pub fn linear(a: &AnalyzeLinear) -> Result<Status> {
    let text = io::read_text(&a.samples)?;
    let set = SampleSet::from_json(&text).map_err(|e| match e {
        Error::InvalidInput(m) => Error::InvalidInput(format!("{}: {m}", a.samples.display())),
        other => other,
    })?;
    let mut residuals = Vec::new();
    let mut uncontrollable = Vec::new();
    for (i, s) in set.samples.iter().enumerate() {
        match companion_transform(s) {
            Ok(f) => residuals.push(f.residual),
            Err(Error::Uncontrollable { rank, .. }) => uncontrollable.push((i, rank)),
            Err(e) => return Err(Error::InvalidInput(format!("sample {i}: {e}"))),
        }
    }
    let conditions = if uncontrollable.is_empty() && set.samples.len() >= 2 {
        Some(ensemble_necessary_conditions(&set.samples)?)
    } else {
        None
    };
    let reachability = match &set.targets {
        Some(t) => Some(Reachability {
            horizon: a.horizon,
            residual: reachability_residual(&set.samples, t, a.horizon, a.dt)?,
            refined_horizon: 2 * a.horizon,
            refined_residual: reachability_residual(&set.samples, t, 2 * a.horizon, a.dt / 2.0)?,
        }),
        None => None,
    };
    let failed = !uncontrollable.is_empty() || conditions.as_ref().is_some_and(|c| !c.passed);
    report(
        &LinearReport {
            samples: set.samples.len(),
            companion_residuals: residuals,
            uncontrollable,
            conditions,
            reachability,
        },
        a.out.as_deref(),
    )?;
    Ok(if failed {
        Status::Infeasible("the sample set violates a necessary condition for ensemble controllability".into())
    } else {
        Status::Done
    })
}
