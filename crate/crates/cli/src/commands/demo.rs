use ensctl_core::ensemble_sim::{phase_frame_check, DispersionGrid};
use ensctl_core::linear_ensemble::{heisenberg_invariant, heisenberg_target_residual, RATIO_RTOL};
use ensctl_core::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::args::{DemoHeisenberg, DemoPhase};
use crate::output::{read_pulse, report};
use crate::Status;

#[derive(Serialize)]
struct PhaseReport {
    thetas: usize,
    max_frame_deviation: f64,
    tolerance: f64,
    identical_trajectories: bool,
}

pub fn phase(a: &DemoPhase) -> Result<Status> {
    let pulse = read_pulse(&a.pulse)?;
    if a.thetas.is_empty() {
        return Err(Error::InvalidInput("--thetas needs at least one value".into()));
    }
    let grid = DispersionGrid::new(vec![
        ("omega".into(), vec![a.omega]),
        ("epsilon".into(), vec![a.epsilon]),
        ("theta".into(), a.thetas.clone()),
    ])?;
    let dev = phase_frame_check(&pulse, &grid, [0.0, 0.0, 1.0])?;
    let same = dev <= a.tol;
    report(
        &PhaseReport {
            thetas: a.thetas.len(),
            max_frame_deviation: dev,
            tolerance: a.tol,
            identical_trajectories: same,
        },
        None,
    )?;
    if same {
        Ok(Status::Done)
    } else {
        Err(Error::Numerical(format!("frame deviation {dev:e} exceeds {:e}", a.tol)))
    }
}

#[derive(Serialize)]
struct HeisenbergDemo {
    epsilons: Vec<f64>,
    draws: usize,
    /// Worst relative spread of `(x₁/ε, x₂/ε, x₃/ε²)` over draws.
    max_relative_spread: f64,
    tolerance: f64,
    ratios_constant: bool,
    /// Common target for `x₃` and the best residual any control can reach.
    target: f64,
    best_scale: f64,
    best_residual: f64,
}

pub fn heisenberg(a: &DemoHeisenberg) -> Result<Status> {
    if a.draws == 0 || a.samples == 0 {
        return Err(Error::InvalidInput("draws and samples must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..a.draws {
        let u1: Vec<f64> = (0..a.samples).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u2: Vec<f64> = (0..a.samples).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = heisenberg_invariant(&u1, &u2, a.dt, &a.epsilons, [0.0; 3])?;
        worst = worst.max(r.max_relative_spread);
    }
    let (c, residual) = heisenberg_target_residual(&a.epsilons, a.target)?;
    let holds = worst <= RATIO_RTOL;
    report(
        &HeisenbergDemo {
            epsilons: a.epsilons.clone(),
            draws: a.draws,
            max_relative_spread: worst,
            tolerance: RATIO_RTOL,
            ratios_constant: holds,
            target: a.target,
            best_scale: c,
            best_residual: residual,
        },
        a.out.as_deref(),
    )?;
    if holds {
        Ok(Status::Done)
    } else {
        Err(Error::Numerical(format!("ratio spread {worst:e} exceeds {RATIO_RTOL:e}")))
    }
}
