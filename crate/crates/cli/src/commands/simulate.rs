use ensctl_core::ensemble_sim::{fidelity_of, propagate, EnsembleState, PointState, TargetSpec};
use ensctl_core::io;
use ensctl_core::Result;
use serde::Serialize;

use crate::args::{FidelityMapArgs, Simulate};
use crate::output::{bloch, read_grid, read_pulse, report};
use crate::Status;

#[derive(Serialize)]
struct SimulateSummary {
    points: usize,
    duration: f64,
    max_norm_defect: f64,
}

pub fn simulate(a: &Simulate) -> Result<Status> {
    let pulse = read_pulse(&a.pulse)?;
    let grid = read_grid(&a.grid)?;
    let initial = EnsembleState::uniform(grid.clone(), PointState::Bloch(bloch(&a.initial, "--initial")?))?;
    let state = propagate(&pulse, &grid, &initial)?;
    io::write_atomic(&a.out, &io::state_csv(&state)?)?;
    report(
        &SimulateSummary {
            points: grid.len(),
            duration: pulse.duration(),
            max_norm_defect: state.max_norm_defect(),
        },
        None,
    )?;
    Ok(Status::Done)
}

#[derive(Serialize)]
struct MapSummary {
    points: usize,
    min_fidelity: f64,
    mean_fidelity: f64,
}

pub fn fidelity(a: &FidelityMapArgs) -> Result<Status> {
    let pulse = read_pulse(&a.pulse)?;
    let grid = read_grid(&a.grid)?;
    let initial = EnsembleState::uniform(grid.clone(), PointState::Bloch(bloch(&a.initial, "--initial")?))?;
    let target = TargetSpec::constant(PointState::Bloch(bloch(&a.target, "--target")?))?;
    let map = fidelity_of(&propagate(&pulse, &grid, &initial)?, &target)?;
    io::emit_fidelity_csv(&map, &a.out)?;
    report(
        &MapSummary {
            points: grid.len(),
            min_fidelity: map.min(),
            mean_fidelity: map.mean(),
        },
        None,
    )?;
    Ok(Status::Done)
}
