//! Exact piecewise-constant propagation of spin ensembles over dispersion
//! grids, with distance and fidelity evaluation.

mod grid;
mod propagate;
mod state;
mod su2;
mod two_qubit;

pub use grid::{linspace, DispersionGrid, GridPoint, AXES, DEFAULT_POINTS};
pub use propagate::{
    drift_reversal_residual, fidelity_map, phase_frame_check, propagate, sequence_propagator,
    step_propagator, ControlSequence, StepShape,
};
pub use state::{
    ensemble_distance, fidelity_of, DistanceReport, EnsembleState, FidelityMap, PointState,
    TargetSpec, STATE_TOL,
};
pub use su2::{Su2, SU2_TOL};
pub use two_qubit::{
    coupling_propagator, coupling_time, local_rotation, propagate_two_qubit, tensor_propagator,
    two_qubit_propagator, TwoQubitSegment,
};
