//! Hard-pulse spinor polynomials, the forward and Shinnar–Le Roux
//! recursions, minimum-phase completion and broadband / pattern design.

mod complete;
mod design;
mod recursion;

pub use complete::{
    complete_polynomial, complete_polynomial_report, max_modulus, Completion, COMPLETION_TOL,
    DEFAULT_MARGIN,
};
pub use design::{
    design_broadband, design_pattern, loglog_slope, sequence_to_steps, simulated_flips,
    splitting_error, steps_to_sequence, target_to_polys, verify_design, PolyDesign, ProfileKind,
    RotationAxis, SlrDesign, TargetProfile, CHECK_POINTS, MAX_BLOCKS, SAMPLES_PER_COEFF,
};
pub use recursion::{
    circle_points, forward_recursion, forward_recursion_with, inverse_recursion,
    inverse_recursion_report, unimodularity_defect, HardPulseStep, InverseReport,
    SpinorPolynomials, INPUT_UNIMODULARITY_TOL,
};
