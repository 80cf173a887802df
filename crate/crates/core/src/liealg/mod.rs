//! Lie brackets of matrices, dispersion polynomials and polynomial vector
//! fields; closure, nilpotency and approximability.

mod closure;
mod fit;
mod matrix;
mod poly;
mod vector_field;

pub use closure::{
    lie_closure, lie_closure_sampled, matrix_algebra, matrix_closure, reachable_functions,
    vf_nilpotency, ClosureReport, FunctionSet, Nilpotency, SampledGenerator, DEFAULT_MAX_DEPTH,
    SPAN_RTOL,
};
pub use fit::{approximable, FitResult, FitVerdict, FunctionFamily, SampledFunction};
pub use matrix::{
    bracket, coupling_b1, coupling_b2, heisenberg_triple, omega, omega_x, omega_y, omega_z,
    two_qubit_pauli, GeneratorMatrix,
};
pub use poly::{
    ad_power, bracket_poly, eval_monomial, exponents, format_exponents, DispersionMonomial,
    DispersionPolyElement, Exponents,
};
pub use vector_field::{heisenberg_fields, vf_bracket, PolyVectorField, Polynomial};
