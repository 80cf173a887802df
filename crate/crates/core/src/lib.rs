//! Design and verification of dispersion-compensating control sequences for
//! spin ensembles.
//!
//! The crate is organised by concern:
//!
//! * [`liealg`]: matrix and vector-field Lie brackets, closure of generator
//!   sets with dispersion-monomial bookkeeping, nilpotency detection and
//!   least-squares approximability tests.
//! * [`ensemble_sim`]: exact piecewise-constant propagation of Bloch
//!   vectors, spinors and two-qubit unitaries over dispersion grids.
//! * [`slr`]: hard-pulse spinor polynomials, the forward and backward
//!   (Shinnar–Le Roux) recursions, minimum-phase completion and
//!   broadband / pattern pulse design.
//! * [`composite`]: group-commutator compilation of nested bracket words
//!   into compensating sequences.
//! * [`linear_ensemble`]: companion forms and necessary conditions for
//!   ensembles of linear systems, plus the nonholonomic-integrator invariant.
//! * [`io`]: the pulse, grid and report file formats.
//!
//! Units are rad/s and seconds throughout.

pub mod composite;
pub mod ensemble_sim;
pub mod error;
pub mod io;
pub mod linalg;
pub mod liealg;
pub mod linear_ensemble;
pub mod slr;

pub use error::{Error, Result};

pub use ensemble_sim::{
    ControlSequence, DispersionGrid, DistanceReport, EnsembleState, FidelityMap, GridPoint,
    StepShape, Su2, TargetSpec,
};
pub use liealg::{
    ClosureReport, DispersionMonomial, DispersionPolyElement, FitResult, FitVerdict,
    GeneratorMatrix, Nilpotency, PolyVectorField,
};

pub use composite::{CompiledSegments, CompiledSequence, Diagnostics, RfSegment};
pub use linear_ensemble::{CompanionForm, LinearSystemSample};
pub use slr::{HardPulseStep, SpinorPolynomials, TargetProfile};

pub use num_complex::Complex64;
