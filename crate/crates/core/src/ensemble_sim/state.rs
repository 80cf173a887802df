use serde::{Deserialize, Serialize};

use super::grid::DispersionGrid;
use super::su2::Su2;
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, CMatrix};

/// Norm tolerance for states handed to the simulator.
pub const STATE_TOL: f64 = 1e-9;

/// State of one ensemble member.
#[derive(Clone, Debug, PartialEq)]
pub enum PointState {
    Bloch([f64; 3]),
    Spinor(Su2),
    /// 2×2 or 4×4 unitary.
    Unitary(CMatrix),
}

impl PointState {
    pub fn kind(&self) -> &'static str {
        match self {
            PointState::Bloch(_) => "bloch",
            PointState::Spinor(_) => "spinor",
            PointState::Unitary(_) => "unitary",
        }
    }

    fn same_kind(&self, other: &Self) -> bool {
        match (self, other) {
            (PointState::Unitary(a), PointState::Unitary(b)) => a.nrows() == b.nrows(),
            _ => self.kind() == other.kind(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PointState::Bloch(x) => {
                let n = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                if !((n - 1.0).abs() <= STATE_TOL) {
                    return invalid(format!("Bloch vector has norm {n}"));
                }
            }
            PointState::Spinor(s) => {
                if !(s.defect() <= STATE_TOL) {
                    return invalid(format!("spinor is not normalised (defect {:e})", s.defect()));
                }
            }
            PointState::Unitary(u) => {
                if u.nrows() != u.ncols() || u.nrows() == 0 {
                    return invalid("unitary must be square");
                }
                let d = linalg::fro(&(u.adjoint() * u - linalg::identity(u.nrows())));
                if !(d <= STATE_TOL) {
                    return invalid(format!("matrix is not unitary (defect {d:e})"));
                }
            }
        }
        Ok(())
    }

    /// Euclidean distance for Bloch vectors, phase-invariant distance for
    /// spinors and unitaries.
    pub fn distance(&self, target: &Self) -> Result<f64> {
        match (self, target) {
            (PointState::Bloch(a), PointState::Bloch(b)) => {
                Ok(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt())
            }
            (PointState::Spinor(a), PointState::Spinor(b)) => Ok(a.state_distance(b)),
            (PointState::Unitary(a), PointState::Unitary(b)) if a.nrows() == b.nrows() => {
                let ip = (b.adjoint() * a).trace();
                let ph = if ip.norm() > 0.0 { ip / ip.norm() } else { linalg::ONE };
                Ok(linalg::fro(&(a - b * ph)))
            }
            _ => Err(Error::InvalidInput(format!(
                "cannot compare {} state with {} target",
                self.kind(),
                target.kind()
            ))),
        }
    }

    /// `(1 + cos ∠)/2` for Bloch vectors, `|⟨g|ψ⟩|²` for spinors,
    /// `|tr(G†U)|/dim` for unitaries.
    pub fn fidelity(&self, target: &Self) -> Result<f64> {
        match (self, target) {
            (PointState::Bloch(a), PointState::Bloch(b)) => {
                let c = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
                Ok((1.0 + c) / 2.0)
            }
            (PointState::Spinor(a), PointState::Spinor(b)) => Ok(a.state_overlap(b)),
            (PointState::Unitary(a), PointState::Unitary(b)) if a.nrows() == b.nrows() => {
                Ok((b.adjoint() * a).trace().norm() / a.nrows() as f64)
            }
            _ => Err(Error::InvalidInput(format!(
                "cannot compare {} state with {} target",
                self.kind(),
                target.kind()
            ))),
        }
    }
}

/// One state per grid point, all of the same kind.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleState {
    grid: DispersionGrid,
    states: Vec<PointState>,
}

impl EnsembleState {
    pub fn new(grid: DispersionGrid, states: Vec<PointState>) -> Result<Self> {
        if states.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} states for {} grid points",
                states.len(),
                grid.len()
            )));
        }
        if let Some(first) = states.first() {
            if states.iter().any(|s| !s.same_kind(first)) {
                return invalid("ensemble mixes state kinds");
            }
        }
        for s in &states {
            s.validate()?;
        }
        Ok(Self { grid, states })
    }

    /// The same state at every grid point.
    pub fn uniform(grid: DispersionGrid, state: PointState) -> Result<Self> {
        let states = vec![state; grid.len()];
        Self::new(grid, states)
    }

    pub(crate) fn from_parts(grid: DispersionGrid, states: Vec<PointState>) -> Self {
        Self { grid, states }
    }

    pub fn grid(&self) -> &DispersionGrid {
        &self.grid
    }

    pub fn states(&self) -> &[PointState] {
        &self.states
    }

    /// Largest norm defect over the ensemble.
    pub fn max_norm_defect(&self) -> f64 {
        self.states
            .iter()
            .map(|s| match s {
                PointState::Bloch(x) => ((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt() - 1.0).abs(),
                PointState::Spinor(s) => s.defect(),
                PointState::Unitary(u) => linalg::fro(&(u.adjoint() * u - linalg::identity(u.nrows()))),
            })
            .fold(0.0, f64::max)
    }
}

/// Desired final state: constant, or tabulated per grid point.
#[derive(Clone, Debug, PartialEq)]
pub enum TargetSpec {
    Constant(PointState),
    PerPoint(Vec<PointState>),
}

impl TargetSpec {
    pub fn constant(state: PointState) -> Result<Self> {
        state.validate()?;
        Ok(TargetSpec::Constant(state))
    }

    pub fn per_point(states: Vec<PointState>) -> Result<Self> {
        for s in &states {
            s.validate()?;
        }
        Ok(TargetSpec::PerPoint(states))
    }

    pub(crate) fn at(&self, i: usize) -> &PointState {
        match self {
            TargetSpec::Constant(s) => s,
            TargetSpec::PerPoint(v) => &v[i],
        }
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        match self {
            TargetSpec::PerPoint(v) if v.len() != n => Err(Error::GridMismatch(format!(
                "target table has {} entries for {n} grid points",
                v.len()
            ))),
            _ => Ok(()),
        }
    }
}

/// Grid-normalised L₂ (root-mean-square) distance and its supremum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub l2: f64,
    pub sup: f64,
}

pub fn ensemble_distance(state: &EnsembleState, target: &TargetSpec) -> Result<DistanceReport> {
    target.check_len(state.states.len())?;
    let mut sum = 0.0;
    let mut sup: f64 = 0.0;
    for (i, s) in state.states.iter().enumerate() {
        let d = s.distance(target.at(i))?;
        sum += d * d;
        sup = sup.max(d);
    }
    let n = state.states.len().max(1) as f64;
    Ok(DistanceReport {
        l2: (sum / n).sqrt(),
        sup,
    })
}

/// Per-point fidelity over a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityMap {
    pub grid: DispersionGrid,
    pub values: Vec<f64>,
}

impl FidelityMap {
    pub fn new(grid: DispersionGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} fidelities for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !(-1e-12..=1.0 + 1e-12).contains(v)) {
            return invalid("fidelity outside [0, 1]");
        }
        Ok(Self { grid, values })
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len().max(1) as f64
    }
}

pub fn fidelity_of(state: &EnsembleState, target: &TargetSpec) -> Result<FidelityMap> {
    target.check_len(state.states.len())?;
    let values = state
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| s.fidelity(target.at(i)).map(|f| f.clamp(0.0, 1.0)))
        .collect::<Result<_>>()?;
    FidelityMap::new(state.grid.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antipodal_orthogonal_pair() {
        let g = DispersionGrid::axis("omega", vec![-1.0, 0.0, 1.0]).unwrap();
        let s = EnsembleState::uniform(g, PointState::Bloch([1.0, 0.0, 0.0])).unwrap();
        let t = TargetSpec::constant(PointState::Bloch([0.0, 0.0, 1.0])).unwrap();
        let d = ensemble_distance(&s, &t).unwrap();
        assert!((d.l2 - 2f64.sqrt()).abs() < 1e-15);
        assert!((d.sup - 2f64.sqrt()).abs() < 1e-15);
        let f = fidelity_of(&s, &t).unwrap();
        assert!(f.values.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn self_distance_is_zero() {
        let g = DispersionGrid::nominal();
        let sp = Su2::from_axis_angle([0.0, 1.0, 0.0], 0.3);
        let s = EnsembleState::uniform(g, PointState::Spinor(sp)).unwrap();
        let d = ensemble_distance(&s, &TargetSpec::Constant(PointState::Spinor(sp))).unwrap();
        assert_eq!(d.l2, 0.0);
    }

    #[test]
    fn mismatches_rejected() {
        let g = DispersionGrid::axis("omega", vec![0.0, 1.0]).unwrap();
        assert!(EnsembleState::new(g.clone(), vec![PointState::Bloch([0.0, 0.0, 1.0])]).is_err());
        assert!(EnsembleState::uniform(g.clone(), PointState::Bloch([0.0, 0.0, 2.0])).is_err());
        let s = EnsembleState::uniform(g, PointState::Bloch([0.0, 0.0, 1.0])).unwrap();
        let t = TargetSpec::PerPoint(vec![PointState::Bloch([0.0, 0.0, 1.0])]);
        assert!(matches!(ensemble_distance(&s, &t), Err(Error::GridMismatch(_))));
        let wrong = TargetSpec::Constant(PointState::Spinor(Su2::IDENTITY));
        assert!(ensemble_distance(&s, &wrong).is_err());
    }
}
