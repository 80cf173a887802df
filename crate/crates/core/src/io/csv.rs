use std::path::Path;

use super::{fmt_num, write_atomic};
use crate::ensemble_sim::{DispersionGrid, EnsembleState, FidelityMap, GridPoint, PointState};
use crate::error::{invalid, Error, Result};

/// `omega` and `epsilon` always lead; `theta` and `J` follow when the grid
/// has them.
fn axis_columns(grid: &DispersionGrid) -> Vec<&'static str> {
    let mut cols = vec!["omega", "epsilon"];
    cols.extend(["theta", "J"].into_iter().filter(|a| grid.has_axis(a)));
    cols
}

fn row_prefix(cols: &[&str], p: &GridPoint) -> String {
    cols.iter()
        .map(|c| fmt_num(p.get(c).expect("known axis")))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn fidelity_csv(map: &FidelityMap) -> String {
    let cols = axis_columns(&map.grid);
    let mut out = format!("{},fidelity\n", cols.join(","));
    for (p, f) in map.grid.points().iter().zip(&map.values) {
        out += &format!("{},{}\n", row_prefix(&cols, p), fmt_num(*f));
    }
    out
}

pub fn emit_fidelity_csv(map: &FidelityMap, path: &Path) -> Result<()> {
    write_atomic(path, &fidelity_csv(map))
}

/// Inverse of [`fidelity_csv`]: rebuilds the grid from the distinct values
/// in each axis column and checks the rows enumerate it in order.
pub fn parse_fidelity_csv(text: &str) -> Result<FidelityMap> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::InvalidInput("fidelity map: line 1: empty file".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 2 || cols[cols.len() - 1] != "fidelity" {
        return invalid("fidelity map: line 1: header must end with 'fidelity'");
    }
    let naxes = cols.len() - 1;
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let vals = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidInput(format!("fidelity map: line {}: {e}", i + 1)))?;
        if vals.len() != cols.len() {
            return invalid(format!("fidelity map: line {}: expected {} fields, got {}", i + 1, cols.len(), vals.len()));
        }
        rows.push(vals);
    }
    let axes: Vec<(String, Vec<f64>)> = (0..naxes)
        .map(|k| {
            let mut v: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            (cols[k].to_string(), v)
        })
        .collect();
    let grid = DispersionGrid::new(axes).map_err(|e| Error::InvalidInput(format!("fidelity map: {e}")))?;
    let points = grid.points();
    if points.len() != rows.len() {
        return invalid(format!("fidelity map: {} rows do not fill a {}-point grid", rows.len(), points.len()));
    }
    for (k, (p, r)) in points.iter().zip(&rows).enumerate() {
        if (0..naxes).any(|a| p.get(cols[a]) != Some(r[a])) {
            return invalid(format!("fidelity map: line {}: row out of grid order", k + 2));
        }
    }
    FidelityMap::new(grid, rows.iter().map(|r| r[naxes]).collect())
}

/// Final states as CSV: `x,y,z` for Bloch vectors, the Cayley–Klein pair
/// for spinors.
pub fn state_csv(state: &EnsembleState) -> Result<String> {
    let cols = axis_columns(state.grid());
    let fields = match state.states().first() {
        Some(PointState::Bloch(_)) => "x,y,z",
        Some(PointState::Spinor(_)) => "alpha_re,alpha_im,beta_re,beta_im",
        _ => return invalid("only Bloch and spinor states have a CSV form"),
    };
    let mut out = format!("{},{fields}\n", cols.join(","));
    for (p, s) in state.grid().points().iter().zip(state.states()) {
        let vals: Vec<f64> = match s {
            PointState::Bloch(m) => m.to_vec(),
            PointState::Spinor(u) => vec![u.alpha.re, u.alpha.im, u.beta.re, u.beta.im],
            PointState::Unitary(_) => return invalid("mixed state kinds"),
        };
        let vals: Vec<String> = vals.into_iter().map(fmt_num).collect();
        out += &format!("{},{}\n", row_prefix(&cols, p), vals.join(","));
    }
    Ok(out)
}
