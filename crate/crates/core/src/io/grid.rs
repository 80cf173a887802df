use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{json_error, line_of, to_json};
use crate::ensemble_sim::{linspace, DispersionGrid};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

/// `{"axes": {"omega": {...}, "epsilon": {...}, "theta"?: {...}, "J"?: {...}}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub axes: BTreeMap<String, AxisRange>,
}

pub fn grid_from_json(text: &str) -> Result<DispersionGrid> {
    let f: GridFile = serde_json::from_str(text).map_err(|e| json_error("grid file", e))?;
    let at = |key: &str, msg: String| Error::InvalidInput(format!("grid file: line {}: {msg}", line_of(text, key)));
    for required in ["omega", "epsilon"] {
        if !f.axes.contains_key(required) {
            return Err(at("axes", format!("missing axis '{required}'")));
        }
    }
    let mut axes = Vec::new();
    for (name, r) in &f.axes {
        if r.n == 0 {
            return Err(at(name, format!("axis '{name}' needs n ≥ 1")));
        }
        if !(r.min <= r.max) {
            return Err(at(name, format!("axis '{name}' has min > max")));
        }
        if r.n > 1 && r.min == r.max {
            return Err(at(name, format!("axis '{name}' repeats one value {} times", r.n)));
        }
        axes.push((name.clone(), linspace(r.min, r.max, r.n)));
    }
    DispersionGrid::new(axes).map_err(|e| at("axes", e.to_string()))
}

/// Ranges of an equally spaced grid; other grids are rejected.
pub fn grid_to_json(grid: &DispersionGrid) -> Result<String> {
    let mut axes = BTreeMap::new();
    for (name, v) in grid.axes() {
        let (min, max, n) = (v[0], v[v.len() - 1], v.len());
        if linspace(min, max, n) != *v {
            return Err(Error::InvalidInput(format!("axis '{name}' is not equally spaced")));
        }
        axes.insert(name.clone(), AxisRange { min, max, n });
    }
    to_json(&GridFile { axes })
}
