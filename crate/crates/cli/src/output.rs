use std::path::{Path, PathBuf};

use ensctl_core::ensemble_sim::{ControlSequence, DispersionGrid, FidelityMap};
use ensctl_core::io;
use ensctl_core::{Error, Result};
use serde::Serialize;

use crate::args::DesignOutputs;

fn with_file(path: &Path, e: Error) -> Error {
    match e {
        Error::InvalidInput(msg) => Error::InvalidInput(format!("{}: {msg}", path.display())),
        other => other,
    }
}

pub fn read_pulse(path: &Path) -> Result<ControlSequence> {
    io::pulse_from_json(&io::read_text(path)?).map_err(|e| with_file(path, e))
}

pub fn read_grid(path: &Path) -> Result<DispersionGrid> {
    io::grid_from_json(&io::read_text(path)?).map_err(|e| with_file(path, e))
}

/// Print `report` as JSON and also write it to `out` when given.
pub fn report<T: Serialize>(report: &T, out: Option<&Path>) -> Result<()> {
    let text = io::to_json(report)?;
    if let Some(p) = out {
        io::write_atomic(p, &text)?;
    }
    print!("{text}");
    Ok(())
}

pub fn bloch(v: &[f64], what: &str) -> Result<[f64; 3]> {
    match v {
        [x, y, z] => {
            let n = (x * x + y * y + z * z).sqrt();
            if (n - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!("{what} must be a unit vector, has norm {n}")));
            }
            Ok([*x, *y, *z])
        }
        _ => Err(Error::InvalidInput(format!("{what} needs three components, got {}", v.len()))),
    }
}

/// Common header of every diagnostics file.
#[derive(Serialize)]
pub struct DiagnosticsFile<'a, T: Serialize> {
    pub command: &'a str,
    pub artifact: String,
    pub fidelity_map: String,
    pub map_min_fidelity: f64,
    pub map_mean_fidelity: f64,
    #[serde(flatten)]
    pub details: T,
}

pub struct Resolved {
    pub out: PathBuf,
    pub diagnostics: PathBuf,
    pub map: PathBuf,
}

impl DesignOutputs {
    pub fn resolve(&self) -> Resolved {
        Resolved {
            out: self.out.clone(),
            diagnostics: self.diagnostics.clone().unwrap_or_else(|| self.out.with_extension("diagnostics.json")),
            map: self.map.clone().unwrap_or_else(|| self.out.with_extension("fidelity.csv")),
        }
    }
}

impl Resolved {
    /// Write the artifact text, the verification map and the diagnostics.
    pub fn write<T: Serialize>(&self, command: &str, artifact: &str, map: &FidelityMap, details: T) -> Result<()> {
        let diag = DiagnosticsFile {
            command,
            artifact: self.out.display().to_string(),
            fidelity_map: self.map.display().to_string(),
            map_min_fidelity: map.min(),
            map_mean_fidelity: map.mean(),
            details,
        };
        io::write_atomic(&self.out, artifact)?;
        io::emit_fidelity_csv(map, &self.map)?;
        let text = io::to_json(&diag)?;
        io::write_atomic(&self.diagnostics, &text)?;
        print!("{text}");
        Ok(())
    }
}
