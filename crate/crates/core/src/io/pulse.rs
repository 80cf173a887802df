use serde::{Deserialize, Serialize};

use super::{json_error, line_of, to_json};
use crate::ensemble_sim::{ControlSequence, StepShape};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const AMPLITUDE_UNIT: &str = "rad_per_s";

/// On-disk pulse: `samples` are `[u, v]` pairs in rad/s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseFile {
    pub schema_version: Option<u32>,
    pub dt: f64,
    pub amplitude_unit: String,
    pub samples: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_max: Option<f64>,
    #[serde(default)]
    pub step_shape: StepShape,
}

impl From<&ControlSequence> for PulseFile {
    fn from(p: &ControlSequence) -> Self {
        Self {
            schema_version: Some(SCHEMA_VERSION),
            dt: p.dt(),
            amplitude_unit: AMPLITUDE_UNIT.to_string(),
            samples: p.samples().iter().map(|&(u, v)| [u, v]).collect(),
            a_max: p.a_max(),
            step_shape: p.shape(),
        }
    }
}

pub fn pulse_to_json(p: &ControlSequence) -> Result<String> {
    to_json(&PulseFile::from(p))
}

pub fn pulse_from_json(text: &str) -> Result<ControlSequence> {
    let f: PulseFile = serde_json::from_str(text).map_err(|e| json_error("pulse file", e))?;
    let at = |key: &str, msg: String| Error::InvalidInput(format!("pulse file: line {}: {msg}", line_of(text, key)));
    match f.schema_version {
        None => return Err(Error::InvalidInput("pulse file: line 1: missing schema_version".into())),
        Some(SCHEMA_VERSION) => {}
        Some(v) => return Err(at("schema_version", format!("unsupported schema_version {v}"))),
    }
    if f.amplitude_unit != AMPLITUDE_UNIT {
        return Err(at(
            "amplitude_unit",
            format!("amplitude_unit must be \"{AMPLITUDE_UNIT}\", got \"{}\"", f.amplitude_unit),
        ));
    }
    if f.samples.is_empty() {
        return Err(at("samples", "samples are empty".into()));
    }
    let samples = f.samples.iter().map(|s| (s[0], s[1])).collect();
    ControlSequence::new(f.dt, samples, f.a_max)
        .map(|p| p.with_shape(f.step_shape))
        .map_err(|e| at("dt", e.to_string()))
}
