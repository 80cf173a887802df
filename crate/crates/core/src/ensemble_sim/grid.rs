use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Axis names in canonical order.
pub const AXES: [&str; 4] = ["omega", "epsilon", "theta", "J"];

/// Points per axis used when a caller does not choose.
pub const DEFAULT_POINTS: usize = 64;

/// Parameter values of one ensemble member. Absent axes take the nominal
/// values `ω = 0`, `ε = 1`, `θ = 0`, `J = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub omega: f64,
    pub epsilon: f64,
    pub theta: f64,
    #[serde(rename = "J")]
    pub j: f64,
}

impl Default for GridPoint {
    fn default() -> Self {
        Self {
            omega: 0.0,
            epsilon: 1.0,
            theta: 0.0,
            j: 0.0,
        }
    }
}

impl GridPoint {
    pub fn get(&self, axis: &str) -> Option<f64> {
        match axis {
            "omega" => Some(self.omega),
            "epsilon" => Some(self.epsilon),
            "theta" => Some(self.theta),
            "J" => Some(self.j),
            _ => None,
        }
    }

    fn set(&mut self, axis: &str, v: f64) {
        match axis {
            "omega" => self.omega = v,
            "epsilon" => self.epsilon = v,
            "theta" => self.theta = v,
            _ => self.j = v,
        }
    }
}

/// Cartesian product of named parameter axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionGrid {
    axes: Vec<(String, Vec<f64>)>,
}

/// `n` equally spaced values from `lo` to `hi` inclusive; the endpoints are
/// exact.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

impl DispersionGrid {
    /// Axes may be given in any order; they are stored in canonical order.
    pub fn new(axes: Vec<(String, Vec<f64>)>) -> Result<Self> {
        if axes.is_empty() {
            return invalid("grid needs at least one axis");
        }
        let mut sorted = Vec::with_capacity(axes.len());
        for name in AXES {
            let mut found = axes.iter().filter(|(n, _)| n == name);
            if let Some((_, values)) = found.next() {
                if found.next().is_some() {
                    return invalid(format!("axis '{name}' given twice"));
                }
                if values.is_empty() {
                    return invalid(format!("axis '{name}' is empty"));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return invalid(format!("axis '{name}' has non-finite values"));
                }
                if values.windows(2).any(|w| w[1] <= w[0]) {
                    return invalid(format!("axis '{name}' is not strictly increasing"));
                }
                sorted.push((name.to_string(), values.clone()));
            }
        }
        if let Some((n, _)) = axes.iter().find(|(n, _)| !AXES.contains(&n.as_str())) {
            return invalid(format!("unknown axis '{n}'"));
        }
        Ok(Self { axes: sorted })
    }

    pub fn axis(name: &str, values: Vec<f64>) -> Result<Self> {
        Self::new(vec![(name.to_string(), values)])
    }

    /// `ω ∈ [−b, b]` and `ε ∈ [1−δ, 1+δ]`, with a single point for a zero half-width.
    pub fn omega_epsilon(b: f64, nw: usize, delta: f64, ne: usize) -> Result<Self> {
        let span = |c: f64, h: f64, n: usize| if h == 0.0 { vec![c] } else { linspace(c - h, c + h, n) };
        Self::new(vec![
            ("omega".into(), span(0.0, b, nw)),
            ("epsilon".into(), span(1.0, delta, ne)),
        ])
    }

    /// Single nominal point.
    pub fn nominal() -> Self {
        Self {
            axes: vec![("omega".into(), vec![0.0])],
        }
    }

    pub fn axes(&self) -> &[(String, Vec<f64>)] {
        &self.axes
    }

    pub fn values(&self, name: &str) -> Option<&[f64]> {
        self.axes
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn has_axis(&self, name: &str) -> bool {
        self.values(name).is_some()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|(_, v)| v.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All points, first axis varying slowest.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = vec![GridPoint::default()];
        for (name, values) in &self.axes {
            out = out
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |&v| {
                        let mut q = p;
                        q.set(name, v);
                        q
                    })
                })
                .collect();
        }
        out
    }
}
