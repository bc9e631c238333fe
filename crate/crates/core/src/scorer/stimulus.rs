use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ScorerError;
use crate::assets::Experiment;

/// Which inequality the candidate programs use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    /// `(condition (> (strength 'jack) θ))`
    Exceeds,
    /// `(condition (< (strength 'jack) θ))`
    Below,
}

impl Form {
    pub fn operator(self) -> &'static str {
        match self {
            Form::Exceeds => ">",
            Form::Below => "<",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stimulus {
    pub id: String,
    pub sentence: String,
    pub form: Form,
    pub experiment: Experiment,
    /// Free-form tags: panel, league, abstraction level, mock target.
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl Stimulus {
    pub fn meta_str(&self, key: &str) -> Option<&str> {
        self.metadata.get(key).and_then(|v| v.as_str())
    }

    pub fn meta_f64(&self, key: &str) -> Option<f64> {
        self.metadata.get(key).and_then(|v| v.as_f64())
    }

    /// Mock-backend peak for this stimulus, if the manifest supplies one.
    pub fn mock_target(&self) -> Option<f64> {
        self.meta_f64("mock_target")
    }
}

/// Ordered threshold values, in strength units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ThetaGrid {
    values: Vec<f64>,
}

impl ThetaGrid {
    pub fn new(values: Vec<f64>) -> Result<Self, ScorerError> {
        if values.iter().any(|v| !v.is_finite() || !(0.0..=100.0).contains(v)) {
            return Err(ScorerError::Config("theta grid values must lie in [0, 100]".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ScorerError::Config("theta grid must be strictly increasing".into()));
        }
        Ok(ThetaGrid { values })
    }

    /// Evenly spaced grid `start, start + step, ..., end`.
    pub fn stepped(start: f64, end: f64, step: f64) -> Result<Self, ScorerError> {
        if !(step > 0.0) || end < start {
            return Err(ScorerError::Config("invalid grid range".into()));
        }
        let n = ((end - start) / step).round() as usize;
        Self::new((0..=n).map(|i| start + step * i as f64).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl Default for ThetaGrid {
    /// 0, 10, ..., 100.
    fn default() -> Self {
        ThetaGrid {
            values: (0..=10).map(|i| 10.0 * i as f64).collect(),
        }
    }
}

impl TryFrom<Vec<f64>> for ThetaGrid {
    type Error = ScorerError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        ThetaGrid::new(values)
    }
}

impl From<ThetaGrid> for Vec<f64> {
    fn from(g: ThetaGrid) -> Self {
        g.values
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateProgram {
    pub theta: f64,
    pub text: String,
}

/// Literal used for θ in program text; shortest round-tripping decimal (`0`, `40`, `12.5`).
pub fn theta_literal(theta: f64) -> String {
    format!("{theta}")
}

pub fn candidate_text(form: Form, theta: f64) -> String {
    format!("(condition ({} (strength 'jack) {}))", form.operator(), theta_literal(theta))
}

/// One candidate per grid value, in grid order.
pub fn build_candidates(stimulus: &Stimulus, grid: &ThetaGrid) -> Vec<CandidateProgram> {
    grid.values()
        .iter()
        .map(|&theta| CandidateProgram {
            theta,
            text: candidate_text(stimulus.form, theta),
        })
        .collect()
}
