//! Empirical distributions, Jensen-Shannon distance, permutation tests and BH-FDR.

mod fdr;
mod permutation;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fdr::fdr_bh;
pub use permutation::{
    exact_permutation_p, permutation_test, PValueEstimator, PermutationMode, PermutationOptions, PermutationOutcome,
    TIE_TOLERANCE,
};

use crate::calibrate::Distribution;
use crate::scorer::ThetaGrid;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("no responses for stimulus `{0}`")]
    Empty(String),
    #[error("invalid responses: {0}")]
    InvalidResponses(String),
    #[error("θ grids differ")]
    GridMismatch,
    #[error("KL divergence undefined: P has mass {p} at θ={theta} where Q has none")]
    UnsupportedMass { theta: f64, p: f64 },
    #[error("p-value {0} outside [0, 1]")]
    PValueRange(f64),
    #[error("permutation count must be at least 1")]
    NoIterations,
    #[error("exact enumeration supports at most {max} bins, got {got}")]
    TooManyBins { max: usize, got: usize },
    #[error(transparent)]
    Distribution(#[from] crate::calibrate::CalibrateError),
}

/// Slider estimates for one stimulus, in strength units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanResponses {
    pub stimulus_id: String,
    pub estimates: Vec<f64>,
    pub participant_ids: Vec<String>,
}

impl HumanResponses {
    pub fn new(
        stimulus_id: impl Into<String>,
        estimates: Vec<f64>,
        participant_ids: Vec<String>,
    ) -> Result<Self, StatsError> {
        let r = HumanResponses {
            stimulus_id: stimulus_id.into(),
            estimates,
            participant_ids,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), StatsError> {
        if self.estimates.len() != self.participant_ids.len() {
            return Err(StatsError::InvalidResponses(format!(
                "{} estimates but {} participant ids",
                self.estimates.len(),
                self.participant_ids.len()
            )));
        }
        if let Some(e) = self.estimates.iter().find(|e| !(0.0..=100.0).contains(*e)) {
            return Err(StatsError::InvalidResponses(format!("estimate {e} outside [0, 100]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub stimulus_id: String,
    pub jsd: f64,
    pub p_raw: f64,
    pub p_fdr: f64,
    pub significant: bool,
    pub n_permutations: usize,
    pub seed: u64,
}

/// Index of the grid value nearest to `x`; halfway points go to the larger value.
pub fn nearest_bin(grid: &[f64], x: f64) -> usize {
    let mut best = 0;
    for (i, g) in grid.iter().enumerate() {
        if (x - g).abs() <= (x - grid[best]).abs() {
            best = i;
        }
    }
    best
}

/// Normalized counts of estimates per nearest grid value.
pub fn empirical_distribution(responses: &HumanResponses, grid: &ThetaGrid) -> Result<Distribution, StatsError> {
    responses.validate()?;
    if responses.estimates.is_empty() {
        return Err(StatsError::Empty(responses.stimulus_id.clone()));
    }
    if grid.is_empty() {
        return Err(StatsError::GridMismatch);
    }
    let mut counts = vec![0.0; grid.len()];
    for &e in &responses.estimates {
        counts[nearest_bin(grid.values(), e)] += 1.0;
    }
    Ok(Distribution::from_weights(grid.values().to_vec(), counts)?)
}

/// `Σ P_i ln(P_i / Q_i)` in nats, with `0·ln(0/q) = 0`.
pub fn kl_divergence(p: &Distribution, q: &Distribution) -> Result<f64, StatsError> {
    if !p.same_grid(q) {
        return Err(StatsError::GridMismatch);
    }
    let mut total = 0.0;
    for ((&pi, &qi), &theta) in p.probs().iter().zip(q.probs()).zip(p.thetas()) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(StatsError::UnsupportedMass { theta, p: pi });
            }
            total += pi * (pi / qi).ln();
        }
    }
    Ok(total)
}

pub fn jensen_shannon_distance(p: &Distribution, q: &Distribution) -> Result<f64, StatsError> {
    if !p.same_grid(q) {
        return Err(StatsError::GridMismatch);
    }
    Ok(jsd_slices(p.probs(), q.probs()))
}

/// Jensen-Shannon distance of two equal-length probability vectors, natural log.
pub fn jsd_slices(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    let mut total = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        let m = 0.5 * (pi + qi);
        let term = |x: f64| if x > 0.0 { x * (x / m).ln() } else { 0.0 };
        // one addition per bin keeps the result exactly symmetric in (p, q)
        total += term(pi) + term(qi);
    }
    (0.5 * total).max(0.0).sqrt()
}
