//! Temperature softmax over score vectors and leave-one-out temperature fitting.

mod distribution;
mod loocv;
mod nelder_mead;

use thiserror::Error;

pub use distribution::{Distribution, SUM_TOLERANCE};
pub use loocv::{fit_alpha_loocv, loocv_objective, TemperatureFit};
pub use nelder_mead::{nelder_mead_minimize, Minimum, NelderMeadOptions, LOG_ALPHA_BOUND};

use crate::scorer::ScoreVector;

#[derive(Debug, Error)]
pub enum CalibrateError {
    #[error("invalid distribution: {0}")]
    Invalid(String),
    #[error("non-finite score {value} at index {index}")]
    NonFiniteScore { index: usize, value: f64 },
    #[error("alpha must be a nonnegative finite number, got {0}")]
    BadAlpha(f64),
    #[error("objective returned NaN at alpha = {alpha}")]
    ObjectiveNan { alpha: f64 },
    #[error("LOOCV undefined for stimulus `{stimulus}`: no other stimulus in pool `{pool}`")]
    LoocvUndefined { stimulus: String, pool: String },
    #[error("input mismatch: {0}")]
    Mismatch(String),
}

/// `exp(α·x_i − m) / Σ_j exp(α·x_j − m)` with `m = max_j α·x_j`.
pub fn softmax_values(logprobs: &[f64], alpha: f64) -> Result<Vec<f64>, CalibrateError> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(CalibrateError::BadAlpha(alpha));
    }
    if let Some((index, &value)) = logprobs.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(CalibrateError::NonFiniteScore { index, value });
    }
    let scaled: Vec<f64> = logprobs.iter().map(|x| alpha * x).collect();
    let m = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scaled.iter().map(|s| (s - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / z).collect())
}

pub fn softmax(scores: &ScoreVector, alpha: f64) -> Result<Distribution, CalibrateError> {
    if scores.thetas.len() != scores.logprobs.len() {
        return Err(CalibrateError::Mismatch(format!(
            "score vector `{}` has {} thetas and {} scores",
            scores.stimulus_id,
            scores.thetas.len(),
            scores.logprobs.len()
        )));
    }
    Distribution::new(scores.thetas.clone(), softmax_values(&scores.logprobs, alpha)?)
}
