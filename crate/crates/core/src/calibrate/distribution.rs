use serde::{Deserialize, Serialize};

use super::CalibrateError;

/// Allowed deviation of a probability vector's sum from 1.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Probability vector over an ordered θ grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution")]
pub struct Distribution {
    thetas: Vec<f64>,
    probs: Vec<f64>,
}

#[derive(Deserialize)]
struct RawDistribution {
    thetas: Vec<f64>,
    probs: Vec<f64>,
}

impl TryFrom<RawDistribution> for Distribution {
    type Error = CalibrateError;

    fn try_from(raw: RawDistribution) -> Result<Self, Self::Error> {
        Distribution::new(raw.thetas, raw.probs)
    }
}

impl Distribution {
    pub fn new(thetas: Vec<f64>, probs: Vec<f64>) -> Result<Self, CalibrateError> {
        if thetas.len() != probs.len() {
            return Err(CalibrateError::Invalid(format!(
                "{} thetas but {} probabilities",
                thetas.len(),
                probs.len()
            )));
        }
        if thetas.is_empty() {
            return Err(CalibrateError::Invalid("empty distribution".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(CalibrateError::Invalid(format!("probability {p} is not a nonnegative number")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(CalibrateError::Invalid(format!("probabilities sum to {total}")));
        }
        Ok(Distribution { thetas, probs })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(thetas: Vec<f64>, weights: Vec<f64>) -> Result<Self, CalibrateError> {
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(CalibrateError::Invalid(format!("weight {w} is not a nonnegative number")));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(CalibrateError::Invalid("weights have no mass".into()));
        }
        Self::new(thetas, weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(thetas: Vec<f64>) -> Result<Self, CalibrateError> {
        let n = thetas.len();
        Self::new(thetas, vec![1.0 / n as f64; n])
    }

    pub fn point_mass(thetas: Vec<f64>, at: usize) -> Result<Self, CalibrateError> {
        let mut probs = vec![0.0; thetas.len()];
        *probs
            .get_mut(at)
            .ok_or_else(|| CalibrateError::Invalid(format!("index {at} outside grid")))? = 1.0;
        Self::new(thetas, probs)
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Index of the largest probability; first one on ties.
    pub fn mode_index(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    pub fn mode(&self) -> f64 {
        self.thetas[self.mode_index()]
    }

    pub fn mean(&self) -> f64 {
        self.thetas.iter().zip(&self.probs).map(|(t, p)| t * p).sum()
    }

    pub fn same_grid(&self, other: &Distribution) -> bool {
        self.thetas == other.thetas
    }

    /// Probabilities reordered by `order`: new bin `i` takes old bin `order[i]`. Thetas stay put.
    pub fn relabeled(&self, order: &[usize]) -> Distribution {
        assert_eq!(order.len(), self.len(), "relabeling must cover the grid");
        Distribution {
            thetas: self.thetas.clone(),
            probs: order.iter().map(|&j| self.probs[j]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(Distribution::new(vec![0.0, 1.0], vec![0.5, 0.5]).is_ok());
        assert!(Distribution::new(vec![0.0, 1.0], vec![0.5, 0.6]).is_err());
        assert!(Distribution::new(vec![0.0], vec![0.5, 0.5]).is_err());
        assert!(Distribution::new(vec![0.0, 1.0], vec![1.5, -0.5]).is_err());
        assert!(Distribution::new(vec![], vec![]).is_err());
        assert!(Distribution::from_weights(vec![0.0, 1.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn weights_and_mode() {
        let d = Distribution::from_weights(vec![0.0, 10.0, 20.0], vec![1.0, 3.0, 3.0]).unwrap();
        assert_eq!(d.mode(), 10.0);
        assert!((d.probs()[1] - 3.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn serde_checks_sum() {
        let ok: Result<Distribution, _> = serde_json::from_str(r#"{"thetas":[0,1],"probs":[0.25,0.75]}"#);
        assert!(ok.is_ok());
        let bad: Result<Distribution, _> = serde_json::from_str(r#"{"thetas":[0,1],"probs":[0.25,0.25]}"#);
        assert!(bad.is_err());
    }
}
