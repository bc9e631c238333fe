//! One-level Rational Speech Acts listener over joint (strength, θ) uncertainty.
//!
//! L0 restricts the strength prior to the utterance's literal meaning at θ,
//! S1 soft-maximizes `ln L0 − cost`, and L1 inverts S1 against both priors.
//! Everything is a finite sum over grids.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibrate::{CalibrateError, Distribution};
use crate::scorer::{ScorerError, ThetaGrid};

#[derive(Debug, Error)]
pub enum RsaError {
    #[error("invalid RSA configuration: {0}")]
    Config(String),
    #[error("unknown utterance `{0}`")]
    UnknownUtterance(String),
    #[error("vacuous literal meaning: `{utterance}` has no prior mass at θ={theta}")]
    Vacuous { utterance: String, theta: f64 },
    #[error("no utterance is true of strength {strength} at θ={theta}")]
    Unspeakable { strength: f64, theta: f64 },
    #[error("pragmatic listener has no mass for `{0}`")]
    NoMass(String),
    #[error(transparent)]
    Distribution(#[from] CalibrateError),
}

/// Literal meaning of an utterance as a predicate on (strength, θ).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Meaning {
    /// strength > θ
    Above,
    /// strength < θ
    Below,
    Always,
}

impl Meaning {
    pub fn holds(self, strength: f64, theta: f64) -> bool {
        match self {
            Meaning::Above => strength > theta,
            Meaning::Below => strength < theta,
            Meaning::Always => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub label: String,
    pub meaning: Meaning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RsaConfig {
    pub strength_grid: Vec<f64>,
    pub theta_grid: ThetaGrid,
    /// Over `strength_grid`.
    pub strength_prior: Distribution,
    /// Over `theta_grid`.
    pub theta_prior: Distribution,
    pub utterances: Vec<Utterance>,
    /// Speaker optimality λ.
    pub rationality: f64,
    /// Missing utterances cost 0.
    pub costs: BTreeMap<String, f64>,
}

/// Weights `exp(−(s−μ)²/(2σ²))` on the grid, normalized.
pub fn discretized_normal(grid: &[f64], mean: f64, sd: f64) -> Result<Distribution, RsaError> {
    if !(sd > 0.0 && sd.is_finite() && mean.is_finite()) {
        return Err(RsaError::Config(format!("normal prior needs finite mean and positive sd, got ({mean}, {sd})")));
    }
    let w = grid.iter().map(|s| (-(s - mean).powi(2) / (2.0 * sd * sd)).exp()).collect();
    Ok(Distribution::from_weights(grid.to_vec(), w)?)
}

fn stepped(start: f64, end: f64, step: f64) -> Result<Vec<f64>, RsaError> {
    if !(step > 0.0) || end < start {
        return Err(RsaError::Config(format!("bad grid range {start}..{end} step {step}")));
    }
    let n = ((end - start) / step).round() as usize;
    Ok((0..=n).map(|i| start + step * i as f64).collect())
}

impl Default for RsaConfig {
    /// Strength 0..100 step 2 with a discretized N(50, 20) prior, θ 0..100 step 10 uniform,
    /// utterances `strong` (s > θ) and `null`, rationality 1, zero costs.
    fn default() -> Self {
        let strength_grid = stepped(0.0, 100.0, 2.0).expect("static grid");
        let theta_grid = ThetaGrid::default();
        RsaConfig {
            strength_prior: discretized_normal(&strength_grid, 50.0, 20.0).expect("static prior"),
            theta_prior: Distribution::uniform(theta_grid.values().to_vec()).expect("static prior"),
            strength_grid,
            theta_grid,
            utterances: vec![
                Utterance {
                    label: "strong".into(),
                    meaning: Meaning::Above,
                },
                Utterance {
                    label: "null".into(),
                    meaning: Meaning::Always,
                },
            ],
            rationality: 1.0,
            costs: BTreeMap::new(),
        }
    }
}

impl RsaConfig {
    pub fn validate(&self) -> Result<(), RsaError> {
        if self.strength_prior.thetas() != self.strength_grid.as_slice() {
            return Err(RsaError::Config("strength prior is not over the strength grid".into()));
        }
        if self.theta_prior.thetas() != self.theta_grid.values() {
            return Err(RsaError::Config("θ prior is not over the θ grid".into()));
        }
        if self.strength_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(RsaError::Config("strength grid must be strictly increasing".into()));
        }
        if !(self.rationality >= 0.0 && self.rationality.is_finite()) {
            return Err(RsaError::Config(format!("rationality must be nonnegative, got {}", self.rationality)));
        }
        if self.utterances.is_empty() {
            return Err(RsaError::Config("no utterances".into()));
        }
        for (i, u) in self.utterances.iter().enumerate() {
            if self.utterances[..i].iter().any(|v| v.label == u.label) {
                return Err(RsaError::Config(format!("duplicate utterance `{}`", u.label)));
            }
        }
        for (label, c) in &self.costs {
            if !self.utterances.iter().any(|u| &u.label == label) {
                return Err(RsaError::Config(format!("cost given for unknown utterance `{label}`")));
            }
            if !(*c >= 0.0 && c.is_finite()) {
                return Err(RsaError::Config(format!("cost of `{label}` must be nonnegative")));
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, RsaError> {
        let file: RsaConfigFile = toml::from_str(text).map_err(|e| RsaError::Config(e.to_string()))?;
        file.into_config()
    }

    pub fn from_file(path: &Path) -> Result<Self, RsaError> {
        let text = std::fs::read_to_string(path).map_err(|e| RsaError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    fn utterance(&self, label: &str) -> Result<&Utterance, RsaError> {
        self.utterances
            .iter()
            .find(|u| u.label == label)
            .ok_or_else(|| RsaError::UnknownUtterance(label.into()))
    }

    fn cost(&self, label: &str) -> f64 {
        self.costs.get(label).copied().unwrap_or(0.0)
    }

    /// Prior mass of strengths satisfying `meaning` at θ.
    fn literal_mass(&self, meaning: Meaning, theta: f64) -> f64 {
        self.strength_grid
            .iter()
            .zip(self.strength_prior.probs())
            .filter(|(s, _)| meaning.holds(**s, theta))
            .map(|(_, p)| p)
            .sum()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum GridSpec {
    Values { values: Vec<f64> },
    Range { start: f64, end: f64, step: f64 },
}

impl GridSpec {
    fn values(self) -> Result<Vec<f64>, RsaError> {
        match self {
            GridSpec::Values { values } => Ok(values),
            GridSpec::Range { start, end, step } => stepped(start, end, step),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum PriorSpec {
    Normal { mean: f64, sd: f64 },
    Uniform,
    Point { at: f64 },
    Explicit { probs: Vec<f64> },
}

impl PriorSpec {
    fn build(self, grid: &[f64]) -> Result<Distribution, RsaError> {
        match self {
            PriorSpec::Normal { mean, sd } => discretized_normal(grid, mean, sd),
            PriorSpec::Uniform => Ok(Distribution::uniform(grid.to_vec())?),
            PriorSpec::Point { at } => {
                let i = grid
                    .iter()
                    .position(|g| *g == at)
                    .ok_or_else(|| RsaError::Config(format!("point prior at {at} is not on the grid")))?;
                Ok(Distribution::point_mass(grid.to_vec(), i)?)
            }
            PriorSpec::Explicit { probs } => Ok(Distribution::new(grid.to_vec(), probs)?),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
struct AxisSpec {
    #[serde(flatten)]
    grid: Option<GridSpec>,
    prior: Option<PriorSpec>,
}

#[derive(Debug, Clone, Deserialize)]
struct UtteranceSpec {
    label: String,
    meaning: Meaning,
    #[serde(default)]
    cost: f64,
}

/// TOML form of [`RsaConfig`]; every section is optional and falls back to the defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RsaConfigFile {
    rationality: Option<f64>,
    strength: Option<AxisSpec>,
    theta: Option<AxisSpec>,
    utterances: Option<Vec<UtteranceSpec>>,
}

impl RsaConfigFile {
    fn into_config(self) -> Result<RsaConfig, RsaError> {
        let mut cfg = RsaConfig::default();
        if let Some(r) = self.rationality {
            cfg.rationality = r;
        }
        if let Some(axis) = self.strength {
            if let Some(g) = axis.grid {
                cfg.strength_grid = g.values()?;
            }
            let prior = axis.prior.unwrap_or(PriorSpec::Normal { mean: 50.0, sd: 20.0 });
            cfg.strength_prior = prior.build(&cfg.strength_grid)?;
        }
        if let Some(axis) = self.theta {
            if let Some(g) = axis.grid {
                cfg.theta_grid = ThetaGrid::new(g.values()?).map_err(|e: ScorerError| RsaError::Config(e.to_string()))?;
            }
            cfg.theta_prior = axis.prior.unwrap_or(PriorSpec::Uniform).build(cfg.theta_grid.values())?;
        }
        if let Some(utts) = self.utterances {
            cfg.costs = utts
                .iter()
                .filter(|u| u.cost != 0.0)
                .map(|u| (u.label.clone(), u.cost))
                .collect();
            cfg.utterances = utts
                .into_iter()
                .map(|u| Utterance {
                    label: u.label,
                    meaning: u.meaning,
                })
                .collect();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Strength prior restricted to the utterance's meaning at θ, renormalized.
pub fn literal_listener(utterance: &str, theta: f64, config: &RsaConfig) -> Result<Distribution, RsaError> {
    let u = config.utterance(utterance)?;
    let weights: Vec<f64> = config
        .strength_grid
        .iter()
        .zip(config.strength_prior.probs())
        .map(|(s, p)| if u.meaning.holds(*s, theta) { *p } else { 0.0 })
        .collect();
    if !(weights.iter().sum::<f64>() > 0.0) {
        return Err(RsaError::Vacuous {
            utterance: utterance.into(),
            theta,
        });
    }
    Ok(Distribution::from_weights(config.strength_grid.clone(), weights)?)
}

/// Speaker probabilities, in the order of `config.utterances`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtteranceDistribution {
    pub labels: Vec<String>,
    pub probs: Vec<f64>,
}

impl UtteranceDistribution {
    pub fn prob(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.probs[i])
    }
}

/// Speaker weights from precomputed literal masses `masses[u]` at θ.
///
/// With λ = 0 every utterance gets utility 0, false ones included (0·(−∞) taken as 0).
fn speaker_probs(
    config: &RsaConfig,
    strength_prior: f64,
    strength: f64,
    theta: f64,
    masses: &[f64],
) -> Option<Vec<f64>> {
    let lambda = config.rationality;
    let utilities: Vec<f64> = config
        .utterances
        .iter()
        .zip(masses)
        .map(|(u, &mass)| {
            if lambda == 0.0 {
                return 0.0;
            }
            if !u.meaning.holds(strength, theta) || mass <= 0.0 || strength_prior <= 0.0 {
                return f64::NEG_INFINITY;
            }
            lambda * ((strength_prior / mass).ln() - config.cost(&u.label))
        })
        .collect();
    let m = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return None;
    }
    let w: Vec<f64> = utilities.iter().map(|x| (x - m).exp()).collect();
    let z: f64 = w.iter().sum();
    Some(w.into_iter().map(|x| x / z).collect())
}

/// `S1(u | s, θ) ∝ exp(λ·(ln L0(s | u, θ) − cost(u)))`.
pub fn speaker(strength: f64, theta: f64, config: &RsaConfig) -> Result<UtteranceDistribution, RsaError> {
    config.validate()?;
    let i = config
        .strength_grid
        .iter()
        .position(|s| *s == strength)
        .ok_or_else(|| RsaError::Config(format!("strength {strength} is not on the strength grid")))?;
    let masses: Vec<f64> = config.utterances.iter().map(|u| config.literal_mass(u.meaning, theta)).collect();
    let probs = speaker_probs(config, config.strength_prior.probs()[i], strength, theta, &masses)
        .ok_or(RsaError::Unspeakable { strength, theta })?;
    Ok(UtteranceDistribution {
        labels: config.utterances.iter().map(|u| u.label.clone()).collect(),
        probs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PragmaticListener {
    pub utterance: String,
    pub strengths: Vec<f64>,
    pub thetas: Vec<f64>,
    /// Row-major `joint[s * thetas.len() + t]`.
    pub joint: Vec<f64>,
    pub theta_marginal: Distribution,
    pub strength_marginal: Distribution,
}

impl PragmaticListener {
    pub fn joint_at(&self, s: usize, t: usize) -> f64 {
        self.joint[s * self.thetas.len() + t]
    }
}

/// `L1(s, θ | u) ∝ P(s)·P(θ)·S1(u | s, θ)` with both marginals.
pub fn pragmatic_listener(utterance: &str, config: &RsaConfig) -> Result<PragmaticListener, RsaError> {
    config.validate()?;
    let ui = config
        .utterances
        .iter()
        .position(|u| u.label == utterance)
        .ok_or_else(|| RsaError::UnknownUtterance(utterance.into()))?;
    let thetas = config.theta_grid.values();
    let (ns, nt) = (config.strength_grid.len(), thetas.len());
    let mut joint = vec![0.0; ns * nt];
    for (t, &theta) in thetas.iter().enumerate() {
        let pt = config.theta_prior.probs()[t];
        if pt == 0.0 {
            continue;
        }
        let masses: Vec<f64> = config.utterances.iter().map(|u| config.literal_mass(u.meaning, theta)).collect();
        for (s, &strength) in config.strength_grid.iter().enumerate() {
            let ps = config.strength_prior.probs()[s];
            if ps == 0.0 {
                continue;
            }
            if let Some(sp) = speaker_probs(config, ps, strength, theta, &masses) {
                joint[s * nt + t] = ps * pt * sp[ui];
            }
        }
    }
    let total: f64 = joint.iter().sum();
    if !(total > 0.0) {
        return Err(RsaError::NoMass(utterance.into()));
    }
    joint.iter_mut().for_each(|x| *x /= total);
    let theta_w = (0..nt).map(|t| (0..ns).map(|s| joint[s * nt + t]).sum()).collect();
    let strength_w = (0..ns).map(|s| joint[s * nt..(s + 1) * nt].iter().sum()).collect();
    Ok(PragmaticListener {
        utterance: utterance.into(),
        strengths: config.strength_grid.clone(),
        thetas: thetas.to_vec(),
        joint,
        theta_marginal: Distribution::from_weights(thetas.to_vec(), theta_w)?,
        strength_marginal: Distribution::from_weights(config.strength_grid.clone(), strength_w)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_prior_config() -> RsaConfig {
        let grid: Vec<f64> = (0..=100).map(f64::from).collect();
        RsaConfig {
            strength_prior: Distribution::uniform(grid.clone()).unwrap(),
            strength_grid: grid,
            ..RsaConfig::default()
        }
    }

    #[test]
    fn defaults_are_normalized() {
        let c = RsaConfig::default();
        c.validate().unwrap();
        assert_eq!(c.strength_grid.len(), 51);
        assert!((c.strength_prior.mean() - 50.0).abs() < 1e-9);
    }

    #[test]
    fn null_is_the_prior() {
        let c = RsaConfig::default();
        let l0 = literal_listener("null", 30.0, &c).unwrap();
        for (a, b) in l0.probs().iter().zip(c.strength_prior.probs()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn strong_restricts_uniform() {
        let c = uniform_prior_config();
        let l0 = literal_listener("strong", 50.0, &c).unwrap();
        for (s, p) in l0.thetas().iter().zip(l0.probs()) {
            let expected = if *s > 50.0 { 1.0 / 50.0 } else { 0.0 };
            assert!((p - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn vacuous_and_unknown() {
        let c = RsaConfig::default();
        assert!(matches!(literal_listener("strong", 100.0, &c), Err(RsaError::Vacuous { .. })));
        assert!(matches!(literal_listener("weak", 10.0, &c), Err(RsaError::UnknownUtterance(_))));
    }

    #[test]
    fn speaker_below_threshold_says_null() {
        let s = speaker(20.0, 50.0, &RsaConfig::default()).unwrap();
        assert_eq!(s.prob("null"), Some(1.0));
        assert_eq!(s.prob("strong"), Some(0.0));
    }

    #[test]
    fn speaker_hand_enumeration() {
        // s = 90, θ = 50: L0(s|strong) = P(s)/Z, L0(s|null) = P(s), so P(strong) = (1/Z)/(1/Z + 1) = 1/(1+Z)
        let c = RsaConfig::default();
        let z: f64 = c
            .strength_grid
            .iter()
            .zip(c.strength_prior.probs())
            .filter(|(s, _)| **s > 50.0)
            .map(|(_, p)| p)
            .sum();
        let s = speaker(90.0, 50.0, &c).unwrap();
        assert!((s.prob("strong").unwrap() - 1.0 / (1.0 + z)).abs() < 1e-14);
    }

    #[test]
    fn zero_rationality_speaker_is_uniform() {
        let c = RsaConfig {
            rationality: 0.0,
            ..RsaConfig::default()
        };
        let s = speaker(90.0, 50.0, &c).unwrap();
        assert_eq!(s.probs, vec![0.5, 0.5]);
    }

    #[test]
    fn nothing_true_is_an_error() {
        let c = RsaConfig {
            utterances: vec![Utterance {
                label: "strong".into(),
                meaning: Meaning::Above,
            }],
            ..RsaConfig::default()
        };
        assert!(matches!(speaker(10.0, 50.0, &c), Err(RsaError::Unspeakable { .. })));
    }

    #[test]
    fn toml_round() {
        let c = RsaConfig::from_toml_str(
            r#"
            rationality = 3.0
            [strength]
            start = 0
            end = 100
            step = 1
            prior = { kind = "normal", mean = 50.0, sd = 20.0 }
            [theta]
            prior = { kind = "point", at = 60.0 }
            [[utterances]]
            label = "strong"
            meaning = "above"
            cost = 1.0
            [[utterances]]
            label = "null"
            meaning = "always"
            "#,
        )
        .unwrap();
        assert_eq!(c.strength_grid.len(), 101);
        assert_eq!(c.theta_prior.mode(), 60.0);
        assert_eq!(c.costs["strong"], 1.0);
        assert!(RsaConfig::from_toml_str("rationality = -1.0").is_err());
        assert!(RsaConfig::from_toml_str("bogus = 1").is_err());
        assert_eq!(RsaConfig::from_toml_str("").unwrap(), RsaConfig::default());
    }
}
