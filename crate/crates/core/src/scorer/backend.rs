use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::http::HttpBackend;
use super::ScorerError;

/// Everything a backend may need to score one candidate continuation.
#[derive(Debug, Clone, Copy)]
pub struct ScoreRequest<'a> {
    pub stimulus_id: &'a str,
    pub theta: f64,
    pub prompt: &'a str,
    pub prompt_hash: &'a str,
    pub continuation: &'a str,
    /// Target hint from stimulus metadata; only the mock backend reads it.
    pub target_hint: Option<f64>,
}

/// Source of continuation log-probabilities (nats).
pub trait ScoringBackend: Send + Sync {
    fn id(&self) -> String;

    /// True when scores are genuine log-probabilities and must be `<= 0`.
    fn is_probabilistic(&self) -> bool;

    /// Sum of token log-probabilities of `continuation` given `prompt`, unnormalized by length.
    fn score(&self, request: &ScoreRequest<'_>) -> Result<f64, ScorerError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    HttpCompletions,
    Mock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 4,
            base_backoff_ms: 250,
        }
    }
}

/// Gaussian-bump scorer: `-(θ - target)² / (2·width²) + noise·u`, `u ∈ [-1, 1]`
/// hashed from `(seed, stimulus id, θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockParams {
    /// Per-stimulus targets; stimuli not listed fall back to their `mock_target` metadata.
    #[serde(default)]
    pub targets: BTreeMap<String, f64>,
    pub width: f64,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for MockParams {
    fn default() -> Self {
        MockParams {
            targets: BTreeMap::new(),
            width: 15.0,
            noise: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub model_name: String,
    /// Name of the environment variable holding the bearer token. The token itself is never stored.
    #[serde(default)]
    pub auth_env: Option<String>,
    #[serde(default = "default_inflight")]
    pub max_inflight: usize,
    #[serde(default)]
    pub retry: RetryPolicy,
    #[serde(default)]
    pub timeout_ms: Option<u64>,
    #[serde(default)]
    pub mock: Option<MockParams>,
    /// Directory of replay fixtures, one file per (prompt hash, continuation).
    #[serde(default)]
    pub fixture_dir: Option<PathBuf>,
    /// Serve only from fixtures; a missing fixture is an error.
    #[serde(default)]
    pub offline: bool,
    /// Append-only JSON-lines log of HTTP exchanges.
    #[serde(default)]
    pub run_log: Option<PathBuf>,
}

fn default_inflight() -> usize {
    4
}

impl BackendConfig {
    pub fn mock(params: MockParams) -> Self {
        BackendConfig {
            kind: BackendKind::Mock,
            endpoint: None,
            model_name: "mock".into(),
            auth_env: None,
            max_inflight: default_inflight(),
            retry: RetryPolicy::default(),
            timeout_ms: None,
            mock: Some(params),
            fixture_dir: None,
            offline: false,
            run_log: None,
        }
    }

    pub fn http(endpoint: impl Into<String>, model_name: impl Into<String>) -> Self {
        BackendConfig {
            kind: BackendKind::HttpCompletions,
            endpoint: Some(endpoint.into()),
            model_name: model_name.into(),
            mock: None,
            ..Self::mock(MockParams::default())
        }
    }

    pub fn validate(&self) -> Result<(), ScorerError> {
        if self.max_inflight < 1 {
            return Err(ScorerError::Config("max_inflight must be at least 1".into()));
        }
        if self.retry.max_attempts < 1 {
            return Err(ScorerError::Config("retry.max_attempts must be at least 1".into()));
        }
        match self.kind {
            BackendKind::Mock => {
                let width = self.mock.as_ref().map_or(MockParams::default().width, |m| m.width);
                if !(width > 0.0 && width.is_finite()) {
                    return Err(ScorerError::Config("mock width must be positive".into()));
                }
                if self.mock.as_ref().is_some_and(|m| !(m.noise >= 0.0 && m.noise.is_finite())) {
                    return Err(ScorerError::Config("mock noise must be nonnegative".into()));
                }
            }
            BackendKind::HttpCompletions => {
                if self.offline && self.fixture_dir.is_none() {
                    return Err(ScorerError::Config("offline mode needs a fixture directory".into()));
                }
                if !self.offline && self.endpoint.is_none() {
                    return Err(ScorerError::Config("http backend needs an endpoint".into()));
                }
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Box<dyn ScoringBackend>, ScorerError> {
        self.validate()?;
        Ok(match self.kind {
            BackendKind::Mock => Box::new(MockBackend::new(self.mock.clone().unwrap_or_default())),
            BackendKind::HttpCompletions => Box::new(HttpBackend::from_config(self)?),
        })
    }
}

#[derive(Debug, Clone)]
pub struct MockBackend {
    params: MockParams,
}

impl MockBackend {
    pub fn new(params: MockParams) -> Self {
        MockBackend { params }
    }

    /// Deterministic value in `[-1, 1]` for (seed, stimulus, θ).
    fn unit_noise(&self, stimulus_id: &str, theta: f64) -> f64 {
        let mut h = Sha256::new();
        h.update(self.params.seed.to_le_bytes());
        h.update(stimulus_id.as_bytes());
        h.update([0u8]);
        h.update(theta.to_bits().to_le_bytes());
        let d = h.finalize();
        let bits = u64::from_le_bytes(d[..8].try_into().expect("32-byte digest"));
        ((bits >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }
}

impl ScoringBackend for MockBackend {
    fn id(&self) -> String {
        format!(
            "mock(width={},noise={},seed={})",
            self.params.width, self.params.noise, self.params.seed
        )
    }

    fn is_probabilistic(&self) -> bool {
        false
    }

    fn score(&self, req: &ScoreRequest<'_>) -> Result<f64, ScorerError> {
        let target = self
            .params
            .targets
            .get(req.stimulus_id)
            .copied()
            .or(req.target_hint)
            .ok_or_else(|| ScorerError::Config(format!("no mock target for stimulus `{}`", req.stimulus_id)))?;
        let w = self.params.width;
        let bump = -(req.theta - target).powi(2) / (2.0 * w * w);
        let noise = if self.params.noise > 0.0 {
            self.params.noise * self.unit_noise(req.stimulus_id, req.theta)
        } else {
            0.0
        };
        Ok(bump + noise)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(theta: f64) -> ScoreRequest<'static> {
        ScoreRequest {
            stimulus_id: "control",
            theta,
            prompt: "",
            prompt_hash: "",
            continuation: "(condition)",
            target_hint: None,
        }
    }

    fn mock(noise: f64) -> MockBackend {
        MockBackend::new(MockParams {
            targets: [("control".to_string(), 70.0)].into(),
            width: 15.0,
            noise,
            seed: 3,
        })
    }

    #[test]
    fn peak_at_target() {
        assert_eq!(mock(0.0).score(&req(70.0)).unwrap(), 0.0);
    }

    #[test]
    fn bump_value() {
        // -(40-70)^2 / (2 * 15^2) = -900 / 450
        assert_eq!(mock(0.0).score(&req(40.0)).unwrap(), -2.0);
    }

    #[test]
    fn noise_is_bounded_and_deterministic() {
        let m = mock(0.5);
        for theta in [0.0, 10.0, 55.0, 100.0] {
            let a = m.score(&req(theta)).unwrap();
            assert_eq!(a, m.score(&req(theta)).unwrap());
            let bump = mock(0.0).score(&req(theta)).unwrap();
            assert!((a - bump).abs() <= 0.5);
        }
    }

    #[test]
    fn target_hint_fallback_and_missing_target() {
        let m = MockBackend::new(MockParams::default());
        let mut r = req(30.0);
        assert!(m.score(&r).is_err());
        r.target_hint = Some(30.0);
        assert_eq!(m.score(&r).unwrap(), 0.0);
    }

    #[test]
    fn config_validation() {
        let mut c = BackendConfig::mock(MockParams::default());
        assert!(c.validate().is_ok());
        c.max_inflight = 0;
        assert!(c.validate().is_err());
        let mut h = BackendConfig::http("http://localhost:1/v1/completions", "m");
        h.retry.max_attempts = 0;
        assert!(h.validate().is_err());
        h.retry.max_attempts = 1;
        h.endpoint = None;
        assert!(h.validate().is_err());
        h.offline = true;
        assert!(h.validate().is_err());
        h.fixture_dir = Some("fx".into());
        assert!(h.validate().is_ok());
    }

    #[test]
    fn config_from_toml() {
        let c: BackendConfig = toml::from_str(
            r#"
            kind = "http_completions"
            endpoint = "https://api.example.com/v1/completions"
            model_name = "some-code-model"
            auth_env = "SCORER_API_KEY"
            max_inflight = 2
            [retry]
            max_attempts = 5
            base_backoff_ms = 100
            "#,
        )
        .unwrap();
        assert_eq!(c.kind, BackendKind::HttpCompletions);
        assert_eq!(c.retry.max_attempts, 5);
        assert!(c.validate().is_ok());
    }
}
