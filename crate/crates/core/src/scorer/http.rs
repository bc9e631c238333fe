//! Echo-scoring adapter for completion-style HTTP APIs, plus offline fixture replay.
//!
//! Wire mapping: `POST <endpoint>` with
//! `{"model", "prompt": prompt + continuation, "max_tokens": 0, "echo": true, "logprobs": 0, "temperature": 0}`.
//! The response must carry `choices[0].logprobs.{tokens, token_logprobs, text_offset}`;
//! offsets are in characters. Tokens starting at or after the end of the prompt
//! form the continuation, and their log-probabilities are summed.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::backend::{BackendConfig, RetryPolicy, ScoreRequest, ScoringBackend};
use super::ScorerError;
use crate::util::sha256_hex;

/// Stored token log-probabilities for one (prompt hash, continuation) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub prompt_hash: String,
    pub continuation: String,
    pub tokens: Vec<String>,
    pub token_logprobs: Vec<f64>,
}

impl Fixture {
    pub fn total(&self) -> f64 {
        self.token_logprobs.iter().sum()
    }
}

#[derive(Debug, Clone)]
pub struct FixtureStore {
    dir: PathBuf,
}

impl FixtureStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FixtureStore { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, prompt_hash: &str, continuation: &str) -> PathBuf {
        let key = sha256_hex(format!("{prompt_hash}\n{continuation}"));
        self.dir.join(format!("{key}.json"))
    }

    pub fn load(&self, prompt_hash: &str, continuation: &str) -> Result<Option<Fixture>, ScorerError> {
        let path = self.path_for(prompt_hash, continuation);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(ScorerError::Fixture(format!("{}: {e}", path.display()))),
        };
        let fixture: Fixture =
            serde_json::from_str(&text).map_err(|e| ScorerError::Fixture(format!("{}: {e}", path.display())))?;
        if fixture.prompt_hash != prompt_hash || fixture.continuation != continuation {
            return Err(ScorerError::Fixture(format!("{}: key mismatch", path.display())));
        }
        Ok(Some(fixture))
    }

    pub fn save(&self, fixture: &Fixture) -> Result<(), ScorerError> {
        let io = |e: std::io::Error| ScorerError::Fixture(format!("{}: {e}", self.dir.display()));
        fs::create_dir_all(&self.dir).map_err(io)?;
        let path = self.path_for(&fixture.prompt_hash, &fixture.continuation);
        let tmp = path.with_extension("json.tmp");
        let body = serde_json::to_string_pretty(fixture).expect("fixtures serialize");
        fs::write(&tmp, body).map_err(io)?;
        fs::rename(&tmp, &path).map_err(io)
    }
}

pub struct HttpBackend {
    endpoint: Option<String>,
    model: String,
    token: Option<String>,
    retry: RetryPolicy,
    agent: ureq::Agent,
    fixtures: Option<FixtureStore>,
    offline: bool,
    run_log: Option<Mutex<File>>,
}

impl HttpBackend {
    pub fn from_config(cfg: &BackendConfig) -> Result<Self, ScorerError> {
        let token = match (&cfg.auth_env, cfg.offline) {
            (Some(var), false) => Some(
                std::env::var(var)
                    .map_err(|_| ScorerError::Config(format!("environment variable `{var}` is not set")))?,
            ),
            _ => None,
        };
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_millis(cfg.timeout_ms.unwrap_or(60_000))))
            .build()
            .into();
        let run_log = match &cfg.run_log {
            Some(path) => {
                if let Some(parent) = path.parent() {
                    fs::create_dir_all(parent).map_err(|e| ScorerError::Config(format!("{}: {e}", path.display())))?;
                }
                let f = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)
                    .map_err(|e| ScorerError::Config(format!("{}: {e}", path.display())))?;
                Some(Mutex::new(f))
            }
            None => None,
        };
        Ok(HttpBackend {
            endpoint: cfg.endpoint.clone(),
            model: cfg.model_name.clone(),
            token,
            retry: cfg.retry.clone(),
            agent,
            fixtures: cfg.fixture_dir.clone().map(FixtureStore::new),
            offline: cfg.offline,
            run_log,
        })
    }

    fn log(&self, entry: serde_json::Value) {
        if let Some(log) = &self.run_log {
            let mut f = log.lock().expect("run log poisoned");
            // the log is best effort; scoring does not depend on it
            let _ = writeln!(f, "{entry}");
        }
    }

    fn request(&self, req: &ScoreRequest<'_>) -> Result<Fixture, ScorerError> {
        let endpoint = self
            .endpoint
            .as_deref()
            .ok_or_else(|| ScorerError::Config("http backend has no endpoint".into()))?;
        let body = json!({
            "model": self.model,
            "prompt": format!("{}{}", req.prompt, req.continuation),
            "max_tokens": 0,
            "echo": true,
            "logprobs": 0,
            "temperature": 0,
        });
        let request_hash = sha256_hex(body.to_string());
        let mut attempts = Vec::new();

        for attempt in 1..=self.retry.max_attempts {
            if attempt > 1 {
                let backoff = self.retry.base_backoff_ms.saturating_mul(1 << (attempt - 2).min(16));
                std::thread::sleep(Duration::from_millis(backoff));
            }
            let started = Instant::now();
            let mut call = self.agent.post(endpoint).header("Content-Type", "application/json");
            if let Some(token) = &self.token {
                call = call.header("Authorization", format!("Bearer {token}"));
            }
            let outcome = call.send_json(&body).and_then(|mut resp| {
                let status = resp.status().as_u16();
                resp.body_mut().read_to_string().map(|text| (status, text))
            });
            let latency_ms = started.elapsed().as_millis() as u64;

            let (status, text) = match outcome {
                Ok(ok) => ok,
                Err(e) => {
                    self.log(json!({
                        "request_sha256": request_hash, "prompt_hash": req.prompt_hash,
                        "continuation": req.continuation, "attempt": attempt,
                        "latency_ms": latency_ms, "error": e.to_string(),
                    }));
                    attempts.push(format!("attempt {attempt}: transport error: {e}"));
                    continue;
                }
            };
            let response: serde_json::Value = serde_json::from_str(&text).unwrap_or(serde_json::Value::String(text));
            self.log(json!({
                "request_sha256": request_hash, "prompt_hash": req.prompt_hash,
                "continuation": req.continuation, "attempt": attempt,
                "status": status, "latency_ms": latency_ms, "response": response,
            }));
            match status {
                200..=299 => return extract_continuation(req, &response),
                429 | 500..=599 => attempts.push(format!("attempt {attempt}: HTTP {status}")),
                _ => {
                    attempts.push(format!("attempt {attempt}: HTTP {status}"));
                    break;
                }
            }
        }
        Err(ScorerError::Transport { attempts })
    }
}

/// Picks the continuation tokens out of an echo response.
pub fn extract_continuation(req: &ScoreRequest<'_>, response: &serde_json::Value) -> Result<Fixture, ScorerError> {
    let lp = &response["choices"][0]["logprobs"];
    let protocol = |what: &str| ScorerError::Protocol(format!("response lacks {what}"));
    let tokens = lp["tokens"].as_array().ok_or_else(|| protocol("logprobs.tokens"))?;
    let logprobs = lp["token_logprobs"].as_array().ok_or_else(|| protocol("logprobs.token_logprobs"))?;
    let offsets = lp["text_offset"].as_array().ok_or_else(|| protocol("logprobs.text_offset"))?;
    if tokens.len() != logprobs.len() || tokens.len() != offsets.len() {
        return Err(ScorerError::Protocol("logprobs arrays have different lengths".into()));
    }
    let prompt_chars = req.prompt.chars().count() as u64;
    let mut fixture = Fixture {
        prompt_hash: req.prompt_hash.to_owned(),
        continuation: req.continuation.to_owned(),
        tokens: Vec::new(),
        token_logprobs: Vec::new(),
    };
    for ((tok, lp), off) in tokens.iter().zip(logprobs).zip(offsets) {
        let off = off.as_u64().ok_or_else(|| protocol("integer text offsets"))?;
        if off < prompt_chars {
            continue;
        }
        let lp = lp.as_f64().ok_or_else(|| {
            ScorerError::Protocol(format!("missing log-probability for continuation token at offset {off}"))
        })?;
        fixture.tokens.push(tok.as_str().unwrap_or_default().to_owned());
        fixture.token_logprobs.push(lp);
    }
    if fixture.tokens.is_empty() {
        return Err(ScorerError::Protocol("response has no continuation tokens".into()));
    }
    Ok(fixture)
}

impl ScoringBackend for HttpBackend {
    fn id(&self) -> String {
        format!("http_completions({})", self.model)
    }

    fn is_probabilistic(&self) -> bool {
        true
    }

    fn score(&self, req: &ScoreRequest<'_>) -> Result<f64, ScorerError> {
        if self.offline {
            let store = self.fixtures.as_ref().expect("validated: offline implies fixtures");
            return store
                .load(req.prompt_hash, req.continuation)?
                .map(|f| f.total())
                .ok_or_else(|| ScorerError::OfflineMiss {
                    prompt_hash: req.prompt_hash.to_owned(),
                    continuation: req.continuation.to_owned(),
                });
        }
        let fixture = self.request(req)?;
        if let Some(store) = &self.fixtures {
            store.save(&fixture)?;
        }
        Ok(fixture.total())
    }
}
