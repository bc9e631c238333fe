//! Prompt assembly and continuation scoring.

mod backend;
mod http;
mod prompt;
mod score;
mod stimulus;
pub mod stub;

use thiserror::Error;

pub use backend::{BackendConfig, BackendKind, MockBackend, MockParams, RetryPolicy, ScoreRequest, ScoringBackend};
pub use http::{extract_continuation, Fixture, FixtureStore, HttpBackend};
pub use prompt::{assemble_prompt, prompt_hash, PromptBundle, DEFAULT_SENTENCE_FRAME};
pub use score::{ScoreVector, Scorer};
pub use stimulus::{build_candidates, candidate_text, theta_literal, CandidateProgram, Form, Stimulus, ThetaGrid};

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("backend configuration: {0}")]
    Config(String),
    #[error("transport failed after {} attempt(s): {}", attempts.len(), attempts.join("; "))]
    Transport { attempts: Vec<String> },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("offline replay has no fixture for prompt {prompt_hash} and continuation `{continuation}`")]
    OfflineMiss { prompt_hash: String, continuation: String },
    #[error("fixture store: {0}")]
    Fixture(String),
    #[error("invalid score {value} for theta {theta}")]
    InvalidScore { theta: f64, value: f64 },
    #[error("stimulus `{id}`: {source}")]
    Stimulus {
        id: String,
        #[source]
        source: Box<ScorerError>,
    },
}

impl ScorerError {
    /// Configuration problems are the caller's fault; everything else comes from the backend.
    pub fn is_config(&self) -> bool {
        match self {
            ScorerError::Config(_) => true,
            ScorerError::Stimulus { source, .. } => source.is_config(),
            _ => false,
        }
    }
}
