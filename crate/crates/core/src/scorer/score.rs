use serde::{Deserialize, Serialize};

use super::backend::{BackendConfig, ScoreRequest, ScoringBackend};
use super::prompt::{assemble_prompt, prompt_hash, PromptBundle};
use super::stimulus::{build_candidates, Stimulus, ThetaGrid};
use super::ScorerError;
use crate::util::parallel_indexed;

/// Raw continuation log-probabilities over the θ grid for one stimulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub stimulus_id: String,
    pub thetas: Vec<f64>,
    pub logprobs: Vec<f64>,
    pub backend_id: String,
    pub prompt_hash: String,
}

impl ScoreVector {
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, &v) in self.logprobs.iter().enumerate() {
            if best.is_none_or(|b| v > self.logprobs[b]) {
                best = Some(i);
            }
        }
        best
    }
}

pub struct Scorer {
    backend: Box<dyn ScoringBackend>,
    max_inflight: usize,
}

impl Scorer {
    pub fn new(backend: Box<dyn ScoringBackend>, max_inflight: usize) -> Self {
        Scorer {
            backend,
            max_inflight: max_inflight.max(1),
        }
    }

    pub fn from_config(cfg: &BackendConfig) -> Result<Self, ScorerError> {
        Ok(Self::new(cfg.build()?, cfg.max_inflight))
    }

    pub fn backend(&self) -> &dyn ScoringBackend {
        self.backend.as_ref()
    }

    pub fn backend_id(&self) -> String {
        self.backend.id()
    }

    pub fn score_continuation(&self, req: &ScoreRequest<'_>) -> Result<f64, ScorerError> {
        if req.continuation.is_empty() {
            return Err(ScorerError::Config("continuation must be non-empty".into()));
        }
        let value = self.backend.score(req)?;
        let bad = !value.is_finite() || (self.backend.is_probabilistic() && value > 0.0);
        if bad {
            return Err(ScorerError::InvalidScore { theta: req.theta, value });
        }
        Ok(value)
    }

    /// Scores every candidate for `stimulus`. Any failed candidate fails the whole stimulus.
    pub fn score_stimulus(
        &self,
        bundle: &PromptBundle,
        stimulus: &Stimulus,
        grid: &ThetaGrid,
    ) -> Result<ScoreVector, ScorerError> {
        let prompt = assemble_prompt(bundle, stimulus);
        let hash = prompt_hash(&prompt);
        let candidates = build_candidates(stimulus, grid);
        let results = parallel_indexed(candidates.len(), self.max_inflight, |i| {
            self.score_continuation(&ScoreRequest {
                stimulus_id: &stimulus.id,
                theta: candidates[i].theta,
                prompt: &prompt,
                prompt_hash: &hash,
                continuation: &candidates[i].text,
                target_hint: stimulus.mock_target(),
            })
        });
        let logprobs = results
            .into_iter()
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ScorerError::Stimulus {
                id: stimulus.id.clone(),
                source: Box::new(e),
            })?;
        Ok(ScoreVector {
            stimulus_id: stimulus.id.clone(),
            thetas: grid.values().to_vec(),
            logprobs,
            backend_id: self.backend.id(),
            prompt_hash: hash,
        })
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::assets::Experiment;
    use crate::scorer::{Form, MockParams};

    fn stimulus(id: &str, target: f64) -> Stimulus {
        Stimulus {
            id: id.into(),
            sentence: "Jack is strong.".into(),
            form: Form::Exceeds,
            experiment: Experiment::E1,
            metadata: BTreeMap::from([("mock_target".to_string(), target.into())]),
        }
    }

    fn mock_cfg(noise: f64, inflight: usize) -> BackendConfig {
        let mut cfg = BackendConfig::mock(MockParams {
            noise,
            seed: 11,
            ..MockParams::default()
        });
        cfg.max_inflight = inflight;
        cfg
    }

    #[test]
    fn mock_vector_peaks_at_target() {
        let scorer = Scorer::from_config(&mock_cfg(0.0, 4)).unwrap();
        let bundle = PromptBundle::for_experiment(Experiment::E1);
        let v = scorer.score_stimulus(&bundle, &stimulus("a", 70.0), &ThetaGrid::default()).unwrap();
        assert_eq!(v.logprobs.len(), 11);
        assert!(v.logprobs.iter().all(|x| x.is_finite()));
        assert_eq!(v.thetas[v.argmax().unwrap()], 70.0);
        let again = scorer.score_stimulus(&bundle, &stimulus("a", 70.0), &ThetaGrid::default()).unwrap();
        assert_eq!(v, again);
    }

    #[test]
    fn single_point_grid() {
        let scorer = Scorer::from_config(&mock_cfg(0.2, 1)).unwrap();
        let bundle = PromptBundle::for_experiment(Experiment::E1);
        let grid = ThetaGrid::new(vec![30.0]).unwrap();
        let v = scorer.score_stimulus(&bundle, &stimulus("a", 70.0), &grid).unwrap();
        assert_eq!(v.logprobs.len(), 1);
    }

    #[test]
    fn inflight_width_does_not_change_output() {
        let bundle = PromptBundle::for_experiment(Experiment::E1);
        let grid = ThetaGrid::stepped(0.0, 100.0, 2.0).unwrap();
        let s = stimulus("b", 38.0);
        let one = Scorer::from_config(&mock_cfg(0.7, 1)).unwrap().score_stimulus(&bundle, &s, &grid).unwrap();
        let eight = Scorer::from_config(&mock_cfg(0.7, 8)).unwrap().score_stimulus(&bundle, &s, &grid).unwrap();
        assert_eq!(one, eight);
    }

    #[test]
    fn failing_candidate_fails_stimulus() {
        let scorer = Scorer::from_config(&mock_cfg(0.0, 4)).unwrap();
        let bundle = PromptBundle::for_experiment(Experiment::E1);
        let mut s = stimulus("c", 0.0);
        s.metadata.clear();
        let err = scorer.score_stimulus(&bundle, &s, &ThetaGrid::default()).unwrap_err();
        assert!(matches!(err, ScorerError::Stimulus { ref id, .. } if id == "c"));
    }
}
