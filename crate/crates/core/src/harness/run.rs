use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{ExperimentManifest, HarnessError};
use crate::assets;
use crate::calibrate::{fit_alpha_loocv, softmax, NelderMeadOptions, TemperatureFit};
use crate::scorer::{BackendConfig, BackendKind, PromptBundle, ScoreVector, Scorer, Stimulus};
use crate::stats::{
    empirical_distribution, fdr_bh, permutation_test, ComparisonResult, HumanResponses, PValueEstimator,
    PermutationMode, PermutationOptions,
};
use crate::util::{derive_seed, parallel_indexed, sha256_hex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum LoocvPooling {
    /// Every other stimulus of the experiment.
    #[default]
    #[value(name = "per_experiment")]
    PerExperiment,
    /// Only stimuli sharing the `panel` tag (or, untagged, the same form).
    #[value(name = "per_panel")]
    PerPanel,
}

impl LoocvPooling {
    pub fn pool_key(self, stimulus: &Stimulus) -> String {
        match self {
            LoocvPooling::PerExperiment => stimulus.experiment.to_string(),
            LoocvPooling::PerPanel => match stimulus.meta_str("panel") {
                Some(p) => format!("{}/{p}", stimulus.experiment),
                None => format!("{}/{:?}", stimulus.experiment, stimulus.form),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub backend: BackendConfig,
    pub n_permutations: usize,
    pub seed: u64,
    pub significance_level: f64,
    pub output_dir: PathBuf,
    pub loocv_pooling: LoocvPooling,
    pub permutation_mode: PermutationMode,
    pub p_value_estimator: PValueEstimator,
    pub nelder_mead: NelderMeadOptions,
    /// Stimuli scored at the same time; each may have `backend.max_inflight` requests open.
    pub stimulus_concurrency: usize,
}

impl RunConfig {
    pub fn new(backend: BackendConfig, output_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            backend,
            n_permutations: 10_000,
            seed: 0,
            significance_level: 0.05,
            output_dir: output_dir.into(),
            loocv_pooling: LoocvPooling::default(),
            permutation_mode: PermutationMode::default(),
            p_value_estimator: PValueEstimator::default(),
            nelder_mead: NelderMeadOptions::default(),
            stimulus_concurrency: 4,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.n_permutations < 1 {
            return Err(HarnessError::Validation("permutations must be at least 1".into()));
        }
        if !(self.significance_level > 0.0 && self.significance_level < 1.0) {
            return Err(HarnessError::Validation("significance level must lie in (0, 1)".into()));
        }
        if self.stimulus_concurrency < 1 {
            return Err(HarnessError::Validation("stimulus concurrency must be at least 1".into()));
        }
        self.backend.validate().map_err(|e| HarnessError::Validation(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub stimulus_id: String,
    pub sentence: String,
    pub alpha: f64,
    pub thetas: Vec<f64>,
    pub model_probs: Vec<f64>,
    pub human_probs: Vec<f64>,
    pub jsd: f64,
    pub p_raw: f64,
    pub p_fdr: f64,
    pub significant: bool,
}

impl ResultRow {
    pub fn model_mode(&self) -> f64 {
        let mut best = 0;
        for (i, p) in self.model_probs.iter().enumerate() {
            if *p > self.model_probs[best] {
                best = i;
            }
        }
        self.thetas[best]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendInfo {
    pub id: String,
    pub kind: BackendKind,
    pub model_name: String,
    pub endpoint: Option<String>,
    pub offline: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetHashes {
    pub manifest_sha256: String,
    pub world_model_sha256: String,
    pub instructions_sha256: String,
    pub human_data_sha256: String,
}

/// Analysis choices that change results, restated for readers of the record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionSwitches {
    pub log_base: String,
    pub binning: String,
    pub length_normalization: String,
    pub loocv_pooling: LoocvPooling,
    pub permutation_mode: PermutationMode,
    pub p_value_estimator: PValueEstimator,
    pub significance_level: f64,
    pub nelder_mead: NelderMeadOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub status: String,
    pub tool_version: String,
    pub experiment: String,
    pub config: RunConfig,
    pub master_seed: u64,
    pub permutation_seeds: BTreeMap<String, u64>,
    pub asset_hashes: AssetHashes,
    pub backend: BackendInfo,
    pub decisions: DecisionSwitches,
    pub prompt_hashes: BTreeMap<String, String>,
    pub fits: BTreeMap<String, TemperatureFit>,
    pub completed_stimuli: Vec<String>,
    pub error: Option<String>,
    pub results_sha256: Option<String>,
    /// The only field that differs between otherwise identical runs.
    pub created_unix_ms: Option<u128>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<ResultRow>,
    pub comparisons: Vec<ComparisonResult>,
    pub scores: BTreeMap<String, ScoreVector>,
    pub record: RunRecord,
}

fn human_hash(human: &BTreeMap<String, HumanResponses>) -> String {
    sha256_hex(serde_json::to_vec(human).expect("responses serialize"))
}

fn base_record(manifest: &ExperimentManifest, human: &BTreeMap<String, HumanResponses>, config: &RunConfig) -> RunRecord {
    RunRecord {
        status: "complete".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        experiment: manifest.experiment.to_string(),
        config: config.clone(),
        master_seed: config.seed,
        permutation_seeds: manifest
            .stimuli
            .iter()
            .map(|s| (s.id.clone(), derive_seed(config.seed, &s.id)))
            .collect(),
        asset_hashes: AssetHashes {
            manifest_sha256: manifest.source_sha256.clone(),
            world_model_sha256: sha256_hex(&manifest.world_model_text),
            instructions_sha256: sha256_hex(assets::INSTRUCTIONS),
            human_data_sha256: human_hash(human),
        },
        backend: BackendInfo {
            id: String::new(),
            kind: config.backend.kind,
            model_name: config.backend.model_name.clone(),
            endpoint: config.backend.endpoint.clone(),
            offline: config.backend.offline,
        },
        decisions: DecisionSwitches {
            log_base: "e".into(),
            binning: "nearest grid value, halfway rounds up".into(),
            length_normalization: "none".into(),
            loocv_pooling: config.loocv_pooling,
            permutation_mode: config.permutation_mode,
            p_value_estimator: config.p_value_estimator,
            significance_level: config.significance_level,
            nelder_mead: config.nelder_mead,
        },
        prompt_hashes: BTreeMap::new(),
        fits: BTreeMap::new(),
        completed_stimuli: Vec::new(),
        error: None,
        results_sha256: None,
        created_unix_ms: None,
    }
}

/// Record for a run that stopped partway; names the stimuli that finished scoring.
pub fn partial_record(
    manifest: &ExperimentManifest,
    human: &BTreeMap<String, HumanResponses>,
    config: &RunConfig,
    error: &HarnessError,
) -> RunRecord {
    let mut r = base_record(manifest, human, config);
    r.status = "partial".into();
    r.error = Some(error.to_string());
    if let HarnessError::Backend { completed, .. } = error {
        r.completed_stimuli = completed.clone();
    }
    r
}

/// Scores, calibrates and compares every stimulus of the manifest.
pub fn run_experiment(
    manifest: &ExperimentManifest,
    human: &BTreeMap<String, HumanResponses>,
    config: &RunConfig,
) -> Result<RunOutput, HarnessError> {
    config.validate()?;
    for s in &manifest.stimuli {
        if !human.contains_key(&s.id) {
            return Err(HarnessError::Validation(format!("no human responses for stimulus `{}`", s.id)));
        }
    }
    if let Some(extra) = human.keys().find(|id| manifest.stimulus(id).is_none()) {
        return Err(HarnessError::Validation(format!("human responses for unknown stimulus `{extra}`")));
    }

    let scorer = Scorer::from_config(&config.backend).map_err(|e| HarnessError::Validation(e.to_string()))?;
    let bundle = PromptBundle::for_experiment(manifest.experiment).with_domain_text(manifest.world_model_text.clone());

    let scored = parallel_indexed(manifest.stimuli.len(), config.stimulus_concurrency, |i| {
        scorer.score_stimulus(&bundle, &manifest.stimuli[i], &manifest.grid)
    });
    let mut scores = BTreeMap::new();
    let mut failure = None;
    let mut completed = Vec::new();
    for (s, r) in manifest.stimuli.iter().zip(scored) {
        match r {
            Ok(v) => {
                completed.push(s.id.clone());
                scores.insert(s.id.clone(), v);
            }
            Err(e) if failure.is_none() => failure = Some((s.id.clone(), e)),
            Err(_) => {}
        }
    }
    if let Some((stimulus, source)) = failure {
        if source.is_config() {
            return Err(HarnessError::Validation(source.to_string()));
        }
        return Err(HarnessError::Backend {
            stimulus,
            completed,
            source,
        });
    }

    let human_dists = manifest
        .stimuli
        .iter()
        .map(|s| Ok((s.id.clone(), empirical_distribution(&human[&s.id], &manifest.grid)?)))
        .collect::<Result<BTreeMap<_, _>, HarnessError>>()?;
    let pools = manifest
        .stimuli
        .iter()
        .map(|s| (s.id.clone(), config.loocv_pooling.pool_key(s)))
        .collect();
    let fits = fit_alpha_loocv(&scores, &human_dists, &pools, &config.nelder_mead)?;

    let mut record = base_record(manifest, human, config);
    let mut partial_rows = Vec::with_capacity(manifest.stimuli.len());
    for s in &manifest.stimuli {
        let fit = &fits[&s.id];
        let model = softmax(&scores[&s.id], fit.alpha)?;
        let human_d = &human_dists[&s.id];
        let seed = record.permutation_seeds[&s.id];
        let outcome = permutation_test(
            human_d,
            &model,
            &PermutationOptions {
                n_iter: config.n_permutations,
                seed,
                mode: config.permutation_mode,
                estimator: config.p_value_estimator,
            },
        )?;
        partial_rows.push((s, fit.alpha, model, human_d.clone(), outcome, seed));
    }
    let p_fdr = fdr_bh(&partial_rows.iter().map(|r| r.4.p_raw).collect::<Vec<_>>())?;

    let mut rows = Vec::with_capacity(partial_rows.len());
    let mut comparisons = Vec::with_capacity(partial_rows.len());
    for ((s, alpha, model, human_d, outcome, seed), q) in partial_rows.into_iter().zip(p_fdr) {
        let significant = q < config.significance_level;
        comparisons.push(ComparisonResult {
            stimulus_id: s.id.clone(),
            jsd: outcome.observed,
            p_raw: outcome.p_raw,
            p_fdr: q,
            significant,
            n_permutations: config.n_permutations,
            seed,
        });
        rows.push(ResultRow {
            stimulus_id: s.id.clone(),
            sentence: s.sentence.clone(),
            alpha,
            thetas: manifest.grid.values().to_vec(),
            model_probs: model.probs().to_vec(),
            human_probs: human_d.probs().to_vec(),
            jsd: outcome.observed,
            p_raw: outcome.p_raw,
            p_fdr: q,
            significant,
        });
    }

    record.backend.id = scorer.backend_id();
    record.prompt_hashes = scores.iter().map(|(id, v)| (id.clone(), v.prompt_hash.clone())).collect();
    record.fits = fits;
    record.completed_stimuli = manifest.stimuli.iter().map(|s| s.id.clone()).collect();
    Ok(RunOutput {
        rows,
        comparisons,
        scores,
        record,
    })
}
