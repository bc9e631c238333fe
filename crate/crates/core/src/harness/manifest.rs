use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::Spanned;

use super::HarnessError;
use crate::assets::{self, Experiment};
use crate::scorer::{Form, Stimulus, ThetaGrid};
use crate::util::sha256_hex;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentManifest {
    pub experiment: Experiment,
    pub world_model_asset: PathBuf,
    /// Contents of the world-model asset; this exact text opens every prompt.
    #[serde(skip)]
    pub world_model_text: String,
    pub grid: ThetaGrid,
    pub stimuli: Vec<Stimulus>,
    pub notes: String,
    pub source_sha256: String,
}

impl ExperimentManifest {
    pub fn stimulus(&self, id: &str) -> Option<&Stimulus> {
        self.stimuli.iter().find(|s| s.id == id)
    }

    /// Same manifest without the stimuli whose ids are listed.
    pub fn without(&self, ids: &[&str]) -> ExperimentManifest {
        let mut m = self.clone();
        m.stimuli.retain(|s| !ids.contains(&s.id.as_str()));
        m
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    experiment: Experiment,
    world_model_asset: PathBuf,
    #[serde(default)]
    grid: Option<ThetaGrid>,
    #[serde(default)]
    notes: String,
    stimuli: Vec<StimulusEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StimulusEntry {
    id: Spanned<String>,
    sentence: Spanned<String>,
    form: Form,
    #[serde(default)]
    metadata: BTreeMap<String, serde_json::Value>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses manifest text. Relative asset paths resolve against `base_dir`, then fall back to the bundled assets.
pub fn parse_manifest(text: &str, origin: &str, base_dir: Option<&Path>) -> Result<ExperimentManifest, HarnessError> {
    let file: ManifestFile =
        toml::from_str(text).map_err(|e| HarnessError::Validation(format!("{origin}: {}", e.to_string().trim_end())))?;
    let invalid = |field: &str, offset: usize, msg: &str| {
        HarnessError::Validation(format!("{origin}: line {}: field `{field}`: {msg}", line_of(text, offset)))
    };

    let mut seen = HashSet::new();
    let mut stimuli = Vec::with_capacity(file.stimuli.len());
    for entry in file.stimuli {
        let id = entry.id.get_ref();
        if id.trim().is_empty() {
            return Err(invalid("id", entry.id.span().start, "must be non-empty"));
        }
        if !seen.insert(id.clone()) {
            return Err(invalid("id", entry.id.span().start, &format!("duplicate stimulus id `{id}`")));
        }
        if entry.sentence.get_ref().trim().is_empty() {
            return Err(invalid("sentence", entry.sentence.span().start, "must be non-empty"));
        }
        stimuli.push(Stimulus {
            id: entry.id.into_inner(),
            sentence: entry.sentence.into_inner(),
            form: entry.form,
            experiment: file.experiment,
            metadata: entry.metadata,
        });
    }
    if stimuli.is_empty() {
        return Err(HarnessError::Validation(format!("{origin}: field `stimuli`: no stimuli")));
    }

    let world_model_text = resolve_world_model(&file.world_model_asset, base_dir)
        .ok_or_else(|| {
            HarnessError::Validation(format!(
                "{origin}: field `world_model_asset`: cannot find `{}`",
                file.world_model_asset.display()
            ))
        })?;

    Ok(ExperimentManifest {
        experiment: file.experiment,
        world_model_asset: file.world_model_asset,
        world_model_text,
        grid: file.grid.unwrap_or_default(),
        stimuli,
        notes: file.notes,
        source_sha256: sha256_hex(text),
    })
}

fn resolve_world_model(asset: &Path, base_dir: Option<&Path>) -> Option<String> {
    let candidate = match base_dir {
        Some(dir) if asset.is_relative() => dir.join(asset),
        _ => asset.to_path_buf(),
    };
    if let Ok(text) = std::fs::read_to_string(&candidate) {
        return Some(text);
    }
    let name = asset.file_name()?.to_str()?;
    [Experiment::E1, Experiment::E2]
        .into_iter()
        .find(|e| e.world_model_file() == name)
        .map(|e| e.world_model().to_owned())
}

pub fn load_manifest(path: &Path) -> Result<ExperimentManifest, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Validation(format!("{}: {e}", path.display())))?;
    parse_manifest(&text, &path.display().to_string(), path.parent())
}

/// The manifest shipped with the crate for `experiment`.
pub fn bundled_manifest(experiment: Experiment) -> ExperimentManifest {
    let name = match experiment {
        Experiment::E1 => "e1.toml",
        Experiment::E2 => "e2.toml",
    };
    parse_manifest(experiment.default_manifest(), name, Some(&assets::asset_dir().join("manifests")))
        .expect("bundled manifests are valid")
}
