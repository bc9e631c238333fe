use serde::{Deserialize, Serialize};

use super::stimulus::Stimulus;
use crate::assets::{self, Experiment};
use crate::util::sha256_hex;

/// Frame placed after the instructions; `{sentence}` is replaced by the stimulus text.
/// The candidate program is scored as the continuation of the final line.
pub const DEFAULT_SENTENCE_FRAME: &str = ";; Sentence: {sentence}\n;; Condition:\n";

/// The fixed parts of every scoring prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub domain_text: String,
    pub instruction_text: String,
    pub sentence_frame: String,
}

impl PromptBundle {
    /// Bundled world model for the experiment plus the bundled instructions.
    pub fn for_experiment(experiment: Experiment) -> Self {
        PromptBundle {
            domain_text: experiment.world_model().to_owned(),
            instruction_text: assets::INSTRUCTIONS.to_owned(),
            sentence_frame: DEFAULT_SENTENCE_FRAME.to_owned(),
        }
    }

    pub fn with_domain_text(mut self, domain_text: impl Into<String>) -> Self {
        self.domain_text = domain_text.into();
        self
    }
}

/// `domain_text + instruction_text + frame(sentence)`.
pub fn assemble_prompt(bundle: &PromptBundle, stimulus: &Stimulus) -> String {
    let frame = bundle.sentence_frame.replace("{sentence}", stimulus.sentence.trim());
    let mut prompt = String::with_capacity(bundle.domain_text.len() + bundle.instruction_text.len() + frame.len());
    prompt.push_str(&bundle.domain_text);
    prompt.push_str(&bundle.instruction_text);
    prompt.push_str(&frame);
    prompt
}

pub fn prompt_hash(prompt: &str) -> String {
    sha256_hex(prompt)
}
