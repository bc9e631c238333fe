//! Manifest-driven experiment runs: load stimuli and human data, score, calibrate,
//! compare, and write tables, a run record and plot data.

mod human;
mod manifest;
mod output;
mod run;

use thiserror::Error;

pub use human::{load_human_csv, read_human_csv, synthesize_human, write_human_csv, HumanRow};
pub use manifest::{bundled_manifest, load_manifest, parse_manifest, ExperimentManifest};
pub use output::{emit_results, results_csv, write_record, EmittedFiles, PLOT_DIR, RECORD_FILE, RESULTS_FILE};
pub use run::{
    partial_record, run_experiment, AssetHashes, BackendInfo, DecisionSwitches, LoocvPooling, ResultRow, RunConfig,
    RunOutput, RunRecord,
};

use crate::calibrate::CalibrateError;
use crate::scorer::ScorerError;
use crate::stats::StatsError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
    #[error("backend failed on stimulus `{stimulus}` ({} completed): {source}", completed.len())]
    Backend {
        stimulus: String,
        completed: Vec<String>,
        #[source]
        source: ScorerError,
    },
    #[error("statistics: {0}")]
    Stats(String),
}

impl HarnessError {
    /// Process exit status: 2 validation, 3 backend, 4 statistics.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Validation(_) | HarnessError::Io(_) => 2,
            HarnessError::Backend { .. } => 3,
            HarnessError::Stats(_) => 4,
        }
    }
}

impl From<StatsError> for HarnessError {
    fn from(e: StatsError) -> Self {
        HarnessError::Stats(e.to_string())
    }
}

impl From<CalibrateError> for HarnessError {
    fn from(e: CalibrateError) -> Self {
        HarnessError::Stats(e.to_string())
    }
}
