//! Bundled text assets: world models, task instructions and default manifests.
//!
//! The `.church` files are also the exact text placed in scoring prompts.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub const WORLD_MODEL_E1: &str = include_str!("../assets/models/tug_of_war_e1.church");
pub const WORLD_MODEL_E2: &str = include_str!("../assets/models/tug_of_war_e2.church");
pub const INSTRUCTIONS: &str = include_str!("../assets/prompts/instructions.txt");
pub const MANIFEST_E1: &str = include_str!("../assets/manifests/e1.toml");
pub const MANIFEST_E2: &str = include_str!("../assets/manifests/e2.toml");

/// Directory holding the bundled assets in a source checkout.
pub fn asset_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("assets")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Experiment {
    /// Qualifiers, negation and polarity inversion under a single strength prior.
    E1,
    /// Comparison classes: strength prior conditioned on league.
    E2,
}

impl Experiment {
    pub fn world_model(self) -> &'static str {
        match self {
            Experiment::E1 => WORLD_MODEL_E1,
            Experiment::E2 => WORLD_MODEL_E2,
        }
    }

    pub fn default_manifest(self) -> &'static str {
        match self {
            Experiment::E1 => MANIFEST_E1,
            Experiment::E2 => MANIFEST_E2,
        }
    }

    pub fn world_model_file(self) -> &'static str {
        match self {
            Experiment::E1 => "tug_of_war_e1.church",
            Experiment::E2 => "tug_of_war_e2.church",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::E1 => "E1",
            Experiment::E2 => "E2",
        })
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "e1" => Ok(Experiment::E1),
            "e2" => Ok(Experiment::E2),
            other => Err(format!("unknown experiment `{other}` (expected e1 or e2)")),
        }
    }
}
