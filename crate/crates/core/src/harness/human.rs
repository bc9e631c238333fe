use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};

use super::{ExperimentManifest, HarnessError};
use crate::stats::HumanResponses;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanRow {
    pub participant_id: String,
    pub stimulus_id: String,
    pub estimate: f64,
}

/// Reads `participant_id,stimulus_id,estimate` rows and groups them per stimulus.
pub fn read_human_csv<R: Read>(
    reader: R,
    origin: &str,
    manifest: &ExperimentManifest,
) -> Result<BTreeMap<String, HumanResponses>, HarnessError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out: BTreeMap<String, HumanResponses> = BTreeMap::new();
    for (i, rec) in rdr.deserialize::<HumanRow>().enumerate() {
        // header is row 1
        let row = i + 2;
        let err = |msg: String| HarnessError::Validation(format!("{origin}: row {row}: {msg}"));
        let rec = rec.map_err(|e| err(e.to_string()))?;
        if manifest.stimulus(&rec.stimulus_id).is_none() {
            return Err(err(format!("unknown stimulus_id `{}`", rec.stimulus_id)));
        }
        if !(0.0..=100.0).contains(&rec.estimate) {
            return Err(err(format!("estimate {} outside [0, 100]", rec.estimate)));
        }
        let entry = out.entry(rec.stimulus_id.clone()).or_insert_with(|| HumanResponses {
            stimulus_id: rec.stimulus_id.clone(),
            estimates: Vec::new(),
            participant_ids: Vec::new(),
        });
        entry.estimates.push(rec.estimate);
        entry.participant_ids.push(rec.participant_id);
    }
    if out.is_empty() {
        return Err(HarnessError::Validation(format!("{origin}: no responses")));
    }
    Ok(out)
}

pub fn load_human_csv(path: &Path, manifest: &ExperimentManifest) -> Result<BTreeMap<String, HumanResponses>, HarnessError> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::Validation(format!("{}: {e}", path.display())))?;
    read_human_csv(file, &path.display().to_string(), manifest)
}

/// Synthetic slider responses: `n` integer estimates per stimulus from N(center, sd) clipped to [0, 100].
///
/// The center is the stimulus `mock_target` tag, or 50.
pub fn synthesize_human(manifest: &ExperimentManifest, n: usize, sd: f64, seed: u64) -> Vec<HumanRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n * manifest.stimuli.len());
    for s in &manifest.stimuli {
        let normal = Normal::new(s.mock_target().unwrap_or(50.0), sd).expect("sd is finite and positive");
        for p in 0..n {
            rows.push(HumanRow {
                participant_id: format!("p{p:03}"),
                stimulus_id: s.id.clone(),
                estimate: normal.sample(&mut rng).round().clamp(0.0, 100.0),
            });
        }
    }
    rows
}

pub fn write_human_csv(path: &Path, rows: &[HumanRow]) -> Result<(), HarnessError> {
    let io = |e: &dyn std::fmt::Display| HarnessError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(|e| io(&e))?;
    for r in rows {
        w.serialize(r).map_err(|e| io(&e))?;
    }
    w.flush().map_err(|e| io(&e))
}
