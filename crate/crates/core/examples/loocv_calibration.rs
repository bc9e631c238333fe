//! Leave-one-out temperature fitting on mock scores and synthetic human data.
//!
//! `cargo run --example loocv_calibration`

use std::collections::BTreeMap;

use gradsem::assets::Experiment;
use gradsem::calibrate::{fit_alpha_loocv, softmax, NelderMeadOptions};
use gradsem::harness::{bundled_manifest, synthesize_human};
use gradsem::scorer::{BackendConfig, MockParams, PromptBundle, Scorer};
use gradsem::stats::{empirical_distribution, HumanResponses};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let manifest = bundled_manifest(Experiment::E1);
    let scorer = Scorer::from_config(&BackendConfig::mock(MockParams::default()))?;
    let bundle = PromptBundle::for_experiment(Experiment::E1);

    let mut responses: BTreeMap<String, HumanResponses> = BTreeMap::new();
    for row in synthesize_human(&manifest, 30, 10.0, 5) {
        let r = responses.entry(row.stimulus_id.clone()).or_insert_with(|| HumanResponses {
            stimulus_id: row.stimulus_id.clone(),
            estimates: vec![],
            participant_ids: vec![],
        });
        r.estimates.push(row.estimate);
        r.participant_ids.push(row.participant_id);
    }

    let mut scores = BTreeMap::new();
    let mut human = BTreeMap::new();
    let mut pools = BTreeMap::new();
    for s in &manifest.stimuli {
        scores.insert(s.id.clone(), scorer.score_stimulus(&bundle, s, &manifest.grid)?);
        human.insert(s.id.clone(), empirical_distribution(&responses[&s.id], &manifest.grid)?);
        pools.insert(s.id.clone(), s.meta_str("panel").unwrap_or("all").to_string());
    }

    let fits = fit_alpha_loocv(&scores, &human, &pools, &NelderMeadOptions::default())?;
    for (id, fit) in &fits {
        let model = softmax(&scores[id], fit.alpha)?;
        println!(
            "{id:<24} α={:7.4} held-in loss {:.4} ({} iters) model mode θ={}",
            fit.alpha,
            fit.loss,
            fit.iterations,
            model.mode()
        );
    }
    Ok(())
}
