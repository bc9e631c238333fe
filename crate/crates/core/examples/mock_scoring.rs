//! Score every candidate of a stimulus with the deterministic mock backend.
//!
//! `cargo run --example mock_scoring`

use gradsem::assets::Experiment;
use gradsem::harness::bundled_manifest;
use gradsem::scorer::{BackendConfig, MockParams, PromptBundle, Scorer};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let manifest = bundled_manifest(Experiment::E1);
    let bundle = PromptBundle::for_experiment(Experiment::E1);
    for noise in [0.0, 1.0] {
        let scorer = Scorer::from_config(&BackendConfig::mock(MockParams {
            noise,
            ..MockParams::default()
        }))?;
        println!("backend {}", scorer.backend_id());
        for id in ["e1-strong", "e1-very-weak"] {
            let v = scorer.score_stimulus(&bundle, manifest.stimulus(id).unwrap(), &manifest.grid)?;
            let row: Vec<String> = v.logprobs.iter().map(|x| format!("{x:6.2}")).collect();
            println!("  {id:<14} argmax θ={:<4} [{}]", v.argmax().map_or(f64::NAN, |i| v.thetas[i]), row.join(" "));
        }
    }
    Ok(())
}
