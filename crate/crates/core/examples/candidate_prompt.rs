//! Show the scoring prompt and candidate programs for one stimulus.
//!
//! `cargo run --example candidate_prompt`

use gradsem::assets::Experiment;
use gradsem::harness::bundled_manifest;
use gradsem::scorer::{assemble_prompt, build_candidates, prompt_hash, PromptBundle};

fn main() {
    let manifest = bundled_manifest(Experiment::E1);
    let stimulus = manifest.stimulus("e1-not-very-strong").expect("bundled stimulus");
    let prompt = assemble_prompt(&PromptBundle::for_experiment(Experiment::E1), stimulus);

    let tail: String = prompt.lines().rev().take(4).collect::<Vec<_>>().into_iter().rev().collect::<Vec<_>>().join("\n");
    println!("prompt: {} chars, sha256 {}", prompt.len(), &prompt_hash(&prompt)[..16]);
    println!("... {tail}\n");
    for c in build_candidates(stimulus, &manifest.grid) {
        println!("θ={:<4} {}", c.theta, c.text);
    }
}
