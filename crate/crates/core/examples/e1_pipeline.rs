//! Full E1 run on the mock backend with synthetic responses; writes outputs to a temp dir.
//!
//! `cargo run --release --example e1_pipeline`

use gradsem::assets::Experiment;
use gradsem::harness::{bundled_manifest, emit_results, load_human_csv, run_experiment, synthesize_human, write_human_csv, RunConfig};
use gradsem::scorer::{BackendConfig, MockParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join("gradsem-e1-pipeline");
    std::fs::create_dir_all(&out)?;
    let manifest = bundled_manifest(Experiment::E1);

    let human_path = out.join("human.csv");
    write_human_csv(&human_path, &synthesize_human(&manifest, 30, 12.0, 1))?;
    let human = load_human_csv(&human_path, &manifest)?;

    let mut config = RunConfig::new(BackendConfig::mock(MockParams::default()), &out);
    config.seed = 42;
    let run = run_experiment(&manifest, &human, &config)?;
    let files = emit_results(&run.rows, &run.record, &out)?;

    for r in &run.rows {
        println!(
            "{:<26} mode θ={:<4} JSD {:.3}  p_fdr {:.4}  {}",
            r.stimulus_id,
            r.model_mode(),
            r.jsd,
            r.p_fdr,
            if r.significant { "similar" } else { "-" }
        );
    }
    println!("\n{} ({} plot files)", files.results.display(), files.plots.len());
    println!("{}", files.record.display());
    Ok(())
}
