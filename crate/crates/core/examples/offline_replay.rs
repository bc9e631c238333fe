//! Record HTTP scores from a local stub server, then replay them offline.
//!
//! `cargo run --example offline_replay`

use gradsem::assets::Experiment;
use gradsem::harness::{bundled_manifest, results_csv, run_experiment, synthesize_human, write_human_csv, load_human_csv, RunConfig};
use gradsem::scorer::stub::{StubCompletionServer, StubOptions};
use gradsem::scorer::BackendConfig;
use gradsem::sha256_hex;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let work = std::env::temp_dir().join("gradsem-offline-replay");
    let _ = std::fs::remove_dir_all(&work);
    std::fs::create_dir_all(&work)?;
    let manifest = bundled_manifest(Experiment::E2);
    write_human_csv(&work.join("human.csv"), &synthesize_human(&manifest, 20, 12.0, 3))?;
    let human = load_human_csv(&work.join("human.csv"), &manifest)?;

    let stub = StubCompletionServer::start(StubOptions::default())?;
    let mut backend = BackendConfig::http(stub.endpoint(), "stub-model");
    backend.fixture_dir = Some(work.join("fixtures"));
    backend.run_log = Some(work.join("http_log.jsonl"));
    let mut config = RunConfig::new(backend, &work);
    config.n_permutations = 2000;

    let online = run_experiment(&manifest, &human, &config)?;
    let online_hash = sha256_hex(results_csv(&online.rows)?);
    println!("online:  {} requests, table {}", stub.request_count(), &online_hash[..16]);
    drop(stub);

    config.backend.endpoint = Some("http://127.0.0.1:9/v1/completions".into());
    config.backend.offline = true;
    config.backend.run_log = None;
    let offline = run_experiment(&manifest, &human, &config)?;
    let offline_hash = sha256_hex(results_csv(&offline.rows)?);
    println!("offline: table {} ({})", &offline_hash[..16], if online_hash == offline_hash { "match" } else { "MISMATCH" });
    Ok(())
}
