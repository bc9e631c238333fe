use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use gradsem::assets::Experiment;
use gradsem::calibrate::Distribution;
use gradsem::church::{parse_one, ChurchError, rejection_query_with, RejectionOptions, WorldModel};
use gradsem::harness::{
    bundled_manifest, emit_results, load_human_csv, load_manifest, partial_record, run_experiment, synthesize_human,
    write_human_csv, write_record, ExperimentManifest, HarnessError, LoocvPooling, RunConfig,
};
use gradsem::rsa::{pragmatic_listener, RsaConfig};
use gradsem::scorer::{BackendConfig, BackendKind, MockParams};
use gradsem::stats::{HumanResponses, PValueEstimator, PermutationMode};

#[derive(Parser)]
#[command(name = "gradsem", version, about = "Gradable adjective semantics toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Church interpreter.
    Church {
        #[command(subcommand)]
        command: ChurchCommand,
    },
    /// Pragmatic-listener θ-marginal for one utterance.
    Rsa {
        #[arg(long)]
        utterance: String,
        /// TOML model config; defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Score, calibrate and compare one experiment.
    Run(RunArgs),
}

#[derive(Subcommand)]
enum ChurchCommand {
    /// Rejection-sample a query under conditions and print a posterior summary.
    Run {
        /// Program file; the bundled E1 world model when omitted.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Extra condition, repeatable; added to any in the program.
        #[arg(long)]
        condition: Vec<String>,
        /// Query expression; overrides a `(query ...)` in the program.
        #[arg(long)]
        query: Option<String>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Mock,
    Http,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    experiment: Experiment,
    /// Stimulus manifest; the bundled one for the experiment when omitted.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// CSV with participant_id, stimulus_id, estimate.
    #[arg(long, required_unless_present = "synthetic_human")]
    human: Option<PathBuf>,
    /// Generate N synthetic responses per stimulus instead of reading --human.
    #[arg(long, value_name = "N", conflicts_with = "human")]
    synthetic_human: Option<usize>,
    #[arg(long, value_enum, default_value = "mock")]
    backend: BackendArg,
    /// TOML backend config; flags below override its fields.
    #[arg(long)]
    backend_config: Option<PathBuf>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model_name: Option<String>,
    /// Environment variable holding the bearer token.
    #[arg(long)]
    auth_env: Option<String>,
    /// Replay fixture directory.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// Serve scores only from fixtures.
    #[arg(long)]
    offline: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    permutations: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "per_experiment")]
    loocv_pooling: LoocvPooling,
    #[arg(long, value_enum, default_value = "both_shuffled")]
    permutation_mode: PermutationMode,
    #[arg(long, value_enum, default_value = "strict")]
    p_estimator: PValueEstimator,
    #[arg(long, default_value_t = 0.05)]
    alpha_level: f64,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure {
            code: e.exit_code() as u8,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Church {
            command:
                ChurchCommand::Run {
                    model,
                    condition,
                    query,
                    samples,
                    seed,
                    workers,
                    json,
                },
        } => church_run(model.as_deref(), &condition, query.as_deref(), samples, seed, workers, json),
        Command::Rsa { utterance, config } => rsa(&utterance, config.as_deref()),
        Command::Run(args) => run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn church_run(
    model: Option<&Path>,
    extra_conditions: &[String],
    query: Option<&str>,
    samples: usize,
    seed: u64,
    workers: usize,
    json: bool,
) -> Result<(), Failure> {
    let church = |e: ChurchError| Failure::validation(e.to_string());
    let wm = match model {
        Some(p) => WorldModel::from_file(p).map_err(church)?,
        None => WorldModel::bundled(Experiment::E1),
    };
    let mut conditions = wm.conditions.clone();
    for c in extra_conditions {
        conditions.push(parse_one(c).map_err(church)?);
    }
    let query = match query {
        Some(q) => parse_one(q).map_err(church)?,
        None => wm
            .query
            .clone()
            .ok_or_else(|| Failure::validation("no --query given and the program has no (query ...) form"))?,
    };
    let options = RejectionOptions {
        workers,
        ..RejectionOptions::default()
    };
    let posterior = rejection_query_with(&wm, &conditions, &query, samples, seed, &options).map_err(|e| Failure {
        code: if matches!(e, ChurchError::TooRestrictive { .. }) { 4 } else { 2 },
        message: e.to_string(),
    })?;
    let summary = posterior.summary();
    if json {
        println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
        return Ok(());
    }
    println!("query: {query}");
    for c in &conditions {
        println!("condition: {c}");
    }
    println!("accepted: {}", summary.n_accepted);
    println!("attempted: {}", summary.n_attempted);
    println!("acceptance_rate: {:.6}", summary.acceptance_rate);
    println!("seed: {}", summary.seed);
    if let Some(n) = &summary.numeric {
        println!("mean: {:.4}", n.mean);
        println!("sd: {:.4}", n.sd);
        println!("std_error: {:.4}", n.std_error);
        println!("q05: {:.4}", n.q05);
        println!("median: {:.4}", n.median);
        println!("q95: {:.4}", n.q95);
    }
    for (v, count) in &summary.frequencies {
        println!("p({v}): {:.6}", *count as f64 / summary.n_accepted as f64);
    }
    Ok(())
}

fn rsa(utterance: &str, config: Option<&Path>) -> Result<(), Failure> {
    let invalid = |e: gradsem::rsa::RsaError| Failure::validation(e.to_string());
    let cfg = match config {
        Some(p) => RsaConfig::from_file(p).map_err(invalid)?,
        None => RsaConfig::default(),
    };
    let l1 = pragmatic_listener(utterance, &cfg).map_err(invalid)?;
    print_marginal(&l1.theta_marginal, cfg.theta_prior.probs());
    println!("# mean {:.6} (prior {:.6})", l1.theta_marginal.mean(), cfg.theta_prior.mean());
    Ok(())
}

fn print_marginal(d: &Distribution, prior: &[f64]) {
    println!("{:>10} {:>12} {:>12}", "theta", "posterior", "prior");
    for ((t, p), q) in d.thetas().iter().zip(d.probs()).zip(prior) {
        println!("{t:>10} {p:>12.6} {q:>12.6}");
    }
}

fn backend_config(args: &RunArgs) -> Result<BackendConfig, Failure> {
    let mut cfg = match &args.backend_config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::validation(format!("{}: {e}", p.display())))?;
            toml::from_str::<BackendConfig>(&text)
                .map_err(|e| Failure::validation(format!("{}: {}", p.display(), e.to_string().trim_end())))?
        }
        None => match args.backend {
            BackendArg::Mock => BackendConfig::mock(MockParams::default()),
            BackendArg::Http => BackendConfig::http(String::new(), String::new()),
        },
    };
    let wanted = match args.backend {
        BackendArg::Mock => BackendKind::Mock,
        BackendArg::Http => BackendKind::HttpCompletions,
    };
    if cfg.kind != wanted {
        return Err(Failure::validation("--backend does not match the kind in --backend-config"));
    }
    if let Some(e) = &args.endpoint {
        cfg.endpoint = Some(e.clone());
    }
    if let Some(m) = &args.model_name {
        cfg.model_name = m.clone();
    }
    if let Some(a) = &args.auth_env {
        cfg.auth_env = Some(a.clone());
    }
    if let Some(f) = &args.fixtures {
        cfg.fixture_dir = Some(f.clone());
    }
    if cfg.endpoint.as_deref() == Some("") {
        cfg.endpoint = None;
    }
    cfg.offline |= args.offline;
    if cfg.kind == BackendKind::HttpCompletions && cfg.run_log.is_none() {
        cfg.run_log = Some(args.out.join("http_log.jsonl"));
    }
    Ok(cfg)
}

fn human_data(args: &RunArgs, manifest: &ExperimentManifest) -> Result<BTreeMap<String, HumanResponses>, Failure> {
    let path = match (&args.human, args.synthetic_human) {
        (Some(p), _) => p.clone(),
        (None, Some(n)) => {
            std::fs::create_dir_all(&args.out).map_err(|e| HarnessError::Io(format!("{}: {e}", args.out.display())))?;
            let p = args.out.join("synthetic_human.csv");
            write_human_csv(&p, &synthesize_human(manifest, n, 12.0, args.seed))?;
            p
        }
        (None, None) => return Err(Failure::validation("--human or --synthetic-human is required")),
    };
    Ok(load_human_csv(&path, manifest)?)
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let manifest = match &args.manifest {
        Some(p) => load_manifest(p)?,
        None => bundled_manifest(args.experiment),
    };
    if manifest.experiment != args.experiment {
        return Err(Failure::validation(format!(
            "manifest is for {} but --experiment is {}",
            manifest.experiment, args.experiment
        )));
    }
    let human = human_data(&args, &manifest)?;
    let mut config = RunConfig::new(backend_config(&args)?, &args.out);
    config.seed = args.seed;
    config.n_permutations = args.permutations;
    config.loocv_pooling = args.loocv_pooling;
    config.permutation_mode = args.permutation_mode;
    config.p_value_estimator = args.p_estimator;
    config.significance_level = args.alpha_level;

    let output = match run_experiment(&manifest, &human, &config) {
        Ok(o) => o,
        Err(e) => {
            if matches!(e, HarnessError::Backend { .. }) {
                write_record(&partial_record(&manifest, &human, &config, &e), &args.out)?;
            }
            return Err(e.into());
        }
    };
    let files = emit_results(&output.rows, &output.record, &args.out)?;
    println!(
        "{:<40} {:>8} {:>10} {:>10} {:>10} {:>5}",
        "stimulus", "alpha", "jsd", "p_raw", "p_fdr", "sig"
    );
    for r in &output.rows {
        println!(
            "{:<40} {:>8.4} {:>10.6} {:>10.6} {:>10.6} {:>5}",
            r.stimulus_id, r.alpha, r.jsd, r.p_raw, r.p_fdr, r.significant
        );
    }
    println!("results: {}", files.results.display());
    println!("results_sha256: {}", files.results_sha256);
    Ok(())
}
