use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::{HarnessError, ResultRow, RunRecord};
use crate::scorer::theta_literal;
use crate::util::sha256_hex;

pub const RESULTS_FILE: &str = "results.csv";
pub const RECORD_FILE: &str = "run_record.json";
pub const PLOT_DIR: &str = "plot";

#[derive(Debug, Clone)]
pub struct EmittedFiles {
    pub results: PathBuf,
    pub record: PathBuf,
    pub plots: Vec<PathBuf>,
    pub results_sha256: String,
}

#[derive(Serialize)]
struct PlotData<'a> {
    stimulus_id: &'a str,
    sentence: &'a str,
    thetas: &'a [f64],
    model: &'a [f64],
    human: &'a [f64],
    alpha: f64,
    jsd: f64,
    p_fdr: f64,
    significant: bool,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io(format!("{}: {e}", path.display()))
}

/// Results table as CSV bytes; one row per stimulus, one column per θ for each distribution.
pub fn results_csv(rows: &[ResultRow]) -> Result<Vec<u8>, HarnessError> {
    let first = rows
        .first()
        .ok_or_else(|| HarnessError::Validation("no result rows to write".into()))?;
    for r in rows {
        let numbers = [r.alpha, r.jsd, r.p_raw, r.p_fdr].into_iter().chain(r.model_probs.iter().copied()).chain(r.human_probs.iter().copied());
        if numbers.into_iter().any(|x| !x.is_finite()) {
            return Err(HarnessError::Stats(format!("row `{}` contains a non-finite value", r.stimulus_id)));
        }
        if r.thetas != first.thetas || r.model_probs.len() != r.thetas.len() || r.human_probs.len() != r.thetas.len() {
            return Err(HarnessError::Validation(format!("row `{}` does not match the θ grid", r.stimulus_id)));
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["stimulus_id", "sentence", "alpha", "jsd", "p_raw", "p_fdr", "significant"]
        .map(String::from)
        .to_vec();
    header.extend(first.thetas.iter().map(|t| format!("model_{}", theta_literal(*t))));
    header.extend(first.thetas.iter().map(|t| format!("human_{}", theta_literal(*t))));
    let csv_err = |e: csv::Error| HarnessError::Io(e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for r in rows {
        let mut rec = vec![
            r.stimulus_id.clone(),
            r.sentence.clone(),
            r.alpha.to_string(),
            r.jsd.to_string(),
            r.p_raw.to_string(),
            r.p_fdr.to_string(),
            r.significant.to_string(),
        ];
        rec.extend(r.model_probs.iter().map(f64::to_string));
        rec.extend(r.human_probs.iter().map(f64::to_string));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| HarnessError::Io(e.to_string()))
}

/// Writes the results table, the run record and one plot-data file per stimulus into `dir`.
pub fn emit_results(rows: &[ResultRow], record: &RunRecord, dir: &Path) -> Result<EmittedFiles, HarnessError> {
    let table = results_csv(rows)?;
    let plot_dir = dir.join(PLOT_DIR);
    fs::create_dir_all(&plot_dir).map_err(|e| io_err(&plot_dir, e))?;

    let results = dir.join(RESULTS_FILE);
    fs::write(&results, &table).map_err(|e| io_err(&results, e))?;
    let results_sha256 = sha256_hex(&table);

    let mut plots = Vec::with_capacity(rows.len());
    for r in rows {
        let path = plot_dir.join(format!("{}.json", r.stimulus_id));
        let data = PlotData {
            stimulus_id: &r.stimulus_id,
            sentence: &r.sentence,
            thetas: &r.thetas,
            model: &r.model_probs,
            human: &r.human_probs,
            alpha: r.alpha,
            jsd: r.jsd,
            p_fdr: r.p_fdr,
            significant: r.significant,
        };
        let body = serde_json::to_string_pretty(&data).expect("plot data serializes");
        fs::write(&path, body).map_err(|e| io_err(&path, e))?;
        plots.push(path);
    }

    let mut record = record.clone();
    record.results_sha256 = Some(results_sha256.clone());
    let record_path = write_record(&record, dir)?;
    Ok(EmittedFiles {
        results,
        record: record_path,
        plots,
        results_sha256,
    })
}

/// Writes `run_record.json`, stamping the creation time.
pub fn write_record(record: &RunRecord, dir: &Path) -> Result<PathBuf, HarnessError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut record = record.clone();
    record.created_unix_ms = Some(
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or_default(),
    );
    let path = dir.join(RECORD_FILE);
    let body = serde_json::to_string_pretty(&record).expect("run record serializes");
    fs::write(&path, body).map_err(|e| io_err(&path, e))?;
    Ok(path)
}
