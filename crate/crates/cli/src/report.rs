use std::fs;
use std::path::Path;

use moyal_core::harness::{format_params, RatioSummary};
use moyal_core::{Error, Result, TheoremCase, TheoremId};
use serde::{Deserialize, Serialize};

use crate::config::BackendKind;

/// One CSV row: a case plus the provenance needed to reproduce it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub theorem: TheoremId,
    pub trial: u64,
    pub params: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub pass: bool,
    pub seed: u64,
    pub reason: String,
    pub backend: String,
    pub config_hash: String,
    pub element: String,
}

impl CaseRecord {
    pub fn new(case: &TheoremCase, backend: &serde_json::Value, config_hash: &str) -> Self {
        CaseRecord {
            theorem: case.id,
            trial: case.trial,
            params: format_params(&case.params),
            lhs: case.lhs,
            rhs: case.rhs,
            ratio: case.ratio,
            pass: case.pass,
            seed: case.seed,
            reason: case.reason.clone().unwrap_or_default(),
            backend: backend.to_string(),
            config_hash: config_hash.to_string(),
            element: case.element.to_string(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub theorem: TheoremId,
    pub name: &'static str,
    pub backend: serde_json::Value,
    pub first_trial: u64,
    pub params: Vec<String>,
    pub summary: RatioSummary,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub master_seed: u64,
    pub backend: BackendKind,
    pub cases: usize,
    pub failures: usize,
    pub suites: Vec<SuiteReport>,
}

/// Sorts by theorem, then trial; ties keep suite and parameter order.
pub fn canonical_order(rows: &mut [CaseRecord]) {
    rows.sort_by_key(|r| (r.theorem, r.trial));
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("{}: {e}", path.display()))
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| io_err(dir, e)),
        _ => Ok(()),
    }
}

pub fn cases_csv(rows: &[CaseRecord]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(vec![]);
    w.write_record(["theorem", "trial", "params", "lhs", "rhs", "ratio", "pass", "seed", "reason", "backend", "config_hash", "element"])
        .map_err(|e| Error::Config(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Config(e.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::Config(e.to_string()))
}

pub fn write_cases(path: &Path, rows: &[CaseRecord]) -> Result<()> {
    ensure_parent(path)?;
    fs::write(path, cases_csv(rows)?).map_err(|e| io_err(path, e))
}

pub fn read_cases(path: &Path) -> Result<Vec<CaseRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| io_err(path, e))).collect()
}

pub fn write_summary(path: &Path, summary: &RunSummary) -> Result<()> {
    ensure_parent(path)?;
    let text = serde_json::to_string_pretty(summary)?;
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}
