//! Per-run result files.
//!
//! A run writes three files into `<out>/<case>/<strategy>/<param>/`:
//!
//! * `cycles.csv`: one row per cycle (counts, error, indicator and size
//!   statistics, phase times)
//! * `dist_final.csv`: element size and indicator of every element of the
//!   final mesh
//! * `summary.json`: the run outcome, following `schema/summary.schema.json`

use std::path::{Path, PathBuf};

use amr_core::driver::{AmrConfig, CycleRecord, RunResult};
use serde::{Deserialize, Serialize};

use crate::cases::CaseId;
use crate::error::{BenchError, Result};

pub const SCHEMA_VERSION: u32 = 1;

pub const CYCLES_HEADER: [&str; 22] = [
    "cycle",
    "n_nodes",
    "n_elements",
    "error",
    "n_marked",
    "eta_min",
    "eta_q25",
    "eta_median",
    "eta_q75",
    "eta_max",
    "eta_mean",
    "size_min",
    "size_q25",
    "size_median",
    "size_q75",
    "size_max",
    "size_mean",
    "t_solve",
    "t_error",
    "t_estimate",
    "t_mark",
    "t_refine",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub case: CaseId,
    pub strategy: String,
    pub param: String,
    pub threshold: f64,
    pub max_cycles: usize,
    pub warm_start: bool,
    pub seed: u64,
    pub termination: String,
    pub message: Option<String>,
    pub converged: bool,
    /// Refinement cycles to reach the threshold; absent for DNF runs.
    pub cycles: Option<usize>,
    pub n_records: usize,
    pub final_nodes: Option<usize>,
    pub final_elements: Option<usize>,
    pub final_error: Option<f64>,
    pub wall_time: f64,
}

impl RunSummary {
    pub fn new(
        case: CaseId,
        config: &AmrConfig,
        seed: u64,
        result: &RunResult,
        wall_time: f64,
    ) -> Self {
        let last = result.records.last();
        let message = match &result.termination {
            amr_core::driver::Termination::SolverFailure(m) => Some(m.clone()),
            _ => None,
        };
        Self {
            schema_version: SCHEMA_VERSION,
            case,
            strategy: config.marking.strategy().name().into(),
            param: config.marking.param_label(),
            threshold: config.threshold,
            max_cycles: config.max_cycles,
            warm_start: config.warm_start,
            seed,
            termination: result.termination.label().into(),
            message,
            converged: result.converged(),
            cycles: result.cycles_to_threshold(),
            n_records: result.records.len(),
            final_nodes: last.map(|r| r.n_nodes),
            final_elements: last.map(|r| r.n_elements),
            final_error: last.map(|r| r.error),
            wall_time,
        }
    }
}

pub fn run_dir(out: &Path, case: CaseId, strategy: &str, param: &str) -> PathBuf {
    out.join(case.name()).join(strategy).join(param)
}

fn cycle_row(r: &CycleRecord) -> Vec<String> {
    let mut row = vec![
        r.cycle.to_string(),
        r.n_nodes.to_string(),
        r.n_elements.to_string(),
        format!("{:e}", r.error),
        r.n_marked.to_string(),
    ];
    for s in [&r.eta, &r.size] {
        row.extend([s.min, s.q25, s.median, s.q75, s.max, s.mean].map(|v| format!("{v:e}")));
    }
    let t = &r.times;
    row.extend([t.solve, t.error, t.estimate, t.mark, t.refine].map(|v| format!("{v:.6}")));
    row
}

pub fn write_cycles(path: &Path, records: &[CycleRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| BenchError::csv(path, e))?;
    w.write_record(CYCLES_HEADER)
        .map_err(|e| BenchError::csv(path, e))?;
    for r in records {
        w.write_record(cycle_row(r))
            .map_err(|e| BenchError::csv(path, e))?;
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}

pub fn write_distribution(path: &Path, sizes: &[f64], eta: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| BenchError::csv(path, e))?;
    w.write_record(["element", "size", "eta"])
        .map_err(|e| BenchError::csv(path, e))?;
    for (e, s) in sizes.iter().enumerate() {
        let eta = eta.get(e).map_or(String::new(), |v| format!("{v:e}"));
        w.write_record([e.to_string(), format!("{s:e}"), eta])
            .map_err(|e| BenchError::csv(path, e))?;
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}

pub fn write_summary(path: &Path, summary: &RunSummary) -> Result<()> {
    let text = serde_json::to_string_pretty(summary).map_err(|source| BenchError::Json {
        path: path.into(),
        source,
    })?;
    std::fs::write(path, text + "\n").map_err(|e| BenchError::io(path, e))
}

pub fn read_summary(path: &Path) -> Result<RunSummary> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| BenchError::Json {
        path: path.into(),
        source,
    })
}

/// Writes all three files of a run into `dir`.
pub fn write_run(dir: &Path, result: &RunResult, summary: &RunSummary) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    write_cycles(&dir.join("cycles.csv"), &result.records)?;
    write_distribution(
        &dir.join("dist_final.csv"),
        &result.final_mesh.element_sizes(),
        &result.final_eta,
    )?;
    write_summary(&dir.join("summary.json"), summary)
}

/// Cycle rows read back as `(cycle, n_nodes, n_elements, error)`.
pub fn read_convergence(path: &Path) -> Result<Vec<(usize, usize, usize, f64)>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| BenchError::csv(path, e))?;
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(|e| BenchError::csv(path, e))?;
        let field = |i: usize| row.get(i).unwrap_or("");
        let bad = || BenchError::Format(format!("{}: malformed row {:?}", path.display(), row));
        out.push((
            field(0).parse().map_err(|_| bad())?,
            field(1).parse().map_err(|_| bad())?,
            field(2).parse().map_err(|_| bad())?,
            field(3).parse().map_err(|_| bad())?,
        ));
    }
    Ok(out)
}
