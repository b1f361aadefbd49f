//! Single runs and parameter sweeps.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use amr_core::driver::{run_observed, AmrConfig, CycleRecord, Problem, RunResult};
use amr_core::mesh::Mesh;
use amr_core::{Result as CoreResult, SolutionField};
use rayon::prelude::*;
use serde::Serialize;

use crate::cases::{CaseId, FlowSettings, FluidCase, SolidCase};
use crate::error::{BenchError, Result};
use crate::output::{run_dir, write_run, RunSummary};
use crate::reference;

/// A benchmark ready to run, with its reference loaded for fluid cases.
#[derive(Debug, Clone)]
pub enum Benchmark {
    Solid(SolidCase),
    Fluid(FluidCase),
}

impl Benchmark {
    /// Solid cases need nothing else. Fluid cases load the reference of
    /// `level` from `reference_dir`.
    pub fn prepare(
        case: CaseId,
        flow: FlowSettings,
        reference_dir: &Path,
        level: usize,
    ) -> Result<Self> {
        if !case.is_fluid() {
            return Ok(Benchmark::Solid(SolidCase::new(case)?));
        }
        let r = reference::load_for(case, level, reference_dir, flow)?;
        Ok(Benchmark::Fluid(
            FluidCase::new(case, flow)?.with_reference(Arc::new(r)),
        ))
    }

    pub fn case(&self) -> CaseId {
        match self {
            Benchmark::Solid(s) => s.id,
            Benchmark::Fluid(f) => f.id,
        }
    }
}

impl Problem for Benchmark {
    fn initial_mesh(&self) -> &Mesh {
        match self {
            Benchmark::Solid(s) => s.initial_mesh(),
            Benchmark::Fluid(f) => f.initial_mesh(),
        }
    }

    fn solve(&self, mesh: &Mesh, guess: Option<&SolutionField>) -> CoreResult<SolutionField> {
        match self {
            Benchmark::Solid(s) => s.solve(mesh, guess),
            Benchmark::Fluid(f) => f.solve(mesh, guess),
        }
    }

    fn error(&self, mesh: &Mesh, solution: &SolutionField) -> CoreResult<f64> {
        match self {
            Benchmark::Solid(s) => s.error(mesh, solution),
            Benchmark::Fluid(f) => f.error(mesh, solution),
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub result: RunResult,
    pub summary: RunSummary,
    pub dir: PathBuf,
}

/// Runs the loop and writes the result files under `out`.
pub fn run_case(
    bench: &Benchmark,
    config: &AmrConfig,
    seed: u64,
    out: &Path,
    observer: impl FnMut(&CycleRecord),
) -> Result<RunOutcome> {
    let start = Instant::now();
    let result = run_observed(bench, config, observer)?;
    let summary = RunSummary::new(
        bench.case(),
        config,
        seed,
        &result,
        start.elapsed().as_secs_f64(),
    );
    let dir = run_dir(out, bench.case(), &summary.strategy, &summary.param);
    write_run(&dir, &result, &summary)?;
    Ok(RunOutcome {
        result,
        summary,
        dir,
    })
}

/// One row of a sweep table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub case: CaseId,
    pub strategy: String,
    pub param: String,
    /// Cycles to the threshold, `None` for DNF.
    pub cycles: Option<usize>,
    pub termination: String,
    pub reason: Option<String>,
    pub final_nodes: Option<usize>,
    pub final_elements: Option<usize>,
    pub final_error: Option<f64>,
}

impl SweepRow {
    fn from_summary(s: &RunSummary) -> Self {
        Self {
            case: s.case,
            strategy: s.strategy.clone(),
            param: s.param.clone(),
            cycles: s.cycles,
            termination: s.termination.clone(),
            reason: if s.converged {
                None
            } else {
                Some(s.message.clone().unwrap_or_else(|| s.termination.clone()))
            },
            final_nodes: s.final_nodes,
            final_elements: s.final_elements,
            final_error: s.final_error,
        }
    }

    fn failed(case: CaseId, config: &AmrConfig, err: &BenchError) -> Self {
        Self {
            case,
            strategy: config.marking.strategy().name().into(),
            param: config.marking.param_label(),
            cycles: None,
            termination: "error".into(),
            reason: Some(err.to_string()),
            final_nodes: None,
            final_elements: None,
            final_error: None,
        }
    }

    pub fn is_dnf(&self) -> bool {
        self.cycles.is_none()
    }
}

fn param_key(p: &str) -> f64 {
    p.parse().unwrap_or(f64::INFINITY)
}

/// Runs every configuration on up to `workers` threads. A run that errors
/// becomes a DNF row and the sweep carries on.
pub fn sweep(
    bench: &Benchmark,
    configs: &[AmrConfig],
    seed: u64,
    out: &Path,
    workers: usize,
) -> Result<Vec<SweepRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| BenchError::Config(format!("cannot start {workers} workers: {e}")))?;
    let mut rows: Vec<SweepRow> = pool.install(|| {
        configs
            .par_iter()
            .map(|c| match run_case(bench, c, seed, out, |_| {}) {
                Ok(o) => SweepRow::from_summary(&o.summary),
                Err(e) => SweepRow::failed(bench.case(), c, &e),
            })
            .collect()
    });
    rows.sort_by(|a, b| {
        a.strategy
            .cmp(&b.strategy)
            .then(param_key(&a.param).total_cmp(&param_key(&b.param)))
    });
    Ok(rows)
}

pub const SWEEP_HEADER: [&str; 9] = [
    "case",
    "strategy",
    "param",
    "cycles",
    "termination",
    "reason",
    "final_nodes",
    "final_elements",
    "final_error",
];

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    }
    let opt = |v: Option<usize>| v.map_or(String::new(), |v| v.to_string());
    let mut w = csv::Writer::from_path(path).map_err(|e| BenchError::csv(path, e))?;
    w.write_record(SWEEP_HEADER)
        .map_err(|e| BenchError::csv(path, e))?;
    for r in rows {
        w.write_record([
            r.case.name().to_string(),
            r.strategy.clone(),
            r.param.clone(),
            r.cycles.map_or("DNF".into(), |c| c.to_string()),
            r.termination.clone(),
            r.reason.clone().unwrap_or_default(),
            opt(r.final_nodes),
            opt(r.final_elements),
            r.final_error.map_or(String::new(), |e| format!("{e:e}")),
        ])
        .map_err(|e| BenchError::csv(path, e))?;
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}
