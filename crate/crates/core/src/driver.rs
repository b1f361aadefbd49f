//! The adaptive loop: solve, check the error, estimate, mark, refine.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::estimator::kelly;
use crate::marking::MarkingConfig;
use crate::mesh::{build_topology, refine, Mesh};
use crate::stats::Summary;
use crate::{Error, Result, SolutionField};

/// A boundary-value problem the loop can drive.
pub trait Problem {
    fn initial_mesh(&self) -> &Mesh;

    /// Solves on `mesh`. `guess` is the previous solution interpolated onto
    /// `mesh`, when one exists.
    fn solve(&self, mesh: &Mesh, guess: Option<&SolutionField>) -> Result<SolutionField>;

    /// The convergence metric of a solution (relative error).
    fn error(&self, mesh: &Mesh, solution: &SolutionField) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmrConfig {
    pub marking: MarkingConfig,
    pub threshold: f64,
    pub max_cycles: usize,
    /// Seed each solve with the interpolated previous solution.
    pub warm_start: bool,
}

impl AmrConfig {
    pub fn new(marking: MarkingConfig) -> Self {
        Self {
            marking,
            threshold: 0.01,
            max_cycles: 40,
            warm_start: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0) {
            return Err(Error::Config(format!(
                "threshold must be positive, got {}",
                self.threshold
            )));
        }
        if self.max_cycles < 1 {
            return Err(Error::Config("max_cycles must be at least 1".into()));
        }
        self.marking.validate()
    }
}

/// Wall time per phase, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub solve: f64,
    pub error: f64,
    pub estimate: f64,
    pub mark: f64,
    pub refine: f64,
}

/// Metrics of one solve on one mesh. Cycle `k` is the mesh obtained after
/// `k` refinements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle: usize,
    pub n_nodes: usize,
    pub n_elements: usize,
    pub error: f64,
    /// Zero on the last record of a run that stopped before marking.
    pub n_marked: usize,
    pub eta: Summary,
    pub size: Summary,
    pub times: PhaseTimes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", content = "message", rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    CycleCap,
    EmptyMark,
    SolverFailure(String),
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::CycleCap => "cycle-cap",
            Termination::EmptyMark => "empty-mark",
            Termination::SolverFailure(_) => "solver-failure",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub records: Vec<CycleRecord>,
    pub termination: Termination,
    pub final_mesh: Mesh,
    /// Indicators on the final mesh (empty if the last solve failed).
    pub final_eta: Vec<f64>,
    pub final_solution: Option<SolutionField>,
}

impl RunResult {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    /// Refinements performed before convergence; `None` if the run did not converge.
    pub fn cycles_to_threshold(&self) -> Option<usize> {
        self.converged()
            .then(|| self.records.last().map_or(0, |r| r.cycle))
    }

    pub fn final_error(&self) -> Option<f64> {
        self.records.last().map(|r| r.error)
    }
}

enum Marker<'a> {
    Config(&'a MarkingConfig),
    All,
}

/// Runs the adaptive loop until the error drops below the threshold, the
/// cycle cap is hit, or the marking step selects nothing.
pub fn run(problem: &impl Problem, config: &AmrConfig) -> Result<RunResult> {
    run_observed(problem, config, |_| {})
}

/// [`run`], calling `observer` with each record as soon as it is complete.
pub fn run_observed(
    problem: &impl Problem,
    config: &AmrConfig,
    mut observer: impl FnMut(&CycleRecord),
) -> Result<RunResult> {
    config.validate()?;
    let marker = Marker::Config(&config.marking);
    Ok(run_loop(
        problem,
        marker,
        Some(config.threshold),
        config.max_cycles,
        config.warm_start,
        &mut observer,
    ))
}

/// Refines every element `cycles` times, recording each mesh.
pub fn run_uniform(problem: &impl Problem, cycles: usize, warm_start: bool) -> Result<RunResult> {
    if cycles < 1 {
        return Err(Error::Config(
            "uniform refinement needs at least one cycle".into(),
        ));
    }
    Ok(run_loop(
        problem,
        Marker::All,
        None,
        cycles,
        warm_start,
        &mut |_| {},
    ))
}

fn run_loop(
    problem: &impl Problem,
    marker: Marker<'_>,
    threshold: Option<f64>,
    max_cycles: usize,
    warm_start: bool,
    observer: &mut dyn FnMut(&CycleRecord),
) -> RunResult {
    let mut mesh = problem.initial_mesh().clone();
    let mut guess: Option<SolutionField> = None;
    let mut records = Vec::new();
    let fail = |records: Vec<CycleRecord>, mesh: Mesh, e: Error| RunResult {
        records,
        termination: Termination::SolverFailure(e.to_string()),
        final_mesh: mesh,
        final_eta: Vec::new(),
        final_solution: None,
    };

    for cycle in 0.. {
        let mut times = PhaseTimes::default();
        let t = Instant::now();
        let solution = match problem.solve(&mesh, guess.as_ref()) {
            Ok(s) => s,
            Err(e) => return fail(records, mesh, e),
        };
        times.solve = t.elapsed().as_secs_f64();

        let t = Instant::now();
        let error = match problem.error(&mesh, &solution) {
            Ok(v) => v,
            Err(e) => return fail(records, mesh, e),
        };
        times.error = t.elapsed().as_secs_f64();

        let t = Instant::now();
        let eta = match build_topology(&mesh).and_then(|topo| kelly(&mesh, &topo, &solution.vector))
        {
            Ok(eta) => eta.values,
            Err(e) => return fail(records, mesh, e),
        };
        times.estimate = t.elapsed().as_secs_f64();

        let mut record = CycleRecord {
            cycle,
            n_nodes: mesh.n_nodes(),
            n_elements: mesh.n_elements(),
            error,
            n_marked: 0,
            eta: Summary::of(&eta),
            size: Summary::of(&mesh.element_sizes()),
            times,
        };
        let stop = if threshold.is_some_and(|th| error < th) {
            Some(Termination::Converged)
        } else if cycle >= max_cycles {
            Some(Termination::CycleCap)
        } else {
            None
        };
        if let Some(termination) = stop {
            observer(&record);
            records.push(record);
            return RunResult {
                records,
                termination,
                final_mesh: mesh,
                final_eta: eta,
                final_solution: Some(solution),
            };
        }

        let t = Instant::now();
        let marked = match &marker {
            Marker::Config(cfg) => match cfg.mark(&eta) {
                Ok(m) => m.indices,
                Err(e) => {
                    observer(&record);
                    records.push(record);
                    return fail(records, mesh, e);
                }
            },
            Marker::All => (0..mesh.n_elements()).collect(),
        };
        record.times.mark = t.elapsed().as_secs_f64();
        record.n_marked = marked.len();
        if marked.is_empty() {
            observer(&record);
            records.push(record);
            return RunResult {
                records,
                termination: Termination::EmptyMark,
                final_mesh: mesh,
                final_eta: eta,
                final_solution: Some(solution),
            };
        }

        let t = Instant::now();
        let refined = match refine(&mesh, &marked) {
            Ok(r) => r,
            Err(e) => {
                observer(&record);
                records.push(record);
                return fail(records, mesh, e);
            }
        };
        record.times.refine = t.elapsed().as_secs_f64();
        observer(&record);
        records.push(record);
        guess = warm_start.then(|| SolutionField {
            vector: refined.prolongate(&solution.vector, |a, b| {
                [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
            }),
            pressure: solution
                .pressure
                .as_ref()
                .map(|p| refined.prolongate(p, |a, b| 0.5 * (a + b))),
        });
        mesh = refined.mesh;
    }
    unreachable!("the cycle loop only exits by returning")
}
