//! Aggregation of run directories into summary tables.
//!
//! `table2` gives, per case and strategy, the parameter that reached the
//! threshold in the fewest cycles (ties go to the smaller parameter) and
//! that cycle count, or `-` when no run converged. `runs` lists every run.
//! Both styles also emit `convergence.csv`, the error history of every run
//! in long format for plotting.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use amr_core::marking::Strategy;

use crate::cases::CaseId;
use crate::error::{BenchError, Result};
use crate::output::{read_convergence, read_summary, RunSummary};

/// Strategy columns, in table order.
pub const COLUMNS: [Strategy; 5] = [
    Strategy::Doe,
    Strategy::Zsc,
    Strategy::Max,
    Strategy::Qua,
    Strategy::Iso,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Table2,
    Runs,
}

impl FromStr for Style {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table2" => Ok(Style::Table2),
            "runs" => Ok(Style::Runs),
            _ => Err(BenchError::Config(format!(
                "unknown report style {s:?}; valid: table2, runs"
            ))),
        }
    }
}

/// A run read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub summary: RunSummary,
    /// `(cycle, n_nodes, n_elements, error)` rows.
    pub history: Vec<(usize, usize, usize, f64)>,
}

fn strategy_rank(name: &str) -> usize {
    COLUMNS
        .iter()
        .position(|s| s.name() == name)
        .unwrap_or(COLUMNS.len())
}

fn param_key(p: &str) -> f64 {
    p.parse().unwrap_or(f64::INFINITY)
}

fn sort_runs(runs: &mut [RunRecord]) {
    runs.sort_by(|a, b| {
        let (a, b) = (&a.summary, &b.summary);
        (a.case as usize)
            .cmp(&(b.case as usize))
            .then(strategy_rank(&a.strategy).cmp(&strategy_rank(&b.strategy)))
            .then(param_key(&a.param).total_cmp(&param_key(&b.param)))
            .then(a.param.cmp(&b.param))
    });
}

fn find_summaries(dir: &Path, found: &mut Vec<PathBuf>) -> Result<()> {
    let entries = std::fs::read_dir(dir).map_err(|e| BenchError::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| BenchError::io(dir, e))?.path();
        if path.is_dir() {
            find_summaries(&path, found)?;
        } else if path.file_name().is_some_and(|n| n == "summary.json") {
            found.push(path);
        }
    }
    Ok(())
}

/// Reads every run below `dir`.
pub fn load_runs(dir: &Path) -> Result<Vec<RunRecord>> {
    let mut paths = Vec::new();
    find_summaries(dir, &mut paths)?;
    let mut runs = paths
        .iter()
        .map(|p| {
            let summary = read_summary(p)?;
            let cycles = p.with_file_name("cycles.csv");
            let history = if cycles.exists() {
                read_convergence(&cycles)?
            } else {
                Vec::new()
            };
            Ok(RunRecord { summary, history })
        })
        .collect::<Result<Vec<_>>>()?;
    sort_runs(&mut runs);
    Ok(runs)
}

/// The best converged run per case and strategy.
pub fn best_runs(runs: &[RunRecord]) -> Vec<(CaseId, [Option<Option<&RunSummary>>; 5])> {
    let mut cases: Vec<CaseId> = runs.iter().map(|r| r.summary.case).collect();
    cases.sort_by_key(|c| *c as usize);
    cases.dedup();
    cases
        .into_iter()
        .map(|case| {
            let cells = COLUMNS.map(|strategy| {
                let mut candidates = runs
                    .iter()
                    .map(|r| &r.summary)
                    .filter(|s| s.case == case && s.strategy == strategy.name())
                    .peekable();
                candidates.peek()?;
                Some(
                    candidates
                        .filter_map(|s| s.cycles.map(|c| (c, s)))
                        .min_by(|(ca, a), (cb, b)| {
                            ca.cmp(cb)
                                .then(param_key(&a.param).total_cmp(&param_key(&b.param)))
                        })
                        .map(|(_, s)| s),
                )
            });
            (case, cells)
        })
        .collect()
}

fn table2_markdown(runs: &[RunRecord]) -> String {
    let mut md = String::from("| case |");
    for s in COLUMNS {
        let p = match s {
            Strategy::Doe => "θ",
            Strategy::Zsc => "z*",
            Strategy::Max => "α",
            Strategy::Qua => "γ",
            Strategy::Iso => "c",
        };
        let _ = write!(
            md,
            " {} {p} | {} cycles |",
            s.name().to_uppercase(),
            s.name().to_uppercase()
        );
    }
    md.push_str("\n|---|");
    md.push_str(&"---:|".repeat(2 * COLUMNS.len()));
    md.push('\n');
    for (case, cells) in best_runs(runs) {
        let _ = write!(md, "| {case} |");
        for cell in cells {
            let (p, c) = table2_cell(cell);
            let _ = write!(md, " {p} | {c} |");
        }
        md.push('\n');
    }
    md
}

fn table2_cell(cell: Option<Option<&RunSummary>>) -> (String, String) {
    match cell {
        None => (String::new(), String::new()),
        Some(None) => ("-".into(), "-".into()),
        Some(Some(s)) => (
            s.param.clone(),
            s.cycles.map_or("-".into(), |c| c.to_string()),
        ),
    }
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e| BenchError::csv("<report>", e);
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(row).map_err(fail)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| BenchError::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| BenchError::Format(e.to_string()))
}

fn table2_csv(runs: &[RunRecord]) -> Result<String> {
    let mut header = vec!["case"];
    let names: Vec<(String, String)> = COLUMNS
        .iter()
        .map(|s| {
            (
                format!("{}_param", s.name()),
                format!("{}_cycles", s.name()),
            )
        })
        .collect();
    for (p, c) in &names {
        header.push(p);
        header.push(c);
    }
    let rows = best_runs(runs).into_iter().map(|(case, cells)| {
        let mut row = vec![case.name().to_string()];
        for cell in cells {
            let (p, c) = table2_cell(cell);
            row.extend([p, c]);
        }
        row
    });
    csv_string(&header, rows)
}

fn convergence_csv(runs: &[RunRecord]) -> Result<String> {
    let rows = runs.iter().flat_map(|r| {
        let s = &r.summary;
        r.history
            .iter()
            .map(move |&(cycle, nodes, elements, error)| {
                vec![
                    s.case.name().to_string(),
                    s.strategy.clone(),
                    s.param.clone(),
                    cycle.to_string(),
                    nodes.to_string(),
                    elements.to_string(),
                    format!("{error:e}"),
                ]
            })
    });
    csv_string(
        &[
            "case",
            "strategy",
            "param",
            "cycle",
            "n_nodes",
            "n_elements",
            "error",
        ],
        rows,
    )
}

fn runs_csv(runs: &[RunRecord]) -> Result<String> {
    let opt = |v: Option<usize>| v.map_or(String::new(), |v| v.to_string());
    let rows = runs.iter().map(|r| {
        let s = &r.summary;
        vec![
            s.case.name().to_string(),
            s.strategy.clone(),
            s.param.clone(),
            s.cycles.map_or("DNF".into(), |c| c.to_string()),
            s.termination.clone(),
            opt(s.final_nodes),
            opt(s.final_elements),
            s.final_error.map_or(String::new(), |e| format!("{e:e}")),
        ]
    });
    csv_string(
        &[
            "case",
            "strategy",
            "param",
            "cycles",
            "termination",
            "final_nodes",
            "final_elements",
            "final_error",
        ],
        rows,
    )
}

fn runs_markdown(runs: &[RunRecord]) -> String {
    let mut md = String::from("| case | strategy | param | cycles | termination | nodes | error |\n|---|---|---:|---:|---|---:|---:|\n");
    for r in runs {
        let s = &r.summary;
        let _ = writeln!(
            md,
            "| {} | {} | {} | {} | {} | {} | {} |",
            s.case,
            s.strategy.to_uppercase(),
            s.param,
            s.cycles.map_or("DNF".into(), |c| c.to_string()),
            s.termination,
            s.final_nodes.map_or(String::new(), |n| n.to_string()),
            s.final_error.map_or(String::new(), |e| format!("{e:.4e}")),
        );
    }
    md
}

/// Renders the report files as `(file name, contents)`.
pub fn render(runs: &[RunRecord], style: Style) -> Result<Vec<(String, String)>> {
    let mut files = match style {
        Style::Table2 => vec![
            ("table2.md".to_string(), table2_markdown(runs)),
            ("table2.csv".to_string(), table2_csv(runs)?),
        ],
        Style::Runs => vec![
            ("runs.md".to_string(), runs_markdown(runs)),
            ("runs.csv".to_string(), runs_csv(runs)?),
        ],
    };
    files.push(("convergence.csv".into(), convergence_csv(runs)?));
    Ok(files)
}

/// Reads the runs below `input` and writes the report files into `out`.
pub fn report(input: &Path, out: &Path, style: Style) -> Result<Vec<PathBuf>> {
    let runs = load_runs(input)?;
    if runs.is_empty() {
        return Err(BenchError::Config(format!(
            "no runs found below {}",
            input.display()
        )));
    }
    std::fs::create_dir_all(out).map_err(|e| BenchError::io(out, e))?;
    render(&runs, style)?
        .into_iter()
        .map(|(name, text)| {
            let path = out.join(name);
            std::fs::write(&path, text).map_err(|e| BenchError::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::output::SCHEMA_VERSION;

    fn run(case: CaseId, strategy: &str, param: &str, cycles: Option<usize>) -> RunRecord {
        RunRecord {
            summary: RunSummary {
                schema_version: SCHEMA_VERSION,
                case,
                strategy: strategy.into(),
                param: param.into(),
                threshold: 0.01,
                max_cycles: 40,
                warm_start: true,
                seed: 42,
                termination: if cycles.is_some() {
                    "converged"
                } else {
                    "cycle-cap"
                }
                .into(),
                message: None,
                converged: cycles.is_some(),
                cycles,
                n_records: cycles.unwrap_or(40) + 1,
                final_nodes: Some(100),
                final_elements: Some(180),
                final_error: Some(0.009),
                wall_time: 1.0,
            },
            history: vec![(0, 10, 12, 0.5), (1, 20, 30, 0.009)],
        }
    }

    #[test]
    fn best_parameter_prefers_fewest_cycles_then_smallest() {
        let runs = vec![
            run(CaseId::Sc1, "doe", "0.9", Some(7)),
            run(CaseId::Sc1, "doe", "0.5", Some(9)),
            run(CaseId::Sc1, "qua", "0.2", Some(6)),
            run(CaseId::Sc1, "qua", "0.1", Some(6)),
            run(CaseId::Sc0, "max", "0.5", None),
        ];
        let best = best_runs(&runs);
        assert_eq!(best[0].0, CaseId::Sc0);
        assert_eq!(best[0].1[2], Some(None));
        assert_eq!(best[0].1[0], None);
        let sc1 = &best[1].1;
        assert_eq!(sc1[0].unwrap().unwrap().param, "0.9");
        assert_eq!(sc1[3].unwrap().unwrap().param, "0.1");
    }

    #[test]
    fn table_layout() {
        let runs = vec![
            run(CaseId::Sc0, "max", "0.5", None),
            run(CaseId::Sc0, "qua", "0.6", Some(11)),
        ];
        let files = render(&runs, Style::Table2).unwrap();
        let md = &files[0].1;
        assert!(md.starts_with("| case | DOE θ | DOE cycles | ZSC z* |"));
        assert!(md.contains("| SC0 |  |  |  |  | - | - | 0.6 | 11 |  |  |"));
        let csv = &files[1].1;
        assert_eq!(csv.lines().next().unwrap(), "case,doe_param,doe_cycles,zsc_param,zsc_cycles,max_param,max_cycles,qua_param,qua_cycles,iso_param,iso_cycles");
        assert_eq!(files[2].1.lines().count(), 5);
    }
}
