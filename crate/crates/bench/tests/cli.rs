use std::path::Path;
use std::process::{Command, Output};

use amr_bench::output::{read_summary, CYCLES_HEADER};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amr-bench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn validate(summary: &Path) {
    let schema_text = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/schema/summary.schema.json"
    ))
    .unwrap();
    let schema: serde_json::Value = serde_json::from_str(&schema_text).unwrap();
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(summary).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(&doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{}: {errors:?}", summary.display());
}

#[test]
fn run_writes_result_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = bench(&[
        "run",
        "--case",
        "SC1",
        "--strategy",
        "doe",
        "--param",
        "0.9",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let printed: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(printed["converged"], true);
    assert!(printed["cycles"].as_u64().unwrap() >= 1);
    assert!(printed["final_error"].as_f64().unwrap() < 0.01);

    let run = dir.path().join("SC1/doe/0.9");
    let summary = read_summary(&run.join("summary.json")).unwrap();
    assert_eq!(summary.cycles.map(|c| c as u64), printed["cycles"].as_u64());
    validate(&run.join("summary.json"));

    let cycles = std::fs::read_to_string(run.join("cycles.csv")).unwrap();
    let mut lines = cycles.lines();
    assert_eq!(lines.next().unwrap(), CYCLES_HEADER.join(","));
    assert_eq!(lines.count(), summary.n_records);
    let dist = std::fs::read_to_string(run.join("dist_final.csv")).unwrap();
    assert_eq!(dist.lines().next().unwrap(), "element,size,eta");
    assert_eq!(dist.lines().count() - 1, summary.final_elements.unwrap());
}

#[test]
fn sweep_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");
    let out_s = out.to_str().unwrap();
    let o = bench(&[
        "sweep",
        "--case",
        "SC1",
        "--strategy",
        "qua",
        "--params",
        "0.1:0.3:0.1",
        "--out",
        out_s,
        "--workers",
        "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let sweep = std::fs::read_to_string(out.join("SC1/qua/sweep.csv")).unwrap();
    let rows: Vec<&str> = sweep.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("SC1,qua,0.1,"));
    assert!(rows[2].starts_with("SC1,qua,0.3,"));
    for p in ["0.1", "0.2", "0.3"] {
        validate(&out.join("SC1/qua").join(p).join("summary.json"));
    }

    let o = bench(&[
        "run",
        "--case",
        "SC1",
        "--strategy",
        "max",
        "--param",
        "0.5",
        "--max-cycles",
        "2",
        "--out",
        out_s,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    let report = dir.path().join("report");
    let args = [
        "report",
        "--in",
        out_s,
        "--out",
        report.to_str().unwrap(),
        "--style",
        "table2",
    ];
    let o = bench(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = std::fs::read_to_string(report.join("table2.md")).unwrap();
    let row = table.lines().find(|l| l.starts_with("| SC1 |")).unwrap();
    let cells: Vec<&str> = row.split('|').map(str::trim).collect();
    // leading empty cell, case, then (param, cycles) for DOE, ZSC, MAX, QUA, ISO
    assert_eq!(&cells[6..8], ["-", "-"]);
    assert_eq!(cells[8], "0.1");
    let first = std::fs::read(report.join("table2.csv")).unwrap();
    let convergence = std::fs::read(report.join("convergence.csv")).unwrap();
    assert!(bench(&args).status.success());
    assert_eq!(std::fs::read(report.join("table2.csv")).unwrap(), first);
    assert_eq!(
        std::fs::read(report.join("convergence.csv")).unwrap(),
        convergence
    );

    let o = bench(&[
        "report",
        "--in",
        out_s,
        "--out",
        report.to_str().unwrap(),
        "--style",
        "runs",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let runs = std::fs::read_to_string(report.join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 5);
    assert!(runs.contains("SC1,max,0.5,DNF,cycle-cap"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    let out = dir.path().join("out");
    std::fs::write(
        &config,
        format!(
            "case = \"SC1\"\nstrategy = \"qua\"\nparam = 0.1\nmax_cycles = 1\nout = {:?}\n",
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let o = bench(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--max-cycles",
        "3",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = read_summary(&out.join("SC1/qua/0.1/summary.json")).unwrap();
    assert_eq!(s.max_cycles, 3);
    assert_eq!(s.seed, 42);
}

#[test]
fn bad_names_exit_with_config_error() {
    let o = bench(&[
        "run",
        "--case",
        "SC7",
        "--strategy",
        "doe",
        "--param",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("SC0, SC1, FC0, FC1"), "{}", stderr(&o));

    let o = bench(&["sweep", "--case", "SC1", "--strategy", "best"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("max, qua, doe, zsc, iso"),
        "{}",
        stderr(&o)
    );

    let o = bench(&[
        "run",
        "--case",
        "SC1",
        "--strategy",
        "doe",
        "--param",
        "1.5",
    ]);
    assert_eq!(o.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "case = \"SC1\"\nmax_cycle = 3\n").unwrap();
    let o = bench(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_reference_names_the_build_command() {
    let dir = tempfile::tempdir().unwrap();
    let refs = dir.path().to_str().unwrap();
    let o = bench(&[
        "run",
        "--case",
        "FC0",
        "--strategy",
        "qua",
        "--param",
        "0.1",
        "--reference-dir",
        refs,
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(
        err.contains("amr-bench build-reference --case FC0 --level 4"),
        "{err}"
    );
}

#[test]
fn reference_build_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let refs = dir.path().to_str().unwrap();
    let args = [
        "build-reference",
        "--case",
        "FC0",
        "--level",
        "1",
        "--out",
        refs,
    ];
    let o = bench(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let path = dir.path().join("fc0-L1.ref");
    let first = std::fs::read(&path).unwrap();
    assert!(first.starts_with(b"amr-reference 1\ncase FC0\nlevel 1\n"));
    assert!(bench(&args).status.success());
    assert_eq!(std::fs::read(&path).unwrap(), first);

    let o = bench(&[
        "build-reference",
        "--case",
        "SC0",
        "--level",
        "1",
        "--out",
        refs,
    ]);
    assert_eq!(o.status.code(), Some(2));

    let o = bench(&[
        "run",
        "--case",
        "FC0",
        "--strategy",
        "qua",
        "--param",
        "0.1",
        "--reference-dir",
        refs,
        "--reference-level",
        "1",
        "--max-cycles",
        "1",
        "--out",
        refs,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
}
