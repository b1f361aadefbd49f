use std::path::PathBuf;
use std::process::ExitCode;

use amr_bench::config::{Overrides, ParamList, ParamValue};
use amr_bench::error::{BenchError, Result};
use amr_bench::reference;
use amr_bench::report::{self, Style};
use amr_bench::runner::{run_case, sweep, write_sweep, Benchmark};
use clap::{Args, Parser, Subcommand};

/// Adaptive mesh refinement benchmarks.
#[derive(Debug, Parser)]
#[command(name = "amr-bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one case with one marking configuration.
    Run {
        #[command(flatten)]
        common: Common,
        /// Marking parameter (ISO also accepts `auto`).
        #[arg(long)]
        param: Option<String>,
    },
    /// Run one case over a list of marking parameters.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `start:stop:step` or a comma separated list; defaults to the strategy's grid.
        #[arg(long)]
        params: Option<String>,
        /// Runs executed in parallel.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Solve a fluid case on a uniformly refined mesh and store it as reference.
    BuildReference {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        case: Option<String>,
        /// Uniform refinements of the initial mesh.
        #[arg(long)]
        level: Option<usize>,
        /// Reference directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        speed: Option<f64>,
    },
    /// Summarize result directories.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        /// Output directory; defaults to the input directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// `table2` or `runs`.
        #[arg(long, default_value = "table2")]
        style: String,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// TOML file with default settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    max_cycles: Option<usize>,
    /// Solve every cycle from zero instead of the interpolated previous solution.
    #[arg(long)]
    cold_start: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Results directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    reference_dir: Option<PathBuf>,
    #[arg(long)]
    reference_level: Option<usize>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    speed: Option<f64>,
}

impl Common {
    fn layered(self, extra: Overrides) -> Result<Overrides> {
        let file = match &self.config {
            Some(path) => Overrides::from_file(path)?,
            None => Overrides::default(),
        };
        let flags = Overrides {
            case: self.case,
            strategy: self.strategy,
            threshold: self.threshold,
            max_cycles: self.max_cycles,
            warm_start: self.cold_start.then_some(false),
            seed: self.seed,
            out: self.out,
            reference_dir: self.reference_dir,
            reference_level: self.reference_level,
            mu: self.mu,
            speed: self.speed,
            ..extra
        };
        Ok(flags.over(file))
    }
}

fn execute(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run { common, param } => {
            let settings = common
                .layered(Overrides {
                    param: param.map(ParamValue::Text),
                    ..Default::default()
                })?
                .resolve()?;
            let config = settings.run_config()?;
            let bench = Benchmark::prepare(
                settings.case,
                settings.flow,
                &settings.reference_dir,
                settings.reference_level,
            )?;
            let outcome = run_case(&bench, &config, settings.seed, &settings.out, |r| {
                eprintln!(
                    "cycle {:>3}  nodes {:>8}  elements {:>8}  error {:.4e}  marked {:>7}",
                    r.cycle, r.n_nodes, r.n_elements, r.error, r.n_marked
                );
            })?;
            let json = serde_json::to_string_pretty(&outcome.summary).map_err(|source| {
                BenchError::Json {
                    path: outcome.dir.join("summary.json"),
                    source,
                }
            })?;
            println!("{json}");
            let failed = outcome.summary.termination == "solver-failure";
            Ok(if failed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Sweep {
            common,
            params,
            workers,
        } => {
            let settings = common
                .layered(Overrides {
                    params: params.map(ParamList::Spec),
                    workers,
                    ..Default::default()
                })?
                .resolve()?;
            let configs = settings.sweep_configs()?;
            let bench = Benchmark::prepare(
                settings.case,
                settings.flow,
                &settings.reference_dir,
                settings.reference_level,
            )?;
            let rows = sweep(
                &bench,
                &configs,
                settings.seed,
                &settings.out,
                settings.workers,
            )?;
            let strategy = settings.strategy()?;
            let path = settings
                .out
                .join(settings.case.name())
                .join(strategy.name())
                .join("sweep.csv");
            write_sweep(&path, &rows)?;
            println!(
                "{:<5} {:<4} {:>6} {:>7}  termination",
                "case", "strat", "param", "cycles"
            );
            for r in &rows {
                let cycles = r.cycles.map_or("DNF".into(), |c| c.to_string());
                println!(
                    "{:<5} {:<4} {:>6} {:>7}  {}",
                    r.case.name(),
                    r.strategy,
                    r.param,
                    cycles,
                    r.termination
                );
            }
            println!("wrote {}", path.display());
            let failed = rows
                .iter()
                .any(|r| r.termination == "error" || r.termination == "solver-failure");
            Ok(if failed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::BuildReference {
            config,
            case,
            level,
            out,
            mu,
            speed,
        } => {
            let file = match &config {
                Some(path) => Overrides::from_file(path)?,
                None => Overrides::default(),
            };
            let flags = Overrides {
                case,
                reference_level: level,
                reference_dir: out,
                mu,
                speed,
                ..Default::default()
            };
            let settings = flags.over(file).resolve()?;
            if !settings.case.is_fluid() {
                return Err(BenchError::Config(format!(
                    "{} is a solid case; references exist for FC0 and FC1",
                    settings.case
                )));
            }
            let r = reference::build(settings.case, settings.reference_level, settings.flow)?;
            let path = settings.reference_dir.join(reference::file_name(
                settings.case,
                settings.reference_level,
            ));
            r.save(&path)?;
            println!(
                "wrote {} ({} nodes, {} elements)",
                path.display(),
                r.mesh.n_nodes(),
                r.mesh.n_elements()
            );
            if let Some(d) = r.meta.coarser_difference {
                println!("relative L2 difference to the level below: {d:.4e}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { input, out, style } => {
            let style: Style = style.parse()?;
            let out = out.unwrap_or_else(|| input.clone());
            for path in report::report(&input, &out, style)? {
                println!("wrote {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
