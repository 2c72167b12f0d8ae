use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use vcsched::app::{self, BenchInput, Exit, InputPaths, Overrides};
use vcsched::simkit::{load_records, write_jsonl, write_means_csv, write_records_csv, Algorithm, SimError};

#[derive(Parser)]
#[command(name = "vcsched", version, about = "Hybrid offline/online graph-task scheduling for vehicular clouds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a task, service and model file and list every violation.
    Validate {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
    },
    /// Risk-aware offline search: print the pilot template and its expected cost.
    Offline {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        settings: Settings,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
    },
    /// Monte-Carlo benchmark on a scenario file or on a fixed instance.
    Bench {
        /// Scenario JSON (generated topologies).
        #[arg(long, conflicts_with_all = ["task", "service", "model"])]
        scenario: Option<PathBuf>,
        #[command(flatten)]
        inputs: OptInputs,
        #[command(flatten)]
        settings: Settings,
        /// Output directory for records.jsonl, summary.json, records.csv, means.csv and series.csv.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Without --out: records to stdout as CSV or JSON lines.
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Aggregate stored run records into plot-ready CSV.
    Report {
        /// records.jsonl written by bench.
        #[arg(long)]
        records: PathBuf,
        /// Output directory for means.csv and series.csv.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Without --out: means as CSV, or the full summary as JSON, to stdout.
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Json,
    Csv,
}

#[derive(Args)]
struct Inputs {
    #[arg(long)]
    task: PathBuf,
    #[arg(long)]
    service: PathBuf,
    #[arg(long)]
    model: PathBuf,
}

impl Inputs {
    fn paths(&self) -> InputPaths {
        InputPaths {
            task: self.task.clone(),
            service: self.service.clone(),
            model: self.model.clone(),
        }
    }
}

#[derive(Args)]
struct OptInputs {
    #[arg(long, requires_all = ["service", "model"])]
    task: Option<PathBuf>,
    #[arg(long, requires_all = ["task", "model"])]
    service: Option<PathBuf>,
    #[arg(long, requires_all = ["task", "service"])]
    model: Option<PathBuf>,
}

/// Flags shared by the scheduling subcommands. Unset flags fall back to
/// the --config file, then to built-in defaults.
#[derive(Args)]
struct Settings {
    /// JSON file with any of: seed, algorithms, events, simulations, xi,
    /// xi_prime, lambda_t, lambda_c, ets_cap, rts_restarts, naive, jobs.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated: phts, instaiss, hets, ets, tpts, dpts, rts.
    #[arg(long, value_delimiter = ',')]
    algos: Option<Vec<Algorithm>>,
    /// Scheduling events per simulation.
    #[arg(long)]
    events: Option<usize>,
    #[arg(long)]
    simulations: Option<usize>,
    /// Overrun probability bound (default 0.1).
    #[arg(long)]
    xi: Option<f64>,
    /// Contact shortfall probability bound (default 0.1).
    #[arg(long)]
    xi_prime: Option<f64>,
    /// Weight of completion time (default 0.5).
    #[arg(long)]
    lambda_t: Option<f64>,
    /// Weight of exchange cost (default 0.5).
    #[arg(long)]
    lambda_c: Option<f64>,
    /// Largest number of assignments ETS may enumerate.
    #[arg(long)]
    ets_cap: Option<u128>,
    #[arg(long)]
    rts_restarts: Option<usize>,
    /// Enumerate the Cartesian product instead of backtracking.
    #[arg(long)]
    naive: bool,
    /// Worker threads (default 1).
    #[arg(long)]
    jobs: Option<usize>,
}

impl Settings {
    fn resolve(&self) -> Result<Overrides, SimError> {
        let flags = Overrides {
            seed: self.seed,
            algorithms: self.algos.clone(),
            events: self.events,
            simulations: self.simulations,
            xi: self.xi,
            xi_prime: self.xi_prime,
            lambda_t: self.lambda_t,
            lambda_c: self.lambda_c,
            ets_cap: self.ets_cap,
            rts_restarts: self.rts_restarts,
            naive: self.naive.then_some(true),
            jobs: self.jobs,
        };
        let config = match &self.config {
            Some(p) => app::load_overrides(p)?,
            None => Overrides::default(),
        };
        Ok(flags.over(config))
    }
}

fn out_err(source: io::Error) -> SimError {
    SimError::Io {
        path: "<stdout>".into(),
        source,
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), SimError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| SimError::Internal(e.to_string()))?;
    writeln!(io::stdout(), "{text}").map_err(out_err)
}

fn run(cli: Cli) -> Result<Exit, SimError> {
    match cli.command {
        Command::Validate { inputs, format } => {
            let found = match app::check_inputs(&inputs.paths())? {
                Ok(_) => Vec::new(),
                Err(v) => v,
            };
            if format == Format::Json {
                print_json(&found)?;
            }
            if found.is_empty() {
                eprintln!("ok");
                Ok(Exit::Ok)
            } else {
                for v in &found {
                    eprintln!("{v}");
                }
                eprintln!("{} violation(s)", found.len());
                Ok(Exit::Input)
            }
        }
        Command::Offline {
            inputs,
            settings,
            format,
        } => {
            let ov = settings.resolve()?;
            let inst = app::load_inputs(&inputs.paths())?;
            let report = app::offline_report(&inst, &ov.risk(), &ov.weights(), ov.search())?;
            if format == Format::Json {
                print_json(&report)?;
            }
            eprintln!("{}", report.human());
            Ok(report.exit())
        }
        Command::Bench {
            scenario,
            inputs,
            settings,
            out,
            format,
        } => {
            let ov = settings.resolve()?;
            let input = match (scenario, inputs.task, inputs.service, inputs.model) {
                (Some(path), ..) => {
                    let (spec, task) = app::load_scenario(&path)?;
                    BenchInput::Scenario(spec, task)
                }
                (None, Some(task), Some(service), Some(model)) => {
                    BenchInput::Instance(app::load_inputs(&InputPaths { task, service, model })?)
                }
                _ => return Err(SimError::Spec("bench needs --scenario or --task, --service and --model".into())),
            };
            let result = app::bench(&input, &ov)?;
            match out {
                Some(dir) => {
                    for p in app::write_bench_outputs(&dir, &result)? {
                        eprintln!("wrote {}", p.display());
                    }
                }
                None => {
                    let stdout = io::stdout();
                    match format {
                        Format::Json => write_jsonl(&mut stdout.lock(), &result.records)?,
                        _ => write_records_csv(stdout.lock(), &result.records)?,
                    }
                }
            }
            eprint!("{}", app::human_summary(&result.summary));
            Ok(Exit::Ok)
        }
        Command::Report { records, out, format } => {
            let summary = app::report(&load_records(&records)?);
            match out {
                Some(dir) => {
                    for p in app::write_report_outputs(&dir, &summary)? {
                        eprintln!("wrote {}", p.display());
                    }
                }
                None => match format {
                    Format::Json => print_json(&summary)?,
                    _ => write_means_csv(io::stdout().lock(), &summary)?,
                },
            }
            eprint!("{}", app::human_summary(&summary));
            Ok(Exit::Ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exit = match run(cli) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("error: {e}");
            app::exit_for(&e)
        }
    };
    ExitCode::from(exit.code() as u8)
}
