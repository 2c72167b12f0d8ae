//! The flows behind each command-line subcommand. The binary only parses
//! flags, calls into here and prints.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cost::{CostBreakdown, CostWeights, StatModel};
use crate::graph::{ServiceGraph, TaskGraph};
use crate::offline::{ra_pilot_iss, RiskConfig};
use crate::search::{Decision, Infeasibility, SearchOptions};
use crate::simkit::{
    builtin_task_graph, model_from_file, read_json, run_monte_carlo, run_on_instance, save_means_csv, save_records,
    save_records_csv, save_series_csv, save_summary, service_from_file, summarize_metrics, task_from_file, Algorithm,
    EventRecord, Label, Labels, ModelFile, RunOutput, RunSummary, ScenarioSpec, ServiceFile, SimError, TaskFile,
    TaskRef, Violation,
};

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Infeasible = 1,
    Input = 2,
    Internal = 3,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }
}

pub fn exit_for(err: &SimError) -> Exit {
    match err {
        SimError::Internal(_) => Exit::Internal,
        _ => Exit::Input,
    }
}

/// Paths of a task, service and model file.
#[derive(Debug, Clone)]
pub struct InputPaths {
    pub task: PathBuf,
    pub service: PathBuf,
    pub model: PathBuf,
}

/// A parsed and checked instance with the file labels.
#[derive(Debug, Clone)]
pub struct Instance {
    pub task: TaskGraph,
    pub task_labels: Labels,
    pub serv: ServiceGraph,
    pub serv_labels: Labels,
    pub model: StatModel,
}

fn name(p: &Path) -> String {
    p.display().to_string()
}

/// Parses all three files and collects every violation. Parse and I/O
/// errors come back as `Err`; an instance with violations as `Ok(Err(..))`.
pub fn check_inputs(paths: &InputPaths) -> Result<Result<Instance, Vec<Violation>>, SimError> {
    let tf: TaskFile = read_json(&paths.task)?;
    let sf: ServiceFile = read_json(&paths.service)?;
    let mf: ModelFile = read_json(&paths.model)?;
    let mut found = Vec::new();
    let task = task_from_file(&tf, &name(&paths.task)).map_err(|v| found.extend(v)).ok();
    let serv = match service_from_file(&sf, &name(&paths.service)) {
        Ok(s) => Some(s),
        Err(v) => {
            found.extend(v);
            None
        }
    };
    let model = match &serv {
        Some((s, labels)) => match model_from_file(&mf, s, labels, &name(&paths.model)) {
            Ok(m) => Some(m),
            Err(v) => {
                found.extend(v);
                None
            }
        },
        None => None,
    };
    match (task, serv, model) {
        (Some((task, task_labels)), Some((serv, serv_labels)), Some(model)) if found.is_empty() => Ok(Ok(Instance {
            task,
            task_labels,
            serv,
            serv_labels,
            model,
        })),
        _ => Ok(Err(found)),
    }
}

pub fn load_inputs(paths: &InputPaths) -> Result<Instance, SimError> {
    check_inputs(paths)?.map_err(SimError::Invalid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OfflineStatus {
    Selected,
    Infeasible,
}

/// Result of the offline search, with SP and component labels as in the
/// input files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfflineReport {
    pub status: OfflineStatus,
    /// Hosting SP of each component, in component order.
    pub template: Option<Vec<Label>>,
    pub expected: Option<CostBreakdown>,
    pub reason: Option<Infeasibility>,
    /// Labels of components that lost every candidate.
    pub components_without_candidates: Vec<Label>,
}

impl OfflineReport {
    pub fn exit(&self) -> Exit {
        match self.status {
            OfflineStatus::Selected => Exit::Ok,
            OfflineStatus::Infeasible => Exit::Infeasible,
        }
    }

    pub fn human(&self) -> String {
        match self.status {
            OfflineStatus::Selected => {
                let tpl: Vec<String> = self.template.iter().flatten().map(|l| l.to_string()).collect();
                let c = self.expected.expect("selected reports carry a cost");
                format!(
                    "template [{}]\nexpected CF {} (TCT {} s, DEC {})",
                    tpl.join(", "),
                    c.cf,
                    c.tct,
                    c.dec
                )
            }
            OfflineStatus::Infeasible => {
                let mut s = format!("infeasible: {}", self.reason.as_ref().expect("infeasible reports carry a reason"));
                if !self.components_without_candidates.is_empty() {
                    let names: Vec<String> = self.components_without_candidates.iter().map(|l| l.to_string()).collect();
                    s.push_str(&format!("\ncomponents without candidates: {}", names.join(", ")));
                }
                s
            }
        }
    }
}

pub fn offline_report(
    inst: &Instance,
    risk: &RiskConfig,
    w: &CostWeights,
    opts: SearchOptions,
) -> Result<OfflineReport, SimError> {
    let decision = ra_pilot_iss(&inst.task, &inst.serv, &inst.model, risk, w, opts)?;
    Ok(match decision {
        Decision::Selected { template, cost } => OfflineReport {
            status: OfflineStatus::Selected,
            template: Some(template.assignment().iter().map(|&m| inst.serv_labels.name(m).clone()).collect()),
            expected: Some(cost),
            reason: None,
            components_without_candidates: Vec::new(),
        },
        Decision::Infeasible(reason) => {
            let lost = match &reason {
                Infeasibility::NoCandidates { components } => {
                    components.iter().map(|&n| inst.task_labels.name(n).clone()).collect()
                }
                Infeasibility::NoTemplate => Vec::new(),
            };
            OfflineReport {
                status: OfflineStatus::Infeasible,
                template: None,
                expected: None,
                reason: Some(reason),
                components_without_candidates: lost,
            }
        }
    })
}

/// Settings that can come from a config file or from flags. Unset fields
/// leave the lower layer alone.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub algorithms: Option<Vec<Algorithm>>,
    pub events: Option<usize>,
    pub simulations: Option<usize>,
    pub xi: Option<f64>,
    pub xi_prime: Option<f64>,
    pub lambda_t: Option<f64>,
    pub lambda_c: Option<f64>,
    pub ets_cap: Option<u128>,
    pub rts_restarts: Option<usize>,
    pub naive: Option<bool>,
    pub jobs: Option<usize>,
}

impl Overrides {
    /// `self` wins over `lower` field by field.
    pub fn over(self, lower: Overrides) -> Overrides {
        Overrides {
            seed: self.seed.or(lower.seed),
            algorithms: self.algorithms.or(lower.algorithms),
            events: self.events.or(lower.events),
            simulations: self.simulations.or(lower.simulations),
            xi: self.xi.or(lower.xi),
            xi_prime: self.xi_prime.or(lower.xi_prime),
            lambda_t: self.lambda_t.or(lower.lambda_t),
            lambda_c: self.lambda_c.or(lower.lambda_c),
            ets_cap: self.ets_cap.or(lower.ets_cap),
            rts_restarts: self.rts_restarts.or(lower.rts_restarts),
            naive: self.naive.or(lower.naive),
            jobs: self.jobs.or(lower.jobs),
        }
    }

    pub fn apply(&self, spec: &mut ScenarioSpec) {
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        if let Some(e) = self.events {
            spec.n_events = e;
        }
        if let Some(s) = self.simulations {
            spec.n_simulations = s;
        }
        if let Some(x) = self.xi {
            spec.risk.xi = x;
        }
        if let Some(x) = self.xi_prime {
            spec.risk.xi_prime = x;
        }
        if let Some(l) = self.lambda_t {
            spec.weights.lambda_t = l;
        }
        if let Some(l) = self.lambda_c {
            spec.weights.lambda_c = l;
        }
        if let Some(c) = self.ets_cap {
            spec.baselines.ets_cap = c;
        }
        if let Some(k) = self.rts_restarts {
            spec.baselines.rts_restarts = k;
        }
        if let Some(n) = self.naive {
            spec.search.naive = n;
        }
    }

    pub fn risk(&self) -> RiskConfig {
        let d = RiskConfig::default();
        RiskConfig {
            xi: self.xi.unwrap_or(d.xi),
            xi_prime: self.xi_prime.unwrap_or(d.xi_prime),
        }
    }

    pub fn weights(&self) -> CostWeights {
        let d = CostWeights::default();
        CostWeights {
            lambda_t: self.lambda_t.unwrap_or(d.lambda_t),
            lambda_c: self.lambda_c.unwrap_or(d.lambda_c),
        }
    }

    pub fn search(&self) -> SearchOptions {
        SearchOptions {
            naive: self.naive.unwrap_or(false),
            ..SearchOptions::default()
        }
    }

    pub fn algorithms_or_default(&self) -> Vec<Algorithm> {
        self.algorithms
            .clone()
            .unwrap_or_else(|| vec![Algorithm::Phts, Algorithm::Instaiss, Algorithm::Tpts, Algorithm::Dpts, Algorithm::Rts])
    }

    pub fn jobs_or_default(&self) -> usize {
        self.jobs.unwrap_or(1)
    }
}

pub fn load_overrides(path: &Path) -> Result<Overrides, SimError> {
    read_json(path)
}

/// Reads a scenario file and its task graph. A task path is resolved
/// against the scenario file's directory.
pub fn load_scenario(path: &Path) -> Result<(ScenarioSpec, TaskGraph), SimError> {
    let spec: ScenarioSpec = read_json(path)?;
    let task = match &spec.task {
        TaskRef::Builtin(id) => builtin_task_graph(*id)?,
        TaskRef::File(p) => {
            let full = if p.is_absolute() {
                p.clone()
            } else {
                path.parent().unwrap_or(Path::new(".")).join(p)
            };
            let tf: TaskFile = read_json(&full)?;
            task_from_file(&tf, &name(&full)).map_err(SimError::Invalid)?.0
        }
    };
    Ok((spec, task))
}

/// What a benchmark runs on.
pub enum BenchInput {
    Scenario(ScenarioSpec, TaskGraph),
    Instance(Instance),
}

pub fn bench(input: &BenchInput, ov: &Overrides) -> Result<RunOutput, SimError> {
    let algos = ov.algorithms_or_default();
    match input {
        BenchInput::Scenario(spec, task) => {
            let mut spec = spec.clone();
            ov.apply(&mut spec);
            run_monte_carlo(&spec, task, &algos, ov.jobs_or_default())
        }
        BenchInput::Instance(inst) => {
            let mut spec = ScenarioSpec::new(inst.serv.len(), inst.serv.edges().len(), TaskRef::Builtin(0));
            ov.apply(&mut spec);
            run_on_instance(&spec, &inst.task, &inst.serv, &inst.model, &algos, ov.jobs_or_default())
        }
    }
}

pub const RECORDS_FILE: &str = "records.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";
pub const RECORDS_CSV: &str = "records.csv";
pub const MEANS_CSV: &str = "means.csv";
pub const SERIES_CSV: &str = "series.csv";

/// Writes records (JSON lines and CSV), the summary and its CSVs under `dir`.
pub fn write_bench_outputs(dir: &Path, out: &RunOutput) -> Result<Vec<PathBuf>, SimError> {
    let paths: Vec<PathBuf> = [RECORDS_FILE, SUMMARY_FILE, RECORDS_CSV, MEANS_CSV, SERIES_CSV]
        .iter()
        .map(|f| dir.join(f))
        .collect();
    save_records(&paths[0], &out.records)?;
    save_summary(&paths[1], &out.summary)?;
    save_records_csv(&paths[2], &out.records)?;
    save_means_csv(&paths[3], &out.summary)?;
    save_series_csv(&paths[4], &out.summary)?;
    Ok(paths)
}

/// Summary of stored records, algorithms in the order they first appear.
pub fn report(records: &[EventRecord]) -> RunSummary {
    let mut order: Vec<Algorithm> = Vec::new();
    for r in records {
        if !order.contains(&r.algo) {
            order.push(r.algo);
        }
    }
    summarize_metrics(records, &order)
}

pub fn write_report_outputs(dir: &Path, summary: &RunSummary) -> Result<Vec<PathBuf>, SimError> {
    let means = dir.join(MEANS_CSV);
    let series = dir.join(SERIES_CSV);
    save_means_csv(&means, summary)?;
    save_series_csv(&series, summary)?;
    Ok(vec![means, series])
}

pub fn human_summary(summary: &RunSummary) -> String {
    let fmt = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into());
    let mut s = format!(
        "{:<9} {:>7} {:>7} {:>10} {:>10} {:>10} {:>12} {:>6} {:>6}\n",
        "algo", "events", "ok", "CF", "TCT", "DEC", "RT(s)", "reuse", "fail"
    );
    for a in &summary.algorithms {
        s.push_str(&format!(
            "{:<9} {:>7} {:>7} {:>10} {:>10} {:>10} {:>12.3e} {:>6.3} {:>6.3}\n",
            a.algo.name(),
            a.n_events,
            a.n_success,
            fmt(a.mean_cf),
            fmt(a.mean_tct),
            fmt(a.mean_dec),
            a.mean_rt,
            a.reuse_rate,
            a.failure_rate
        ));
    }
    s
}
