use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::{generate_service_graph, realize_scenario, ScenarioSpec, SCHEMA_VERSION};
use super::summary::{summarize_metrics, RunSummary};
use super::SimError;
use crate::baselines::{dpts, ets, rts, tpts};
use crate::cost::{Realization, StatModel};
use crate::graph::{ServiceGraph, TaskGraph, Template};
use crate::offline::ra_pilot_iss;
use crate::online::{hybrid_schedule, hybrid_schedule_with, run_timed, MonotonicClock, Source};
use crate::online::te_insta_iss;
use crate::search::{Decision, ScheduleError};
use crate::stochastic::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Phts,
    Instaiss,
    Hets,
    Ets,
    Tpts,
    Dpts,
    Rts,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Phts,
        Algorithm::Instaiss,
        Algorithm::Hets,
        Algorithm::Ets,
        Algorithm::Tpts,
        Algorithm::Dpts,
        Algorithm::Rts,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Phts => "phts",
            Algorithm::Instaiss => "instaiss",
            Algorithm::Hets => "hets",
            Algorithm::Ets => "ets",
            Algorithm::Tpts => "tpts",
            Algorithm::Dpts => "dpts",
            Algorithm::Rts => "rts",
        }
    }

    /// Uses the offline template.
    pub fn is_hybrid(&self) -> bool {
        matches!(self, Algorithm::Phts | Algorithm::Hets)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                SimError::Spec(format!(
                    "unknown algorithm {s:?} (expected one of ets, tpts, dpts, rts, instaiss, phts, hets)"
                ))
            })
    }
}

/// Outcome of one algorithm at one scheduling event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub schema_version: u32,
    pub simulation: usize,
    /// Event index within the simulation.
    pub event: usize,
    pub algo: Algorithm,
    pub source: Source,
    pub cf: Option<f64>,
    pub tct: Option<f64>,
    pub dec: Option<f64>,
    pub rt_seconds: f64,
    pub template: Option<Template>,
}

impl EventRecord {
    /// Index across simulations: `simulation * n_events + event`.
    pub fn global_event(&self, n_events: usize) -> usize {
        self.simulation * n_events + self.event
    }
}

/// One simulation: topology, frozen model and offline template.
pub struct Simulation {
    pub index: usize,
    pub serv: ServiceGraph,
    pub model: StatModel,
    pub a_off: Decision,
}

impl Simulation {
    pub fn build(spec: &ScenarioSpec, task: &TaskGraph, index: usize) -> Result<Self, SimError> {
        let rng = SeededRng::new(spec.seed).child(index as u64);
        let serv = generate_service_graph(spec.n_sps, spec.n_edges, &mut rng.child(0))?;
        let model = spec.stat_params.draw_model(&serv, &mut rng.child(1));
        Self::from_instance(spec, task, serv, model, index)
    }

    /// A simulation on a given topology and model; only the per-event
    /// streams depend on `index`.
    pub fn from_instance(
        spec: &ScenarioSpec,
        task: &TaskGraph,
        serv: ServiceGraph,
        model: StatModel,
        index: usize,
    ) -> Result<Self, SimError> {
        let a_off = ra_pilot_iss(task, &serv, &model, &spec.risk, &spec.weights, spec.search)?;
        Ok(Self {
            index,
            serv,
            model,
            a_off,
        })
    }

    fn rng(&self, seed: u64) -> SeededRng {
        SeededRng::new(seed).child(self.index as u64)
    }

    /// The realization of event `e`, identical for every algorithm.
    pub fn realization(&self, spec: &ScenarioSpec, e: usize) -> Realization {
        realize_scenario(&self.model, &mut self.rng(spec.seed).child(2).child(e as u64))
    }

    /// Runs every algorithm on event `e`'s realization, in list order.
    pub fn run_event(
        &self,
        spec: &ScenarioSpec,
        task: &TaskGraph,
        algorithms: &[Algorithm],
        e: usize,
    ) -> Result<Vec<EventRecord>, SimError> {
        let real = self.realization(spec, e);
        let clock = MonotonicClock::new();
        let w = &spec.weights;
        let serv = &self.serv;
        let a_off = self.a_off.template();
        let mut out = Vec::with_capacity(algorithms.len());
        for &algo in algorithms {
            let outcome = match algo {
                Algorithm::Phts => hybrid_schedule(task, serv, a_off, &real, w, &clock, spec.search)?,
                Algorithm::Hets => hybrid_schedule_with(task, serv, a_off, &real, w, &clock, || {
                    ets(task, serv, &real, w, spec.baselines.ets_cap)
                })?,
                Algorithm::Instaiss => run_timed(&clock, || te_insta_iss(task, serv, &real, w, spec.search))?,
                Algorithm::Ets => run_timed(&clock, || ets(task, serv, &real, w, spec.baselines.ets_cap))?,
                Algorithm::Tpts => run_timed(&clock, || tpts(task, serv, &real, w))?,
                Algorithm::Dpts => run_timed(&clock, || dpts(task, serv, &real, w))?,
                Algorithm::Rts => {
                    let mut rng = self.rng(spec.seed).child(3).child(e as u64);
                    run_timed(&clock, || rts(task, serv, &real, w, spec.baselines.rts_restarts, &mut rng))?
                }
            };
            out.push(EventRecord {
                schema_version: SCHEMA_VERSION,
                simulation: self.index,
                event: e,
                algo,
                source: outcome.source,
                cf: outcome.cost.map(|c| c.cf),
                tct: outcome.cost.map(|c| c.tct),
                dec: outcome.cost.map(|c| c.dec),
                rt_seconds: outcome.decision_time,
                template: outcome.template,
            });
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub records: Vec<EventRecord>,
    pub summary: RunSummary,
    /// Offline template per simulation.
    pub offline: Vec<Option<Template>>,
}

/// Monte-Carlo benchmark: per simulation a fresh topology, model and
/// offline template; per event one realization shared by every algorithm.
/// Events run on a pool of `jobs` threads; records come back sorted by
/// (simulation, event, algorithm list order).
pub fn run_monte_carlo(
    spec: &ScenarioSpec,
    task: &TaskGraph,
    algorithms: &[Algorithm],
    jobs: usize,
) -> Result<RunOutput, SimError> {
    run_with(spec, task, algorithms, jobs, |s| Simulation::build(spec, task, s))
}

/// Same loop on a fixed topology and model instead of generated ones.
/// `spec.n_sps` and `spec.n_edges` are ignored.
pub fn run_on_instance(
    spec: &ScenarioSpec,
    task: &TaskGraph,
    serv: &ServiceGraph,
    model: &StatModel,
    algorithms: &[Algorithm],
    jobs: usize,
) -> Result<RunOutput, SimError> {
    model.check(serv).map_err(|e| SimError::Spec(e.to_string()))?;
    let mut spec = spec.clone();
    spec.n_sps = serv.len();
    spec.n_edges = serv.edges().len();
    run_with(&spec, task, algorithms, jobs, |s| {
        Simulation::from_instance(&spec, task, serv.clone(), model.clone(), s)
    })
}

fn run_with<B>(
    spec: &ScenarioSpec,
    task: &TaskGraph,
    algorithms: &[Algorithm],
    jobs: usize,
    build: B,
) -> Result<RunOutput, SimError>
where
    B: Fn(usize) -> Result<Simulation, SimError> + Sync,
{
    spec.validate()?;
    if algorithms.is_empty() {
        return Err(SimError::Spec("no algorithms selected".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| SimError::Internal(e.to_string()))?;
    pool.install(|| {
        let sims: Vec<Simulation> = (0..spec.n_simulations)
            .into_par_iter()
            .map(&build)
            .collect::<Result<_, _>>()?;
        let jobs: Vec<(usize, usize)> = (0..spec.n_simulations)
            .flat_map(|s| (0..spec.n_events).map(move |e| (s, e)))
            .collect();
        let per_event: Vec<Vec<EventRecord>> = jobs
            .par_iter()
            .map(|&(s, e)| sims[s].run_event(spec, task, algorithms, e))
            .collect::<Result<_, _>>()?;
        let records: Vec<EventRecord> = per_event.into_iter().flatten().collect();
        let summary = summarize_metrics(&records, algorithms);
        Ok(RunOutput {
            records,
            summary,
            offline: sims.iter().map(|s| s.a_off.template().cloned()).collect(),
        })
    })
}

impl From<ScheduleError> for SimError {
    fn from(e: ScheduleError) -> Self {
        SimError::Schedule(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simkit::scenario::{builtin_task_graph, TaskRef};

    fn small() -> (ScenarioSpec, TaskGraph) {
        let mut spec = ScenarioSpec::new(8, 14, TaskRef::Builtin(1));
        spec.seed = 11;
        spec.n_events = 6;
        spec.n_simulations = 2;
        (spec, builtin_task_graph(1).unwrap())
    }

    #[test]
    fn parses_algorithm_names() {
        assert_eq!("PHTS".parse::<Algorithm>().unwrap(), Algorithm::Phts);
        assert_eq!(" rts ".parse::<Algorithm>().unwrap(), Algorithm::Rts);
        assert!("insta".parse::<Algorithm>().is_err());
    }

    #[test]
    fn paired_and_reproducible() {
        let (spec, task) = small();
        let algos = [Algorithm::Phts, Algorithm::Instaiss, Algorithm::Tpts, Algorithm::Rts];
        let a = run_monte_carlo(&spec, &task, &algos, 1).unwrap();
        let b = run_monte_carlo(&spec, &task, &algos, 3).unwrap();
        assert_eq!(a.records.len(), 2 * 6 * 4);
        let strip = |r: &[EventRecord]| {
            r.iter()
                .map(|x| (x.simulation, x.event, x.algo, x.source, x.cf, x.tct, x.dec, x.template.clone()))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a.records), strip(&b.records));
        for chunk in a.records.chunks(4) {
            let (p, i) = (&chunk[0], &chunk[1]);
            assert_eq!((p.simulation, p.event), (i.simulation, i.event));
            if let (Some(pc), Some(ic)) = (p.cf, i.cf) {
                assert!(ic <= pc);
            }
        }
    }

    #[test]
    fn rejects_zero_events() {
        let (mut spec, task) = small();
        spec.n_events = 0;
        assert!(run_monte_carlo(&spec, &task, &[Algorithm::Phts], 1).is_err());
    }
}
