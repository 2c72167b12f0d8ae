//! Instantaneous search on a realized vehicular cloud and the hybrid
//! controller that reuses the offline template whenever it still holds.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::cost::{completion_time, evaluate, CostBreakdown, CostTable, CostWeights, Realization};
use crate::graph::{ComponentId, ServiceGraph, SpId, TaskGraph, Template};
use crate::search::{
    AltMap, CandidateSet, Decision, Infeasibility, PivotChoice, ScheduleError, SearchOptions, SearchSpace,
};

/// Where an event's template came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// The offline template passed the validity check.
    OfflineReused,
    /// The offline template was missing or invalid; the backup search ran.
    OnlineBackup,
    /// A non-hybrid scheduler ran on its own.
    Online,
    /// No template could be produced.
    Infeasible,
}

impl Source {
    pub fn as_str(&self) -> &'static str {
        match self {
            Source::OfflineReused => "offline_reused",
            Source::OnlineBackup => "online_backup",
            Source::Online => "online",
            Source::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleOutcome {
    pub template: Option<Template>,
    pub source: Source,
    /// Wall-clock decision time in seconds.
    pub decision_time: f64,
    pub cost: Option<CostBreakdown>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infeasibility: Option<Infeasibility>,
}

impl ScheduleOutcome {
    pub fn cf(&self) -> Option<f64> {
        self.cost.map(|c| c.cf)
    }

    fn from_decision(decision: Decision, source: Source, decision_time: f64) -> Self {
        match decision {
            Decision::Selected { template, cost } => Self {
                template: Some(template),
                source,
                decision_time,
                cost: Some(cost),
                infeasibility: None,
            },
            Decision::Infeasible(why) => Self {
                template: None,
                source: Source::Infeasible,
                decision_time,
                cost: None,
                infeasibility: Some(why),
            },
        }
    }
}

pub trait Clock {
    /// Time since an arbitrary fixed origin.
    fn now(&self) -> Duration;
}

#[derive(Debug, Clone, Copy)]
pub struct MonotonicClock {
    origin: Instant,
}

impl MonotonicClock {
    pub fn new() -> Self {
        Self { origin: Instant::now() }
    }
}

impl Default for MonotonicClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for MonotonicClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }
}

/// Online problem on one realization.
pub struct OnlinePlanner<'a> {
    space: SearchSpace<'a>,
    table: CostTable,
}

impl<'a> OnlinePlanner<'a> {
    pub fn new(task: &'a TaskGraph, serv: &'a ServiceGraph, real: &Realization) -> Result<Self, ScheduleError> {
        let table = CostTable::realized(task, serv, real)?;
        let node_ok = (0..task.len())
            .flat_map(|n| (0..serv.len()).map(move |m| (n, m)))
            .map(|(n, m)| table.time(n, m) <= task.component(n).t_max)
            .collect();
        let edge_ok = task
            .edges()
            .iter()
            .flat_map(|te| real.t_conn.iter().map(move |&t| t >= te.w_task))
            .collect();
        Ok(Self {
            space: SearchSpace::new(task, serv, node_ok, edge_ok),
            table,
        })
    }

    pub fn space(&self) -> &SearchSpace<'a> {
        &self.space
    }

    pub fn pivot_select(&self) -> Result<PivotChoice, Infeasibility> {
        self.space.pivot()
    }

    pub fn region_explore(&self, pivot: ComponentId, anchor: SpId) -> Option<AltMap> {
        self.space.region(pivot, anchor)
    }

    pub fn subg_search(&self, candi: &AltMap, naive: bool) -> CandidateSet {
        self.space.templates(candi, naive)
    }

    pub fn candidate_set(&self, opts: SearchOptions) -> Result<CandidateSet, Infeasibility> {
        self.space.candidate_set(opts)
    }

    /// Minimum realized cost over `cands`.
    pub fn opt_select(&self, cands: &CandidateSet, w: &CostWeights) -> Result<Decision, ScheduleError> {
        w.validate()?;
        Ok(match self.space.select(cands, &self.table, w)? {
            Some((template, cost)) => Decision::Selected { template, cost },
            None => Decision::Infeasible(Infeasibility::NoTemplate),
        })
    }

    /// Minimum realized cost over every anchor, without materializing the
    /// candidate set. Same result as `opt_select(candidate_set())`.
    pub fn solve(&self, w: &CostWeights, opts: SearchOptions) -> Result<Decision, ScheduleError> {
        w.validate()?;
        Ok(match self.space.best(&self.table, w, opts)? {
            Ok((template, cost)) => Decision::Selected { template, cost },
            Err(why) => Decision::Infeasible(why),
        })
    }
}

/// Exact online search on `real`.
pub fn te_insta_iss(
    task: &TaskGraph,
    serv: &ServiceGraph,
    real: &Realization,
    w: &CostWeights,
    opts: SearchOptions,
) -> Result<Decision, ScheduleError> {
    OnlinePlanner::new(task, serv, real)?.solve(w, opts)
}

/// Whether `a_off` still meets every deadline and every contact-duration
/// requirement under `real`, with all exchanging SP pairs still adjacent.
/// Every component and every edge is checked.
pub fn check_template_validity(
    task: &TaskGraph,
    serv: &ServiceGraph,
    a_off: &Template,
    real: &Realization,
) -> Result<bool, ScheduleError> {
    a_off.check_shape(task, serv.len())?;
    real.check(serv)?;
    let mut valid = true;
    for c in task.components() {
        let m = a_off.sp(c.id);
        valid &= completion_time(c.q, c.d, real.f[m], real.r[m])? <= c.t_max;
    }
    for e in task.edges() {
        valid &= match serv.edge_id(a_off.sp(e.u), a_off.sp(e.v)) {
            Some(k) => real.t_conn[k] >= e.w_task,
            None => false,
        };
    }
    Ok(valid)
}

fn seconds(clock: &dyn Clock, start: Duration) -> f64 {
    clock.now().saturating_sub(start).as_secs_f64()
}

/// Reuses `a_off` when valid, otherwise falls back to `backup`. The decision
/// time covers the validity check and the backup only; the cost of a reused
/// template is evaluated after the clock stops.
pub fn hybrid_schedule_with<B>(
    task: &TaskGraph,
    serv: &ServiceGraph,
    a_off: Option<&Template>,
    real: &Realization,
    w: &CostWeights,
    clock: &dyn Clock,
    backup: B,
) -> Result<ScheduleOutcome, ScheduleError>
where
    B: FnOnce() -> Result<Decision, ScheduleError>,
{
    let start = clock.now();
    let reuse = match a_off {
        Some(t) => check_template_validity(task, serv, t, real)?,
        None => false,
    };
    if reuse {
        let rt = seconds(clock, start);
        let t = a_off.expect("reuse implies a template").clone();
        let cost = evaluate(task, serv, &t, real, w)?;
        return Ok(ScheduleOutcome {
            template: Some(t),
            source: Source::OfflineReused,
            decision_time: rt,
            cost: Some(cost),
            infeasibility: None,
        });
    }
    let decision = backup()?;
    let rt = seconds(clock, start);
    Ok(ScheduleOutcome::from_decision(decision, Source::OnlineBackup, rt))
}

/// Hybrid controller with the exact online search as backup.
pub fn hybrid_schedule(
    task: &TaskGraph,
    serv: &ServiceGraph,
    a_off: Option<&Template>,
    real: &Realization,
    w: &CostWeights,
    clock: &dyn Clock,
    opts: SearchOptions,
) -> Result<ScheduleOutcome, ScheduleError> {
    hybrid_schedule_with(task, serv, a_off, real, w, clock, || te_insta_iss(task, serv, real, w, opts))
}

/// Times a standalone scheduler.
pub fn run_timed<F>(clock: &dyn Clock, f: F) -> Result<ScheduleOutcome, ScheduleError>
where
    F: FnOnce() -> Result<Decision, ScheduleError>,
{
    let start = clock.now();
    let decision = f()?;
    let rt = seconds(clock, start);
    Ok(ScheduleOutcome::from_decision(decision, Source::Online, rt))
}
