//! Completion time, data-exchange cost and the weighted cost function, both
//! on a concrete [`Realization`] and in expectation under a [`StatModel`].

mod model;

pub use model::{Realization, StatModel};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ServiceGraph, SpId, TaskComponent, TaskGraph, Template, TemplateError};
use crate::stochastic::{DistError, McEstimate, RunningStats, SeededRng};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error("rate must be positive: f = {f}, r = {r} (d = {d})")]
    NonPositiveRate { f: f64, r: f64, d: f64 },
    #[error("invalid template: {0}")]
    Template(#[from] TemplateError),
    #[error("no realized value for SP {0}")]
    MissingRealization(SpId),
    #[error("SP pair ({0}, {1}) is not a service edge")]
    NotServiceEdge(SpId, SpId),
    #[error("{field} has {got} entries, expected {expected}")]
    ModelSize {
        field: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{field}[{index}]: {source}")]
    Spec {
        field: &'static str,
        index: usize,
        source: DistError,
    },
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("weights must be non-negative and not both zero, got lambda_t = {0}, lambda_c = {1}")]
    Weights(f64, f64),
    #[error("Monte-Carlo estimate needs at least one draw")]
    NoDraws,
}

/// Non-negative weights of the completion-time and exchange-cost terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub lambda_t: f64,
    pub lambda_c: f64,
}

impl CostWeights {
    pub fn new(lambda_t: f64, lambda_c: f64) -> Result<Self, CostError> {
        let w = Self { lambda_t, lambda_c };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), CostError> {
        let ok = |x: f64| x >= 0.0 && x.is_finite();
        if ok(self.lambda_t) && ok(self.lambda_c) && (self.lambda_t > 0.0 || self.lambda_c > 0.0) {
            Ok(())
        } else {
            Err(CostError::Weights(self.lambda_t, self.lambda_c))
        }
    }

    pub fn combine(&self, tct: f64, dec: f64) -> f64 {
        self.lambda_t * tct + self.lambda_c * dec
    }
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            lambda_t: 0.5,
            lambda_c: 0.5,
        }
    }
}

/// Unordered SP pairs that exchange data under a template, sorted.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BetaMatrix {
    pairs: Vec<(SpId, SpId)>,
}

impl BetaMatrix {
    pub fn pairs(&self) -> &[(SpId, SpId)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, m: SpId, m2: SpId) -> bool {
        let key = if m < m2 { (m, m2) } else { (m2, m) };
        self.pairs.binary_search(&key).is_ok()
    }
}

/// Task completion time, exchange cost and their weighted sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub cf: f64,
    pub tct: f64,
    pub dec: f64,
}

/// `q/f + d/r`.
pub fn completion_time(q: f64, d: f64, f: f64, r: f64) -> Result<f64, CostError> {
    if !(f > 0.0) || (d > 0.0 && !(r > 0.0)) {
        return Err(CostError::NonPositiveRate { f, r, d });
    }
    let comm = if d == 0.0 { 0.0 } else { d / r };
    Ok(q / f + comm)
}

fn check_injective(task: &TaskGraph, template: &Template) -> Result<(), CostError> {
    let n_providers = template.assignment().iter().max().map_or(0, |m| m + 1);
    template.check_shape(task, n_providers)?;
    Ok(())
}

/// One pair per task edge whose endpoints sit on different SPs.
pub fn derive_beta(task: &TaskGraph, template: &Template) -> Result<BetaMatrix, CostError> {
    check_injective(task, template)?;
    let mut pairs: Vec<(SpId, SpId)> = task
        .edges()
        .iter()
        .filter_map(|e| {
            let (a, b) = (template.sp(e.u), template.sp(e.v));
            match a.cmp(&b) {
                std::cmp::Ordering::Less => Some((a, b)),
                std::cmp::Ordering::Greater => Some((b, a)),
                std::cmp::Ordering::Equal => None,
            }
        })
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    Ok(BetaMatrix { pairs })
}

fn edge_of(serv: &ServiceGraph, (m, m2): (SpId, SpId)) -> Result<usize, CostError> {
    serv.edge_id(m, m2).ok_or(CostError::NotServiceEdge(m, m2))
}

pub fn task_completion_time(task: &TaskGraph, template: &Template, real: &Realization) -> Result<f64, CostError> {
    check_injective(task, template)?;
    max_time(task, template, |c, m| {
        let (f, r) = match (real.f.get(m), real.r.get(m)) {
            (Some(&f), Some(&r)) => (f, r),
            _ => return Err(CostError::MissingRealization(m)),
        };
        completion_time(c.q, c.d, f, r)
    })
}

fn max_time<F>(task: &TaskGraph, template: &Template, mut time: F) -> Result<f64, CostError>
where
    F: FnMut(&TaskComponent, SpId) -> Result<f64, CostError>,
{
    let mut worst = 0.0f64;
    for c in task.components() {
        worst = worst.max(time(c, template.sp(c.id))?);
    }
    Ok(worst)
}

fn pair_sum<F>(serv: &ServiceGraph, beta: &BetaMatrix, mut cost: F) -> Result<f64, CostError>
where
    F: FnMut(usize) -> f64,
{
    let mut total = 0.0;
    for &pair in beta.pairs() {
        total += cost(edge_of(serv, pair)?);
    }
    Ok(total)
}

/// Sum of realized exchange costs over the β pairs.
pub fn data_exchange_cost(serv: &ServiceGraph, beta: &BetaMatrix, real: &Realization) -> Result<f64, CostError> {
    real.check(serv)?;
    pair_sum(serv, beta, |e| real.c_exch[e])
}

pub fn evaluate(
    task: &TaskGraph,
    serv: &ServiceGraph,
    template: &Template,
    real: &Realization,
    w: &CostWeights,
) -> Result<CostBreakdown, CostError> {
    let tct = task_completion_time(task, template, real)?;
    let dec = data_exchange_cost(serv, &derive_beta(task, template)?, real)?;
    Ok(CostBreakdown {
        cf: w.combine(tct, dec),
        tct,
        dec,
    })
}

/// Realized cost function `λt·T + λc·C`.
pub fn cost_function(
    task: &TaskGraph,
    serv: &ServiceGraph,
    template: &Template,
    real: &Realization,
    w: &CostWeights,
) -> Result<f64, CostError> {
    Ok(evaluate(task, serv, template, real, w)?.cf)
}

fn expected_time_on(comp: &TaskComponent, inv_f: f64, inv_r: f64) -> f64 {
    inv_f * comp.q + inv_r * comp.d
}

/// `E[1/f]·q + E[1/r]·d`.
pub fn expected_completion_time(comp: &TaskComponent, sp: SpId, model: &StatModel) -> Result<f64, CostError> {
    let (f, r) = match (model.f.get(sp), model.r.get(sp)) {
        (Some(f), Some(r)) => (f, r),
        _ => return Err(CostError::MissingRealization(sp)),
    };
    Ok(expected_time_on(comp, f.expected_reciprocal()?, r.expected_reciprocal()?))
}

/// Max over components of the expected completion time. This is a lower
/// bound on the true expectation of the maximum.
pub fn expected_task_completion_time(task: &TaskGraph, template: &Template, model: &StatModel) -> Result<f64, CostError> {
    check_injective(task, template)?;
    max_time(task, template, |c, m| expected_completion_time(c, m, model))
}

pub fn expected_exchange_cost(serv: &ServiceGraph, beta: &BetaMatrix, model: &StatModel) -> Result<f64, CostError> {
    if model.c_exch.len() != serv.edges().len() {
        return Err(CostError::ModelSize {
            field: "c_exch",
            expected: serv.edges().len(),
            got: model.c_exch.len(),
        });
    }
    pair_sum(serv, beta, |e| model.c_exch[e].mean())
}

pub fn expected_evaluate(
    task: &TaskGraph,
    serv: &ServiceGraph,
    template: &Template,
    model: &StatModel,
    w: &CostWeights,
) -> Result<CostBreakdown, CostError> {
    let tct = expected_task_completion_time(task, template, model)?;
    let dec = expected_exchange_cost(serv, &derive_beta(task, template)?, model)?;
    Ok(CostBreakdown {
        cf: w.combine(tct, dec),
        tct,
        dec,
    })
}

/// `λt·E-approx[T] + λc·E[C]`.
pub fn expected_cost_function(
    task: &TaskGraph,
    serv: &ServiceGraph,
    template: &Template,
    model: &StatModel,
    w: &CostWeights,
) -> Result<f64, CostError> {
    Ok(expected_evaluate(task, serv, template, model, w)?.cf)
}

/// Monte-Carlo estimate of `E[max_n t_sum]` over joint draws of the `f`
/// and `r` of every assigned SP.
pub fn mc_expected_task_completion_time(
    task: &TaskGraph,
    template: &Template,
    model: &StatModel,
    n: usize,
    rng: &mut SeededRng,
) -> Result<McEstimate, CostError> {
    check_injective(task, template)?;
    if n == 0 {
        return Err(CostError::NoDraws);
    }
    for &m in template.assignment() {
        if m >= model.f.len() || m >= model.r.len() {
            return Err(CostError::MissingRealization(m));
        }
    }
    let mut stats = RunningStats::default();
    for _ in 0..n {
        let mut worst = 0.0f64;
        for c in task.components() {
            let m = template.sp(c.id);
            let f = model.f[m].sample(rng);
            let r = model.r[m].sample(rng);
            worst = worst.max(completion_time(c.q, c.d, f, r)?);
        }
        stats.push(worst);
    }
    stats.estimate().map_err(|_| CostError::NoDraws)
}

/// Per-(component, SP) completion times and per-edge exchange costs,
/// precomputed once so that evaluating a template is a table lookup. Values
/// and summation order match the free functions exactly.
#[derive(Debug, Clone)]
pub struct CostTable {
    n_providers: usize,
    time: Vec<f64>,
    exch: Vec<f64>,
}

impl CostTable {
    pub fn realized(task: &TaskGraph, serv: &ServiceGraph, real: &Realization) -> Result<Self, CostError> {
        real.check(serv)?;
        let m = serv.len();
        let mut time = Vec::with_capacity(task.len() * m);
        for c in task.components() {
            for sp in 0..m {
                time.push(completion_time(c.q, c.d, real.f[sp], real.r[sp])?);
            }
        }
        Ok(Self {
            n_providers: m,
            time,
            exch: real.c_exch.clone(),
        })
    }

    pub fn expected(task: &TaskGraph, serv: &ServiceGraph, model: &StatModel) -> Result<Self, CostError> {
        model.check(serv)?;
        let m = serv.len();
        let inv_f = model
            .f
            .iter()
            .map(|s| s.expected_reciprocal())
            .collect::<Result<Vec<_>, _>>()?;
        let inv_r = model
            .r
            .iter()
            .map(|s| s.expected_reciprocal())
            .collect::<Result<Vec<_>, _>>()?;
        let mut time = Vec::with_capacity(task.len() * m);
        for c in task.components() {
            for sp in 0..m {
                time.push(expected_time_on(c, inv_f[sp], inv_r[sp]));
            }
        }
        Ok(Self {
            n_providers: m,
            time,
            exch: model.c_exch.iter().map(|s| s.mean()).collect(),
        })
    }

    /// Completion time of component `n` on SP `m`.
    pub fn time(&self, n: usize, m: SpId) -> f64 {
        self.time[n * self.n_providers + m]
    }

    /// Exchange cost on service edge `e`.
    pub fn exchange(&self, e: usize) -> f64 {
        self.exch[e]
    }

    pub fn evaluate(
        &self,
        task: &TaskGraph,
        serv: &ServiceGraph,
        template: &Template,
        w: &CostWeights,
    ) -> Result<CostBreakdown, CostError> {
        check_injective(task, template)?;
        let tct = max_time(task, template, |c, m| {
            if m < self.n_providers {
                Ok(self.time(c.id, m))
            } else {
                Err(CostError::MissingRealization(m))
            }
        })?;
        let dec = pair_sum(serv, &derive_beta(task, template)?, |e| self.exch[e])?;
        Ok(CostBreakdown {
            cf: w.combine(tct, dec),
            tct,
            dec,
        })
    }
}
