use std::path::PathBuf;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::baselines::BaselineConfig;
use crate::cost::{CostWeights, Realization, StatModel};
use crate::graph::{ServiceGraph, TaskComponent, TaskEdge, TaskGraph};
use crate::offline::RiskConfig;
use crate::search::SearchOptions;
use crate::stochastic::{DistributionSpec, SeededRng};

pub const SCHEMA_VERSION: u32 = 1;

/// Closed interval a parameter is drawn from uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub const fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    fn draw(&self, rng: &mut SeededRng) -> f64 {
        rng.uniform(self.lo, self.hi)
    }

    fn valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi
    }
}

/// Parameter ranges of one truncated Gaussian quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussParams {
    pub mean: Interval,
    pub variance: Interval,
    pub support: Interval,
}

impl GaussParams {
    fn draw(&self, rng: &mut SeededRng) -> DistributionSpec {
        let mean = self.mean.draw(rng);
        let variance = self.variance.draw(rng);
        DistributionSpec::TruncGauss {
            mean,
            variance,
            lower: self.support.lo,
            upper: self.support.hi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpParams {
    pub mean: Interval,
    pub support: Interval,
}

/// Ranges from which each SP's and each link's distribution parameters are
/// drawn at scenario creation. Base units: Hz, bit/s, seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatParams {
    pub f: GaussParams,
    pub r: GaussParams,
    pub t_conn: ExpParams,
    pub c_exch: GaussParams,
}

impl Default for StatParams {
    fn default() -> Self {
        Self {
            f: GaussParams {
                mean: Interval::new(2e9, 4e9),
                variance: Interval::new(0.04e18, 0.07e18),
                support: Interval::new(1.5e9, 4.5e9),
            },
            r: GaussParams {
                mean: Interval::new(5e6, 7e6),
                variance: Interval::point(0.2e12),
                support: Interval::new(4e6, 8e6),
            },
            t_conn: ExpParams {
                mean: Interval::new(5.0, 15.0),
                support: Interval::new(0.0, 60.0),
            },
            c_exch: GaussParams {
                mean: Interval::new(0.03, 0.07),
                variance: Interval::point(0.001),
                support: Interval::new(0.025, 0.075),
            },
        }
    }
}

impl StatParams {
    pub fn validate(&self) -> Result<(), SimError> {
        let gauss = [("f", &self.f), ("r", &self.r), ("c_exch", &self.c_exch)];
        for (name, g) in gauss {
            let ok = g.mean.valid() && g.variance.valid() && g.support.valid() && g.variance.lo > 0.0;
            if !ok || g.support.lo >= g.support.hi {
                return Err(SimError::Spec(format!("stat_params.{name}: invalid ranges")));
            }
        }
        let e = &self.t_conn;
        if !(e.mean.valid() && e.support.valid() && e.mean.lo > 0.0 && e.support.lo >= 0.0 && e.support.lo < e.support.hi) {
            return Err(SimError::Spec("stat_params.t_conn: invalid ranges".into()));
        }
        if self.f.support.lo <= 0.0 || self.r.support.lo <= 0.0 {
            return Err(SimError::Spec("stat_params: f and r supports must be positive".into()));
        }
        Ok(())
    }

    /// Draws and freezes a model for `serv`: every SP's `f`, then every
    /// SP's `r`, then every link's `t_conn`, then every link's `c_exch`.
    pub fn draw_model(&self, serv: &ServiceGraph, rng: &mut SeededRng) -> StatModel {
        let m = serv.len();
        let k = serv.edges().len();
        let f = (0..m).map(|_| self.f.draw(rng)).collect();
        let r = (0..m).map(|_| self.r.draw(rng)).collect();
        let t_conn = (0..k)
            .map(|_| DistributionSpec::TruncExp {
                mean: self.t_conn.mean.draw(rng),
                lower: self.t_conn.support.lo,
                upper: self.t_conn.support.hi,
            })
            .collect();
        let c_exch = (0..k).map(|_| self.c_exch.draw(rng)).collect();
        StatModel { f, r, t_conn, c_exch }
    }
}

/// A built-in task type or a task file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TaskRef {
    Builtin(u8),
    File(PathBuf),
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

fn one() -> usize {
    1
}

fn hundred() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub n_sps: usize,
    pub n_edges: usize,
    pub task: TaskRef,
    #[serde(default)]
    pub stat_params: StatParams,
    #[serde(default)]
    pub risk: RiskConfig,
    #[serde(default)]
    pub weights: CostWeights,
    #[serde(default)]
    pub seed: u64,
    /// Independent topologies and models.
    #[serde(default = "one")]
    pub n_simulations: usize,
    /// Scheduling events per simulation.
    #[serde(default = "hundred")]
    pub n_events: usize,
    #[serde(default)]
    pub baselines: BaselineConfig,
    #[serde(default)]
    pub search: SearchOptions,
}

impl ScenarioSpec {
    pub fn new(n_sps: usize, n_edges: usize, task: TaskRef) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            n_sps,
            n_edges,
            task,
            stat_params: StatParams::default(),
            risk: RiskConfig::default(),
            weights: CostWeights::default(),
            seed: 0,
            n_simulations: 1,
            n_events: 100,
            baselines: BaselineConfig::default(),
            search: SearchOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(SimError::Spec(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        check_counts(self.n_sps, self.n_edges)?;
        if self.n_simulations == 0 {
            return Err(SimError::Spec("n_simulations must be at least 1".into()));
        }
        if self.n_events == 0 {
            return Err(SimError::Spec("n_events must be at least 1".into()));
        }
        self.stat_params.validate()?;
        self.risk.validate().map_err(|e| SimError::Spec(e.to_string()))?;
        self.weights.validate().map_err(|e| SimError::Spec(e.to_string()))?;
        Ok(())
    }
}

fn check_counts(n_sps: usize, n_edges: usize) -> Result<(), SimError> {
    if n_sps == 0 {
        return Err(SimError::Spec("n_sps must be at least 1".into()));
    }
    let max = n_sps * (n_sps - 1) / 2;
    if n_edges > max || n_edges < n_sps - 1 {
        return Err(SimError::Spec(format!(
            "{n_edges} edges impossible for a connected simple graph on {n_sps} SPs (need {}..={max})",
            n_sps - 1
        )));
    }
    Ok(())
}

/// Connected simple graph with exactly `n_edges` edges: a uniformly random
/// labeled spanning tree (Prüfer decoding) plus uniformly chosen extra
/// edges.
pub fn generate_service_graph(n_sps: usize, n_edges: usize, rng: &mut SeededRng) -> Result<ServiceGraph, SimError> {
    check_counts(n_sps, n_edges)?;
    let mut edges = random_tree(n_sps, rng);
    let mut present = vec![false; n_sps * n_sps];
    for &(u, v) in &edges {
        present[u * n_sps + v] = true;
    }
    let mut rest: Vec<(usize, usize)> = (0..n_sps)
        .flat_map(|u| (u + 1..n_sps).map(move |v| (u, v)))
        .filter(|&(u, v)| !present[u * n_sps + v])
        .collect();
    let extra = n_edges - edges.len();
    let (chosen, _) = rest.partial_shuffle(rng, extra);
    edges.extend_from_slice(chosen);
    edges.sort_unstable();
    Ok(ServiceGraph::new(n_sps, &edges)?)
}

fn random_tree(n: usize, rng: &mut SeededRng) -> Vec<(usize, usize)> {
    if n < 2 {
        return Vec::new();
    }
    if n == 2 {
        return vec![(0, 1)];
    }
    let code: Vec<usize> = (0..n - 2).map(|_| rng.below(n)).collect();
    let mut degree = vec![1usize; n];
    for &c in &code {
        degree[c] += 1;
    }
    let mut leaves: std::collections::BTreeSet<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    let mut edges = Vec::with_capacity(n - 1);
    for &c in &code {
        let leaf = leaves.pop_first().expect("a Prüfer code always leaves a leaf");
        edges.push((leaf.min(c), leaf.max(c)));
        degree[c] -= 1;
        if degree[c] == 1 {
            leaves.insert(c);
        }
    }
    let u = leaves.pop_first().unwrap();
    let v = leaves.pop_first().unwrap();
    edges.push((u, v));
    edges
}

// Catalog attributes per component slot: q (cycles), d (bits), t_max (s).
const Q: [f64; 7] = [0.12e9, 0.18e9, 0.15e9, 0.20e9, 0.10e9, 0.16e9, 0.14e9];
const D: [f64; 7] = [250e3, 300e3, 350e3, 400e3, 200e3, 320e3, 280e3];
const T_MAX: [f64; 7] = [0.8, 1.0, 1.5, 2.0, 0.6, 1.2, 0.9];

// (u, v, w_task in seconds)
const TYPE1: &[(usize, usize, f64)] = &[(0, 1, 0.3), (1, 2, 0.5), (2, 3, 0.4), (3, 4, 0.6), (1, 3, 0.2)];
const TYPE2: &[(usize, usize, f64)] = &[
    (0, 1, 0.3),
    (0, 2, 0.5),
    (1, 2, 0.4),
    (1, 3, 0.6),
    (2, 4, 0.2),
    (3, 4, 0.3),
    (3, 5, 0.5),
    (4, 5, 0.4),
];
const TYPE3: &[(usize, usize, f64)] = &[
    (0, 1, 0.3),
    (0, 2, 0.5),
    (1, 2, 0.4),
    (1, 3, 0.6),
    (2, 3, 0.2),
    (2, 4, 0.3),
    (3, 4, 0.5),
    (3, 5, 0.4),
    (4, 5, 0.6),
    (4, 6, 0.2),
    (5, 6, 0.3),
];

/// Stand-in task topologies. Type 1: 5 components and 5 edges (a path
/// with one chord). Type 2: 6 components, 8 edges. Type 3: 7 components,
/// 11 edges.
pub fn builtin_task_graph(type_id: u8) -> Result<TaskGraph, SimError> {
    let (n, edges) = match type_id {
        1 => (5, TYPE1),
        2 => (6, TYPE2),
        3 => (7, TYPE3),
        other => return Err(SimError::Spec(format!("unknown built-in task type {other} (expected 1, 2 or 3)"))),
    };
    let components = (0..n)
        .map(|id| TaskComponent {
            id,
            t_max: T_MAX[id],
            q: Q[id],
            d: D[id],
        })
        .collect();
    let edges = edges.iter().map(|&(u, v, w_task)| TaskEdge { u, v, w_task }).collect();
    Ok(TaskGraph::new(components, edges)?)
}

/// One draw of every uncertain quantity.
pub fn realize_scenario(model: &StatModel, rng: &mut SeededRng) -> Realization {
    model.realize(rng)
}
