//! Risk-aware pilot search: the offline template minimizing expected cost
//! under chance constraints on completion time and contact duration.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{CostTable, CostWeights, StatModel};
use crate::graph::{ComponentId, ServiceGraph, SpId, TaskGraph};
use crate::search::{
    AltMap, CandidateSet, Decision, Infeasibility, PivotChoice, ScheduleError, SearchOptions, SearchSpace,
};
use crate::stochastic::{risk_struct, risk_time};

/// Bounds on the overrun probability (`xi`) and on the contact shortfall
/// probability (`xi_prime`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskConfig {
    pub xi: f64,
    pub xi_prime: f64,
}

impl RiskConfig {
    pub fn new(xi: f64, xi_prime: f64) -> Result<Self, ScheduleError> {
        let r = Self { xi, xi_prime };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        let ok = |x: f64| x > 0.0 && x <= 1.0;
        if ok(self.xi) && ok(self.xi_prime) {
            Ok(())
        } else {
            Err(ScheduleError::Risk {
                xi: self.xi,
                xi_prime: self.xi_prime,
            })
        }
    }
}

impl Default for RiskConfig {
    fn default() -> Self {
        Self { xi: 0.1, xi_prime: 0.1 }
    }
}

/// Offline problem with every risk and expected cost precomputed.
pub struct OfflinePlanner<'a> {
    space: SearchSpace<'a>,
    table: CostTable,
    risk_time: Vec<f64>,
    risk_struct: Vec<f64>,
}

impl<'a> OfflinePlanner<'a> {
    pub fn new(
        task: &'a TaskGraph,
        serv: &'a ServiceGraph,
        model: &StatModel,
        risk: &RiskConfig,
        parallel: bool,
    ) -> Result<Self, ScheduleError> {
        risk.validate()?;
        model.check(serv)?;
        let m = serv.len();
        let pairs: Vec<(ComponentId, SpId)> = (0..task.len()).flat_map(|n| (0..m).map(move |s| (n, s))).collect();
        let one = |&(n, s): &(ComponentId, SpId)| {
            let c = task.component(n);
            risk_time(&model.f[s], &model.r[s], c.q, c.d, c.t_max)
        };
        let risk_time: Vec<f64> = if parallel {
            pairs.par_iter().map(one).collect::<Result<_, _>>()?
        } else {
            pairs.iter().map(one).collect::<Result<_, _>>()?
        };
        let risk_struct: Vec<f64> = task
            .edges()
            .iter()
            .flat_map(|te| model.t_conn.iter().map(move |spec| risk_struct(spec, te.w_task)))
            .collect();
        let node_ok = risk_time.iter().map(|&p| p <= risk.xi).collect();
        let edge_ok = risk_struct.iter().map(|&p| p <= risk.xi_prime).collect();
        Ok(Self {
            space: SearchSpace::new(task, serv, node_ok, edge_ok),
            table: CostTable::expected(task, serv, model)?,
            risk_time,
            risk_struct,
        })
    }

    pub fn space(&self) -> &SearchSpace<'a> {
        &self.space
    }

    pub fn cost_table(&self) -> &CostTable {
        &self.table
    }

    /// Overrun probability of component `n` on SP `m`.
    pub fn risk_time(&self, n: ComponentId, m: SpId) -> f64 {
        self.risk_time[n * self.space.serv().len() + m]
    }

    /// Contact-shortfall probability of task edge `k` on service edge `e`.
    pub fn risk_struct(&self, k: usize, e: usize) -> f64 {
        self.risk_struct[k * self.space.serv().edges().len() + e]
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

    /// Union of the candidate templates over every anchor.
    pub fn candidate_set(&self, opts: SearchOptions) -> Result<CandidateSet, Infeasibility> {
        self.space.candidate_set(opts)
    }

    /// Minimum expected cost over `cands`.
    pub fn opt_select(&self, cands: &CandidateSet, w: &CostWeights) -> Result<Decision, ScheduleError> {
        w.validate()?;
        Ok(match self.space.select(cands, &self.table, w)? {
            Some((template, cost)) => Decision::Selected { template, cost },
            None => Decision::Infeasible(Infeasibility::NoTemplate),
        })
    }

    pub fn solve(&self, w: &CostWeights, opts: SearchOptions) -> Result<Decision, ScheduleError> {
        match self.candidate_set(opts) {
            Ok(cands) => self.opt_select(&cands, w),
            Err(why) => Ok(Decision::Infeasible(why)),
        }
    }
}

/// Offline pilot template for `task` on `serv` under `model`.
pub fn ra_pilot_iss(
    task: &TaskGraph,
    serv: &ServiceGraph,
    model: &StatModel,
    risk: &RiskConfig,
    w: &CostWeights,
    opts: SearchOptions,
) -> Result<Decision, ScheduleError> {
    OfflinePlanner::new(task, serv, model, risk, opts.parallel)?.solve(w, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::expected_cost_function;
    use crate::graph::{TaskComponent, TaskEdge, Template};
    use crate::stochastic::DistributionSpec;

    fn path3() -> TaskGraph {
        let c = |id| TaskComponent {
            id,
            t_max: 0.5,
            q: 0.15e9,
            d: 300e3,
        };
        let e = |u, v| TaskEdge { u, v, w_task: 1.0 };
        TaskGraph::new(vec![c(0), c(1), c(2)], vec![e(0, 1), e(1, 2)]).unwrap()
    }

    fn k4() -> ServiceGraph {
        ServiceGraph::new(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap()
    }

    fn noisy_model(f_var: f64) -> StatModel {
        let g = |mean: f64, variance: f64, lower: f64, upper: f64| DistributionSpec::TruncGauss {
            mean,
            variance,
            lower,
            upper,
        };
        StatModel {
            f: (0..4).map(|i| g(2e9 + 0.5e9 * i as f64, f_var, 1.5e9, 4.5e9)).collect(),
            r: vec![g(6e6, 0.2e12, 4e6, 8e6); 4],
            t_conn: vec![
                DistributionSpec::TruncExp {
                    mean: 10.0,
                    lower: 0.0,
                    upper: 60.0
                };
                6
            ],
            c_exch: (0..6).map(|i| g(0.03 + 0.008 * i as f64, 0.001, 0.025, 0.075)).collect(),
        }
    }

    #[test]
    fn risk_config_bounds() {
        assert!(RiskConfig::new(0.05, 0.1).is_ok());
        assert!(RiskConfig::new(0.0, 0.1).is_err());
        assert!(RiskConfig::new(0.1, 1.5).is_err());
    }

    #[test]
    fn path_on_k4_pivot_and_regions() {
        let task = path3();
        let serv = k4();
        let model = noisy_model(0.05e18);
        let p = OfflinePlanner::new(&task, &serv, &model, &RiskConfig::new(0.1, 0.2).unwrap(), false).unwrap();
        let choice = p.pivot_select().unwrap();
        assert_eq!(choice.pivot, 1);
        for &anchor in choice.anchors() {
            let candi = p.region_explore(choice.pivot, anchor).unwrap();
            assert_eq!(candi.candidates(choice.pivot), &[anchor]);
            assert!(candi.as_slice().iter().all(|c| !c.is_empty()));
        }
    }

    #[test]
    fn selected_template_minimizes_expected_cost() {
        let task = path3();
        let serv = k4();
        let model = noisy_model(0.05e18);
        let risk = RiskConfig::new(0.1, 0.2).unwrap();
        let w = CostWeights::default();
        let p = OfflinePlanner::new(&task, &serv, &model, &risk, false).unwrap();
        let cands = p.candidate_set(SearchOptions::default()).unwrap();
        assert_eq!(cands.len(), 24);
        let Decision::Selected { template, cost } = p.solve(&w, SearchOptions::default()).unwrap() else {
            panic!("expected a template");
        };
        for t in cands.templates() {
            let cf = expected_cost_function(&task, &serv, t, &model, &w).unwrap();
            assert!(cost.cf <= cf);
        }
        let again = ra_pilot_iss(&task, &serv, &model, &risk, &w, SearchOptions { naive: true, parallel: true }).unwrap();
        assert_eq!(again.template(), Some(&template));
    }

    #[test]
    fn tiny_budgets_are_infeasible() {
        let task = path3();
        let serv = k4();
        let model = noisy_model(0.05e18);
        let w = CostWeights::default();
        // mean 10 s contact, w_task 1 s: shortfall risk ~ 0.095
        let tight = RiskConfig::new(0.1, 0.05).unwrap();
        let d = ra_pilot_iss(&task, &serv, &model, &tight, &w, SearchOptions::default()).unwrap();
        assert_eq!(d, Decision::Infeasible(Infeasibility::NoTemplate));

        let mut slow = path3();
        slow = TaskGraph::new(
            slow.components()
                .iter()
                .map(|c| TaskComponent { t_max: 0.1, ..*c })
                .collect(),
            slow.edges().to_vec(),
        )
        .unwrap();
        let d = ra_pilot_iss(&slow, &serv, &model, &RiskConfig::new(1e-6, 1.0).unwrap(), &w, SearchOptions::default()).unwrap();
        assert!(matches!(d, Decision::Infeasible(Infeasibility::NoCandidates { .. })));
    }

    #[test]
    fn single_candidate_is_selected() {
        let task = path3();
        let serv = k4();
        let model = noisy_model(0.05e18);
        let p = OfflinePlanner::new(&task, &serv, &model, &RiskConfig::default(), false).unwrap();
        let only = CandidateSet::from_templates(vec![Template::new(vec![3, 0, 2])]);
        let d = p.opt_select(&only, &CostWeights::default()).unwrap();
        assert_eq!(d.template(), Some(&Template::new(vec![3, 0, 2])));
        let none = p.opt_select(&CandidateSet::default(), &CostWeights::default()).unwrap();
        assert_eq!(none, Decision::Infeasible(Infeasibility::NoTemplate));
    }
}
