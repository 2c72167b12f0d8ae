//! Reference schedulers on a realized vehicular cloud: exhaustive search,
//! two greedy depth-first placements and a randomized placement.

use serde::{Deserialize, Serialize};

use crate::cost::{completion_time, evaluate, CostWeights, Realization};
use crate::graph::{ComponentId, ServiceGraph, SpId, TaskGraph, Template};
use crate::search::{keep_better, Decision, Infeasibility, ScheduleError};
use crate::stochastic::SeededRng;

/// Default cap on the number of injective assignments `ets` will enumerate.
pub const ETS_DEFAULT_CAP: u128 = 50_000_000;

/// Default number of randomized placement attempts in `rts`.
pub const RTS_DEFAULT_RESTARTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub ets_cap: u128,
    pub rts_restarts: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            ets_cap: ETS_DEFAULT_CAP,
            rts_restarts: RTS_DEFAULT_RESTARTS,
        }
    }
}

/// `m! / (m - n)!`, saturating.
pub fn injective_assignments(m: usize, n: usize) -> u128 {
    if n > m {
        return 0;
    }
    (m - n + 1..=m).fold(1u128, |acc, k| acc.saturating_mul(k as u128))
}

struct Checker<'a> {
    task: &'a TaskGraph,
    serv: &'a ServiceGraph,
    real: &'a Realization,
    t_sum: Vec<f64>,
}

impl<'a> Checker<'a> {
    fn new(task: &'a TaskGraph, serv: &'a ServiceGraph, real: &'a Realization) -> Result<Self, ScheduleError> {
        real.check(serv)?;
        let mut t_sum = Vec::with_capacity(task.len() * serv.len());
        for c in task.components() {
            for m in 0..serv.len() {
                t_sum.push(completion_time(c.q, c.d, real.f[m], real.r[m])?);
            }
        }
        Ok(Self { task, serv, real, t_sum })
    }

    fn t_sum(&self, n: ComponentId, m: SpId) -> f64 {
        self.t_sum[n * self.serv.len() + m]
    }

    fn node_ok(&self, n: ComponentId, m: SpId) -> bool {
        self.t_sum(n, m) <= self.task.component(n).t_max
    }

    fn link_ok(&self, w_task: f64, m: SpId, m2: SpId) -> bool {
        self.serv.edge_id(m, m2).is_some_and(|e| self.real.t_conn[e] >= w_task)
    }

    /// SP `m` may host `n` given the components already placed.
    fn fits(&self, n: ComponentId, m: SpId, placed: &[Option<SpId>]) -> bool {
        self.node_ok(n, m)
            && self.task.edges().iter().all(|e| {
                let other = if e.u == n {
                    e.v
                } else if e.v == n {
                    e.u
                } else {
                    return true;
                };
                placed[other].is_none_or(|o| self.link_ok(e.w_task, m, o))
            })
    }

    fn full_ok(&self, a: &[SpId]) -> bool {
        (0..a.len()).all(|n| self.node_ok(n, a[n]))
            && self.task.edges().iter().all(|e| self.link_ok(e.w_task, a[e.u], a[e.v]))
    }

    fn select(&self, template: Template, w: &CostWeights) -> Result<Decision, ScheduleError> {
        let cost = evaluate(self.task, self.serv, &template, self.real, w)?;
        Ok(Decision::Selected { template, cost })
    }
}

/// Exhaustive search over every injective assignment, checking deadlines
/// and contact durations only at complete assignments.
pub fn ets(
    task: &TaskGraph,
    serv: &ServiceGraph,
    real: &Realization,
    w: &CostWeights,
    cap: u128,
) -> Result<Decision, ScheduleError> {
    w.validate()?;
    let assignments = injective_assignments(serv.len(), task.len());
    if assignments > cap {
        return Err(ScheduleError::TooLarge { assignments, cap });
    }
    let chk = Checker::new(task, serv, real)?;
    let mut best = None;
    let mut a = Vec::with_capacity(task.len());
    let mut used = vec![false; serv.len()];
    let mut err = None;
    enumerate(serv.len(), task.len(), &mut a, &mut used, &mut |a| {
        if err.is_some() || !chk.full_ok(a) {
            return;
        }
        let t = Template::new(a.to_vec());
        match evaluate(task, serv, &t, real, w) {
            Ok(cost) => keep_better(&mut best, t, cost),
            Err(e) => err = Some(e),
        }
    });
    if let Some(e) = err {
        return Err(e.into());
    }
    Ok(match best {
        Some((template, cost)) => Decision::Selected { template, cost },
        None => Decision::Infeasible(Infeasibility::NoTemplate),
    })
}

fn enumerate<F: FnMut(&[SpId])>(m: usize, n: usize, a: &mut Vec<SpId>, used: &mut [bool], visit: &mut F) {
    if a.len() == n {
        visit(a);
        return;
    }
    for s in 0..m {
        if !used[s] {
            used[s] = true;
            a.push(s);
            enumerate(m, n, a, used, visit);
            a.pop();
            used[s] = false;
        }
    }
}

/// Depth-first visiting order from component 0, neighbors ascending.
pub fn dfs_order(task: &TaskGraph) -> Vec<ComponentId> {
    let topo = task.topology();
    let mut seen = vec![false; task.len()];
    let mut order = Vec::with_capacity(task.len());
    let mut stack = vec![0];
    while let Some(n) = stack.pop() {
        if std::mem::replace(&mut seen[n], true) {
            continue;
        }
        order.push(n);
        let nbrs = topo.neighborhood(n).expect("component ids are dense");
        stack.extend(nbrs.iter().rev().filter(|&&v| !seen[v]));
    }
    order
}

fn greedy<K, F>(
    task: &TaskGraph,
    serv: &ServiceGraph,
    real: &Realization,
    w: &CostWeights,
    mut key: F,
) -> Result<Decision, ScheduleError>
where
    K: PartialOrd,
    F: FnMut(&Checker, ComponentId, SpId) -> K,
{
    w.validate()?;
    let chk = Checker::new(task, serv, real)?;
    let mut placed: Vec<Option<SpId>> = vec![None; task.len()];
    let mut used = vec![false; serv.len()];
    for n in dfs_order(task) {
        let mut pick: Option<(K, SpId)> = None;
        for m in 0..serv.len() {
            if used[m] || !chk.fits(n, m, &placed) {
                continue;
            }
            let k = key(&chk, n, m);
            if pick.as_ref().is_none_or(|(best, _)| k < *best) {
                pick = Some((k, m));
            }
        }
        let Some((_, m)) = pick else {
            return Ok(Decision::Infeasible(Infeasibility::NoTemplate));
        };
        placed[n] = Some(m);
        used[m] = true;
    }
    chk.select(Template::new(placed.into_iter().map(Option::unwrap).collect()), w)
}

/// Greedy placement on the fastest admissible SP.
pub fn tpts(task: &TaskGraph, serv: &ServiceGraph, real: &Realization, w: &CostWeights) -> Result<Decision, ScheduleError> {
    greedy(task, serv, real, w, |chk, n, m| chk.t_sum(n, m))
}

/// Greedy placement on the highest-degree admissible SP.
pub fn dpts(task: &TaskGraph, serv: &ServiceGraph, real: &Realization, w: &CostWeights) -> Result<Decision, ScheduleError> {
    let topo = serv.topology();
    greedy(task, serv, real, w, |_, _, m| std::cmp::Reverse(topo.degree(m).unwrap()))
}

/// Randomized depth-first placement: each component goes to a uniformly
/// chosen admissible SP. A dead end restarts from scratch, up to `restarts`
/// attempts.
pub fn rts(
    task: &TaskGraph,
    serv: &ServiceGraph,
    real: &Realization,
    w: &CostWeights,
    restarts: usize,
    rng: &mut SeededRng,
) -> Result<Decision, ScheduleError> {
    w.validate()?;
    let chk = Checker::new(task, serv, real)?;
    let order = dfs_order(task);
    'attempt: for _ in 0..restarts {
        let mut placed: Vec<Option<SpId>> = vec![None; task.len()];
        let mut used = vec![false; serv.len()];
        for &n in &order {
            let options: Vec<SpId> = (0..serv.len())
                .filter(|&m| !used[m] && chk.fits(n, m, &placed))
                .collect();
            if options.is_empty() {
                continue 'attempt;
            }
            let m = options[rng.below(options.len())];
            placed[n] = Some(m);
            used[m] = true;
        }
        return chk.select(Template::new(placed.into_iter().map(Option::unwrap).collect()), w);
    }
    Ok(Decision::Infeasible(Infeasibility::NoTemplate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::StatModel;
    use crate::graph::{TaskComponent, TaskEdge};

    fn comp(id: usize, q: f64) -> TaskComponent {
        TaskComponent {
            id,
            t_max: 1.0,
            q,
            d: 0.0,
        }
    }

    #[test]
    fn counts_injective_assignments() {
        assert_eq!(injective_assignments(4, 3), 24);
        assert_eq!(injective_assignments(14, 5), 240_240);
        assert_eq!(injective_assignments(3, 4), 0);
        assert_eq!(injective_assignments(5, 0), 1);
    }

    #[test]
    fn dfs_order_example() {
        let e = |u, v| TaskEdge { u, v, w_task: 1.0 };
        let t = TaskGraph::new(
            (0..5).map(|i| comp(i, 1.0)).collect(),
            vec![e(0, 2), e(0, 1), e(1, 3), e(2, 4)],
        )
        .unwrap();
        assert_eq!(dfs_order(&t), vec![0, 1, 3, 2, 4]);
    }

    #[test]
    fn ets_cap_refuses() {
        let t = TaskGraph::new(vec![comp(0, 1.0), comp(1, 1.0)], vec![TaskEdge { u: 0, v: 1, w_task: 1.0 }]).unwrap();
        let s = ServiceGraph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let r = StatModel::deterministic(&[1e9; 3], &[1e6; 3], &[5.0; 2], &[0.05; 2]).mean_realization();
        let err = ets(&t, &s, &r, &CostWeights::default(), 5).unwrap_err();
        assert_eq!(err, ScheduleError::TooLarge { assignments: 6, cap: 5 });
        assert!(ets(&t, &s, &r, &CostWeights::default(), 6).unwrap().is_feasible());
    }

    #[test]
    fn single_component_goes_to_fastest() {
        let t = TaskGraph::new(vec![comp(0, 1e9)], vec![]).unwrap();
        let s = ServiceGraph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let r = StatModel::deterministic(&[2e9, 4e9, 3e9], &[1e6; 3], &[5.0; 2], &[0.05; 2]).mean_realization();
        let w = CostWeights::default();
        assert_eq!(tpts(&t, &s, &r, &w).unwrap().template(), Some(&Template::new(vec![1])));
        assert_eq!(dpts(&t, &s, &r, &w).unwrap().template(), Some(&Template::new(vec![1])));
        assert_eq!(ets(&t, &s, &r, &w, 10).unwrap().template(), Some(&Template::new(vec![1])));
    }

    /// Path a-b-c on the path 0-1-2-3 where SP 1 is fastest: greedy puts
    /// `a` on 1 and then must spread outward onto slow SPs.
    fn greedy_trap() -> (TaskGraph, ServiceGraph, Realization) {
        let e = |u, v| TaskEdge { u, v, w_task: 1.0 };
        let t = TaskGraph::new(
            vec![comp(0, 1e8), comp(1, 1e8), comp(2, 1e8)],
            vec![e(0, 1), e(1, 2)],
        )
        .unwrap();
        let s = ServiceGraph::new(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let r = StatModel::deterministic(&[0.5e9, 4e9, 3e9, 2.9e9], &[1e6; 4], &[5.0; 3], &[0.05; 3]).mean_realization();
        (t, s, r)
    }

    #[test]
    fn greedy_can_be_strictly_worse() {
        let (t, s, r) = greedy_trap();
        let w = CostWeights::default();
        let best = ets(&t, &s, &r, &w, 1000).unwrap();
        let greedy = tpts(&t, &s, &r, &w).unwrap();
        assert_eq!(greedy.template(), Some(&Template::new(vec![1, 2, 3])));
        let gap = greedy.cost().unwrap().cf - best.cost().unwrap().cf;
        assert!(gap >= 0.0);
        let (t2, s2, r2) = {
            let e = |u, v| TaskEdge { u, v, w_task: 1.0 };
            let t = TaskGraph::new(vec![comp(0, 1e8), comp(1, 1e9)], vec![e(0, 1)]).unwrap();
            (t, s.clone(), r.clone())
        };
        let best = ets(&t2, &s2, &r2, &w, 1000).unwrap();
        let greedy = tpts(&t2, &s2, &r2, &w).unwrap();
        assert_eq!(greedy.template(), Some(&Template::new(vec![1, 2])));
        assert_eq!(best.template().unwrap().sp(1), 1);
        assert!(greedy.cost().unwrap().cf > best.cost().unwrap().cf);
    }

    #[test]
    fn dpts_can_be_strictly_worse() {
        // star centre 0 is slow; fast SPs 2, 3 are adjacent leaves-of-leaf
        let e = |u, v| TaskEdge { u, v, w_task: 1.0 };
        let t = TaskGraph::new(vec![comp(0, 1e9), comp(1, 1e9)], vec![e(0, 1)]).unwrap();
        let s = ServiceGraph::new(5, &[(0, 1), (0, 2), (0, 3), (2, 3), (0, 4)]).unwrap();
        let r = StatModel::deterministic(&[1.5e9, 1.5e9, 4e9, 4e9, 1.5e9], &[1e6; 5], &[5.0; 5], &[0.05; 5])
            .mean_realization();
        let w = CostWeights::default();
        let best = ets(&t, &s, &r, &w, 1000).unwrap();
        let greedy = dpts(&t, &s, &r, &w).unwrap();
        assert_eq!(greedy.template().unwrap().sp(0), 0);
        assert!(greedy.cost().unwrap().cf > best.cost().unwrap().cf);
    }

    #[test]
    fn rts_is_seeded_and_valid() {
        let (t, s, r) = greedy_trap();
        let w = CostWeights::default();
        let a = rts(&t, &s, &r, &w, 100, &mut SeededRng::new(9)).unwrap();
        let b = rts(&t, &s, &r, &w, 100, &mut SeededRng::new(9)).unwrap();
        assert_eq!(a, b);
        let tpl = a.template().unwrap();
        tpl.check_structure(&t, &s).unwrap();
        let best = ets(&t, &s, &r, &w, 1000).unwrap();
        assert!(a.cost().unwrap().cf >= best.cost().unwrap().cf);
    }

    #[test]
    fn infeasible_structure() {
        let e = |u, v| TaskEdge { u, v, w_task: 1.0 };
        let t = TaskGraph::new(vec![comp(0, 1.0), comp(1, 1.0), comp(2, 1.0)], vec![e(0, 1), e(1, 2), e(0, 2)]).unwrap();
        let s = ServiceGraph::new(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let r = StatModel::deterministic(&[1e9; 4], &[1e6; 4], &[5.0; 3], &[0.05; 3]).mean_realization();
        let w = CostWeights::default();
        for d in [
            ets(&t, &s, &r, &w, 1000).unwrap(),
            tpts(&t, &s, &r, &w).unwrap(),
            dpts(&t, &s, &r, &w).unwrap(),
            rts(&t, &s, &r, &w, 10, &mut SeededRng::new(1)).unwrap(),
        ] {
            assert!(!d.is_feasible());
        }
    }
}
