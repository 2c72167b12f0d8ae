//! Pruned backtracking search for injective, edge-preserving templates.
//!
//! The offline and online schedulers differ only in which (component, SP)
//! pairs and which (task edge, service edge) pairs they admit, and in the
//! cost they minimize. Both plug those into a [`SearchSpace`].

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{CostBreakdown, CostError, CostTable, CostWeights};
use crate::graph::{ComponentId, GraphError, ServiceGraph, SpId, TaskGraph, Template, TemplateError};
use crate::stochastic::DistError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("risk thresholds must lie in (0, 1], got xi = {xi}, xi_prime = {xi_prime}")]
    Risk { xi: f64, xi_prime: f64 },
    #[error("exhaustive search over {assignments} assignments exceeds the cap of {cap}")]
    TooLarge { assignments: u128, cap: u128 },
}

/// Why no template could be produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Infeasibility {
    /// These components have no admissible SP at all.
    NoCandidates { components: Vec<ComponentId> },
    /// Every component has candidates but no combination satisfies the
    /// structural and edge constraints.
    NoTemplate,
}

impl fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Infeasibility::NoCandidates { components } => {
                write!(f, "no admissible SP for component(s) {components:?}")
            }
            Infeasibility::NoTemplate => f.write_str("no template satisfies the edge constraints"),
        }
    }
}

/// A chosen template with its cost, or the reason there is none.
#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    Selected { template: Template, cost: CostBreakdown },
    Infeasible(Infeasibility),
}

impl Decision {
    pub fn template(&self) -> Option<&Template> {
        match self {
            Decision::Selected { template, .. } => Some(template),
            Decision::Infeasible(_) => None,
        }
    }

    pub fn cost(&self) -> Option<&CostBreakdown> {
        match self {
            Decision::Selected { cost, .. } => Some(cost),
            Decision::Infeasible(_) => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, Decision::Selected { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Enumerate the full Cartesian product of candidates and filter at the
    /// leaves instead of backtracking in fail-first order.
    pub naive: bool,
    /// Explore anchors on the rayon pool.
    pub parallel: bool,
}

/// Per-component candidate SPs, each list ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AltMap(Vec<Vec<SpId>>);

impl AltMap {
    pub fn new(candidates: Vec<Vec<SpId>>) -> Self {
        Self(candidates)
    }

    pub fn candidates(&self, n: ComponentId) -> &[SpId] {
        &self.0[n]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Components left without any candidate.
    pub fn empty_components(&self) -> Vec<ComponentId> {
        (0..self.0.len()).filter(|&n| self.0[n].is_empty()).collect()
    }

    pub fn as_slice(&self) -> &[Vec<SpId>] {
        &self.0
    }
}

/// Complete candidate templates, sorted and free of duplicates.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CandidateSet(Vec<Template>);

impl CandidateSet {
    pub fn from_templates(mut templates: Vec<Template>) -> Self {
        templates.sort_unstable();
        templates.dedup();
        Self(templates)
    }

    pub fn templates(&self) -> &[Template] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn union(sets: impl IntoIterator<Item = CandidateSet>) -> Self {
        Self::from_templates(sets.into_iter().flat_map(|s| s.0).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PivotChoice {
    pub pivot: ComponentId,
    pub eccentricity: usize,
    /// Candidates of every component against the whole service graph;
    /// the pivot's entry lists the anchors.
    pub alternatives: AltMap,
}

impl PivotChoice {
    pub fn anchors(&self) -> &[SpId] {
        self.alternatives.candidates(self.pivot)
    }
}

/// A task and service graph together with the admissibility tables of one
/// scheduling problem.
pub struct SearchSpace<'a> {
    task: &'a TaskGraph,
    serv: &'a ServiceGraph,
    node_ok: Vec<bool>,
    edge_ok: Vec<bool>,
    /// Per component: (neighbor, task edge index).
    task_adj: Vec<Vec<(ComponentId, usize)>>,
}

impl<'a> SearchSpace<'a> {
    /// `node_ok[n * |V_serv| + m]` admits SP `m` for component `n`;
    /// `edge_ok[k * |E_serv| + e]` admits service edge `e` for task edge `k`.
    pub fn new(task: &'a TaskGraph, serv: &'a ServiceGraph, node_ok: Vec<bool>, edge_ok: Vec<bool>) -> Self {
        assert_eq!(node_ok.len(), task.len() * serv.len());
        assert_eq!(edge_ok.len(), task.edges().len() * serv.edges().len());
        let mut task_adj = vec![Vec::new(); task.len()];
        for (k, e) in task.edges().iter().enumerate() {
            task_adj[e.u].push((e.v, k));
            task_adj[e.v].push((e.u, k));
        }
        Self {
            task,
            serv,
            node_ok,
            edge_ok,
            task_adj,
        }
    }

    pub fn task(&self) -> &TaskGraph {
        self.task
    }

    pub fn serv(&self) -> &ServiceGraph {
        self.serv
    }

    pub fn node_ok(&self, n: ComponentId, m: SpId) -> bool {
        self.node_ok[n * self.serv.len() + m]
    }

    pub fn edge_ok(&self, task_edge: usize, serv_edge: usize) -> bool {
        self.edge_ok[task_edge * self.serv.edges().len() + serv_edge]
    }

    fn task_deg(&self, n: ComponentId) -> (usize, usize) {
        let t = self.task.topology();
        (t.degree(n).unwrap(), t.max_neighborhood_degree(n).unwrap())
    }

    /// Candidates against the whole service graph: admissible, and at least
    /// the component's degree and maximum neighborhood-degree.
    pub fn alternatives(&self) -> AltMap {
        let topo = self.serv.topology();
        AltMap(
            (0..self.task.len())
                .map(|n| {
                    let (deg, mn) = self.task_deg(n);
                    (0..self.serv.len())
                        .filter(|&m| {
                            self.node_ok(n, m)
                                && deg <= topo.degree(m).unwrap()
                                && mn <= topo.max_neighborhood_degree(m).unwrap()
                        })
                        .collect()
                })
                .collect(),
        )
    }

    /// Component minimizing `|ASP| · Ecc`, lowest id on ties.
    pub fn pivot(&self) -> Result<PivotChoice, Infeasibility> {
        let alternatives = self.alternatives();
        let empty = alternatives.empty_components();
        if !empty.is_empty() {
            return Err(Infeasibility::NoCandidates { components: empty });
        }
        let mut best: Option<(usize, ComponentId, usize)> = None;
        for n in 0..self.task.len() {
            let ecc = self.task.eccentricity(n).unwrap();
            let score = alternatives.candidates(n).len() * ecc;
            if best.is_none_or(|(s, _, _)| score < s) {
                best = Some((score, n, ecc));
            }
        }
        let (_, pivot, eccentricity) = best.expect("task graphs are non-empty");
        Ok(PivotChoice {
            pivot,
            eccentricity,
            alternatives,
        })
    }

    /// Candidates inside the ball of radius `Ecc(pivot)` around `anchor`.
    /// `None` when the ball holds fewer SPs than the task has components.
    ///
    /// A component `n` may only use SPs no farther from the anchor than it
    /// is from the pivot, so the pivot itself can only sit on the anchor.
    /// Degree and neighborhood-degree are counted inside the ball.
    pub fn region(&self, pivot: ComponentId, anchor: SpId) -> Option<AltMap> {
        let radius = self.task.eccentricity(pivot).unwrap();
        let ball = self.serv.topology().ball(anchor, radius).unwrap();
        if ball.len() < self.task.len() {
            return None;
        }
        let task_topo = self.task.topology();
        Some(AltMap(
            (0..self.task.len())
                .map(|n| {
                    let (deg, mn) = self.task_deg(n);
                    let reach = task_topo.dist_unchecked(n, pivot).hops().expect("task graphs are connected");
                    ball.nodes()
                        .iter()
                        .copied()
                        .filter(|&m| {
                            ball.hops_from_center(m).unwrap() <= reach
                                && self.node_ok(n, m)
                                && deg <= ball.degree(m).unwrap()
                                && mn <= ball.max_neighborhood_degree(m).unwrap()
                        })
                        .collect()
                })
                .collect(),
        ))
    }

    /// Calls `visit` once per injective assignment drawn from `candi` that
    /// maps every task edge onto an admissible service edge.
    pub fn for_each_template<F: FnMut(&[SpId])>(&self, candi: &AltMap, naive: bool, mut visit: F) {
        let n = self.task.len();
        if candi.len() != n || candi.as_slice().iter().any(Vec::is_empty) {
            return;
        }
        let order: Vec<ComponentId> = if naive {
            (0..n).collect()
        } else {
            let mut order: Vec<ComponentId> = (0..n).collect();
            order.sort_by_key(|&c| (candi.candidates(c).len(), c));
            order
        };
        let mut state = Backtrack {
            assignment: vec![usize::MAX; n],
            used: vec![false; self.serv.len()],
        };
        if naive {
            self.naive_rec(candi, &order, 0, &mut state, &mut visit);
        } else {
            self.prune_rec(candi, &order, 0, &mut state, &mut visit);
        }
    }

    fn edge_fits(&self, task_edge: usize, m: SpId, m2: SpId) -> bool {
        match self.serv.edge_id(m, m2) {
            Some(e) => self.edge_ok(task_edge, e),
            None => false,
        }
    }

    fn prune_rec<F: FnMut(&[SpId])>(
        &self,
        candi: &AltMap,
        order: &[ComponentId],
        depth: usize,
        st: &mut Backtrack,
        visit: &mut F,
    ) {
        if depth == order.len() {
            visit(&st.assignment);
            return;
        }
        let c = order[depth];
        for &m in candi.candidates(c) {
            if st.used[m] {
                continue;
            }
            let fits = self.task_adj[c].iter().all(|&(nb, k)| {
                let other = st.assignment[nb];
                other == usize::MAX || self.edge_fits(k, m, other)
            });
            if !fits {
                continue;
            }
            st.used[m] = true;
            st.assignment[c] = m;
            self.prune_rec(candi, order, depth + 1, st, visit);
            st.assignment[c] = usize::MAX;
            st.used[m] = false;
        }
    }

    fn naive_rec<F: FnMut(&[SpId])>(
        &self,
        candi: &AltMap,
        order: &[ComponentId],
        depth: usize,
        st: &mut Backtrack,
        visit: &mut F,
    ) {
        if depth == order.len() {
            let mut seen = vec![false; self.serv.len()];
            let injective = st.assignment.iter().all(|&m| !std::mem::replace(&mut seen[m], true));
            let edges_ok = self
                .task
                .edges()
                .iter()
                .enumerate()
                .all(|(k, e)| self.edge_fits(k, st.assignment[e.u], st.assignment[e.v]));
            if injective && edges_ok {
                visit(&st.assignment);
            }
            return;
        }
        let c = order[depth];
        for &m in candi.candidates(c) {
            st.assignment[c] = m;
            self.naive_rec(candi, order, depth + 1, st, visit);
        }
        st.assignment[c] = usize::MAX;
    }

    pub fn templates(&self, candi: &AltMap, naive: bool) -> CandidateSet {
        let mut out = Vec::new();
        self.for_each_template(candi, naive, |a| out.push(Template::new(a.to_vec())));
        CandidateSet::from_templates(out)
    }

    fn anchors_map<T, F>(&self, anchors: &[SpId], parallel: bool, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(SpId) -> T + Sync,
    {
        if parallel {
            anchors.par_iter().map(|&a| f(a)).collect()
        } else {
            anchors.iter().map(|&a| f(a)).collect()
        }
    }

    /// Union over all anchors of the templates found in each region.
    pub fn candidate_set(&self, opts: SearchOptions) -> Result<CandidateSet, Infeasibility> {
        let choice = self.pivot()?;
        let sets = self.anchors_map(choice.anchors(), opts.parallel, |anchor| {
            self.region(choice.pivot, anchor)
                .map(|candi| self.templates(&candi, opts.naive))
                .unwrap_or_default()
        });
        Ok(CandidateSet::union(sets))
    }

    /// Cheapest template over all anchors under `table`, ties to the
    /// lexicographically smallest assignment. Streams the templates rather
    /// than materializing the candidate set.
    pub fn best(
        &self,
        table: &CostTable,
        w: &CostWeights,
        opts: SearchOptions,
    ) -> Result<Result<(Template, CostBreakdown), Infeasibility>, CostError> {
        let choice = match self.pivot() {
            Ok(c) => c,
            Err(why) => return Ok(Err(why)),
        };
        let per_anchor = self.anchors_map(choice.anchors(), opts.parallel, |anchor| {
            let mut best: Option<(Template, CostBreakdown)> = None;
            if let Some(candi) = self.region(choice.pivot, anchor) {
                let mut err = None;
                self.for_each_template(&candi, opts.naive, |a| {
                    if err.is_some() {
                        return;
                    }
                    let t = Template::new(a.to_vec());
                    match table.evaluate(self.task, self.serv, &t, w) {
                        Ok(cost) => keep_better(&mut best, t, cost),
                        Err(e) => err = Some(e),
                    }
                });
                if let Some(e) = err {
                    return Err(e);
                }
            }
            Ok(best)
        });
        let mut best = None;
        for found in per_anchor {
            if let Some((t, cost)) = found? {
                keep_better(&mut best, t, cost);
            }
        }
        Ok(best.ok_or(Infeasibility::NoTemplate))
    }

    /// Cheapest member of `cands`, ties to the lexicographically smallest.
    pub fn select(
        &self,
        cands: &CandidateSet,
        table: &CostTable,
        w: &CostWeights,
    ) -> Result<Option<(Template, CostBreakdown)>, CostError> {
        let mut best = None;
        for t in cands.templates() {
            let cost = table.evaluate(self.task, self.serv, t, w)?;
            keep_better(&mut best, t.clone(), cost);
        }
        Ok(best)
    }
}

struct Backtrack {
    assignment: Vec<SpId>,
    used: Vec<bool>,
}

/// Replaces `best` when `(cost.cf, template)` is strictly smaller.
pub(crate) fn keep_better(best: &mut Option<(Template, CostBreakdown)>, t: Template, cost: CostBreakdown) {
    let replace = match best {
        None => true,
        Some((bt, bc)) => cost.cf < bc.cf || (cost.cf == bc.cf && t < *bt),
    };
    if replace {
        *best = Some((t, cost));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{TaskComponent, TaskEdge};

    fn task(n: usize, edges: &[(usize, usize)]) -> TaskGraph {
        TaskGraph::new(
            (0..n)
                .map(|id| TaskComponent {
                    id,
                    t_max: 1.0,
                    q: 1.0,
                    d: 1.0,
                })
                .collect(),
            edges.iter().map(|&(u, v)| TaskEdge { u, v, w_task: 1.0 }).collect(),
        )
        .unwrap()
    }

    fn k(n: usize) -> ServiceGraph {
        let mut e = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                e.push((u, v));
            }
        }
        ServiceGraph::new(n, &e).unwrap()
    }

    fn open<'a>(t: &'a TaskGraph, s: &'a ServiceGraph) -> SearchSpace<'a> {
        SearchSpace::new(
            t,
            s,
            vec![true; t.len() * s.len()],
            vec![true; t.edges().len() * s.edges().len()],
        )
    }

    #[test]
    fn triangle_on_k4_has_24_templates() {
        let t = task(3, &[(0, 1), (1, 2), (0, 2)]);
        let s = k(4);
        let sp = open(&t, &s);
        let all = AltMap::new(vec![vec![0, 1, 2, 3]; 3]);
        assert_eq!(sp.templates(&all, false).len(), 24);
        assert_eq!(sp.templates(&all, true).len(), 24);
        assert_eq!(sp.candidate_set(SearchOptions::default()).unwrap().len(), 24);
    }

    #[test]
    fn triangle_on_tree_is_empty() {
        let t = task(3, &[(0, 1), (1, 2), (0, 2)]);
        let s = ServiceGraph::new(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let sp = open(&t, &s);
        assert!(matches!(sp.pivot(), Err(Infeasibility::NoCandidates { .. })));
        let all = AltMap::new(vec![vec![0, 1, 2, 3]; 3]);
        assert!(sp.templates(&all, false).is_empty());
    }

    #[test]
    fn path_pivot_is_middle() {
        let t = task(3, &[(0, 1), (1, 2)]);
        let s = k(4);
        let choice = open(&t, &s).pivot().unwrap();
        assert_eq!(choice.pivot, 1);
        assert_eq!(choice.eccentricity, 1);
        assert_eq!(choice.anchors(), &[0, 1, 2, 3]);
    }

    #[test]
    fn single_component_pivot() {
        let t = task(1, &[]);
        let s = k(3);
        let sp = open(&t, &s);
        let choice = sp.pivot().unwrap();
        assert_eq!((choice.pivot, choice.eccentricity), (0, 0));
        assert_eq!(sp.candidate_set(SearchOptions::default()).unwrap().len(), 3);
    }

    #[test]
    fn region_pins_pivot_to_anchor() {
        let t = task(3, &[(0, 1), (1, 2)]);
        let s = k(4);
        let sp = open(&t, &s);
        let candi = sp.region(1, 2).unwrap();
        assert_eq!(candi.candidates(1), &[2]);
        assert!(candi.candidates(0).contains(&2));
        assert_eq!(candi.candidates(0).len(), 4);
    }

    #[test]
    fn small_ball_is_rejected() {
        let t = task(3, &[(0, 1), (1, 2)]);
        let s = ServiceGraph::new(4, &[(0, 1), (2, 3)]).unwrap();
        assert!(open(&t, &s).region(1, 0).is_none());
    }

    #[test]
    fn removing_edge_from_k3_kills_triangles() {
        let t = task(3, &[(0, 1), (1, 2), (0, 2)]);
        let s = ServiceGraph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let sp = open(&t, &s);
        let all = AltMap::new(vec![vec![0, 1, 2]; 3]);
        assert!(sp.templates(&all, false).is_empty());
    }

    #[test]
    fn rejected_edge_blocks_its_templates() {
        let t = task(2, &[(0, 1)]);
        let s = k(3);
        let mut edge_ok = vec![true; 3];
        edge_ok[s.edge_id(0, 1).unwrap()] = false;
        let sp = SearchSpace::new(&t, &s, vec![true; 6], edge_ok);
        let all = AltMap::new(vec![vec![0, 1, 2]; 2]);
        let got = sp.templates(&all, false);
        assert_eq!(got.len(), 4);
        assert!(got.templates().iter().all(|t| {
            let mut a = t.assignment().to_vec();
            a.sort();
            a != [0, 1]
        }));
    }

    #[test]
    fn keep_better_breaks_ties_lexicographically() {
        let c = |cf| CostBreakdown { cf, tct: 0.0, dec: 0.0 };
        let mut best = None;
        keep_better(&mut best, Template::new(vec![2, 1]), c(0.2));
        keep_better(&mut best, Template::new(vec![1, 2]), c(0.2));
        keep_better(&mut best, Template::new(vec![0, 2]), c(0.3));
        assert_eq!(best.unwrap().0, Template::new(vec![1, 2]));
    }
}
