//! Task and service graph structures plus the structural metrics used to
//! prune the template search (neighborhood, degree, maximum
//! neighborhood-degree, hop distance, eccentricity and radius balls).
//!
//! Graphs are immutable once built. Every metric is memoized at
//! construction, so lookups during the search are O(1).

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense index of a node inside a graph.
pub type NodeId = usize;
/// Dense index of a task component.
pub type ComponentId = usize;
/// Dense index of a service provider (vehicle).
pub type SpId = usize;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("edges[{index}]: self-loop on node {node}")]
    SelfLoop { index: usize, node: NodeId },
    #[error("edges[{index}]: duplicate edge ({u}, {v})")]
    DuplicateEdge { index: usize, u: NodeId, v: NodeId },
    #[error("edges[{index}]: endpoint {node} out of range (graph has {len} nodes)")]
    EndpointOutOfRange { index: usize, node: NodeId, len: usize },
    #[error("component ids must be dense 0..{len}: {detail}")]
    NonDenseIds { len: usize, detail: String },
    #[error("{location}: {message}")]
    InvalidAttribute { location: String, message: String },
    #[error("task graph is not connected: node {0} is unreachable from node 0")]
    NotConnected(NodeId),
    #[error("task graph has no components")]
    Empty,
    #[error("node {from} cannot reach node {to} inside a graph required to be connected")]
    Unreachable { from: NodeId, to: NodeId },
}

/// Hop distance between two nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Distance {
    Hops(usize),
    Unreachable,
}

impl Distance {
    pub fn hops(self) -> Option<usize> {
        match self {
            Distance::Hops(h) => Some(h),
            Distance::Unreachable => None,
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Hops(h) => write!(f, "{h}"),
            Distance::Unreachable => f.write_str("unreachable"),
        }
    }
}

/// Undirected simple graph with memoized structural metrics.
#[derive(Debug, Clone)]
pub struct Topology {
    adjacency: Vec<Vec<NodeId>>,
    edges: Vec<(NodeId, NodeId)>,
    edge_index: HashMap<(NodeId, NodeId), usize>,
    mndeg: Vec<usize>,
    // Row-major all-pairs hop distances, `None` when unreachable.
    dist: Vec<Option<u32>>,
}

fn key(u: NodeId, v: NodeId) -> (NodeId, NodeId) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

impl Topology {
    /// Builds a simple undirected graph on `n` nodes. Edge order is kept and
    /// defines the edge indices returned by [`Topology::edge_id`].
    pub fn new(n: usize, edges: &[(NodeId, NodeId)]) -> Result<Self, GraphError> {
        match structural_violations(n, edges).into_iter().next() {
            Some(err) => Err(err),
            None => Ok(Self::build(n, edges)),
        }
    }

    fn build(n: usize, edges: &[(NodeId, NodeId)]) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        let mut edge_index = HashMap::with_capacity(edges.len());
        let mut normalized = Vec::with_capacity(edges.len());
        for (i, &(u, v)) in edges.iter().enumerate() {
            adjacency[u].push(v);
            adjacency[v].push(u);
            edge_index.insert(key(u, v), i);
            normalized.push(key(u, v));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let mndeg = (0..n)
            .map(|v| adjacency[v].iter().map(|&u| adjacency[u].len()).max().unwrap_or(0))
            .collect();
        let mut dist = vec![None; n * n];
        let mut queue = VecDeque::new();
        for src in 0..n {
            let row = &mut dist[src * n..(src + 1) * n];
            row[src] = Some(0);
            queue.clear();
            queue.push_back(src);
            while let Some(u) = queue.pop_front() {
                let du = row[u].unwrap();
                for &w in &adjacency[u] {
                    if row[w].is_none() {
                        row[w] = Some(du + 1);
                        queue.push_back(w);
                    }
                }
            }
        }
        Self {
            adjacency,
            edges: normalized,
            edge_index,
            mndeg,
            dist,
        }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(min, max)` pairs in construction order.
    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    fn check(&self, v: NodeId) -> Result<(), GraphError> {
        if v < self.node_count() {
            Ok(())
        } else {
            Err(GraphError::UnknownNode(v))
        }
    }

    /// Sorted neighbors of `v`, excluding `v` itself.
    pub fn neighborhood(&self, v: NodeId) -> Result<&[NodeId], GraphError> {
        self.check(v)?;
        Ok(&self.adjacency[v])
    }

    pub fn degree(&self, v: NodeId) -> Result<usize, GraphError> {
        self.check(v)?;
        Ok(self.adjacency[v].len())
    }

    /// Largest degree among the neighbors of `v`; 0 for an isolated node.
    pub fn max_neighborhood_degree(&self, v: NodeId) -> Result<usize, GraphError> {
        self.check(v)?;
        Ok(self.mndeg[v])
    }

    pub fn distance(&self, u: NodeId, v: NodeId) -> Result<Distance, GraphError> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.dist_unchecked(u, v))
    }

    pub(crate) fn dist_unchecked(&self, u: NodeId, v: NodeId) -> Distance {
        match self.dist[u * self.node_count() + v] {
            Some(h) => Distance::Hops(h as usize),
            None => Distance::Unreachable,
        }
    }

    /// Largest hop distance from `v` to any other node. Fails when some node
    /// cannot be reached.
    pub fn eccentricity(&self, v: NodeId) -> Result<usize, GraphError> {
        self.check(v)?;
        let mut ecc = 0;
        for u in 0..self.node_count() {
            match self.dist_unchecked(v, u) {
                Distance::Hops(h) => ecc = ecc.max(h),
                Distance::Unreachable => return Err(GraphError::Unreachable { from: v, to: u }),
            }
        }
        Ok(ecc)
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.edge_index.contains_key(&key(u, v))
    }

    /// Index of the edge `{u, v}` in construction order.
    pub fn edge_id(&self, u: NodeId, v: NodeId) -> Option<usize> {
        self.edge_index.get(&key(u, v)).copied()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        n == 0 || (0..n).all(|v| self.dist[v].is_some())
    }

    /// Induced subgraph on every node within `radius` hops of `center`.
    pub fn ball(&self, center: NodeId, radius: usize) -> Result<Ball, GraphError> {
        self.check(center)?;
        let nodes: Vec<NodeId> = (0..self.node_count())
            .filter(|&u| matches!(self.dist_unchecked(center, u), Distance::Hops(h) if h <= radius))
            .collect();
        let mut local = vec![None; self.node_count()];
        for (i, &u) in nodes.iter().enumerate() {
            local[u] = Some(i);
        }
        let edges: Vec<(NodeId, NodeId)> = self
            .edges
            .iter()
            .copied()
            .filter(|&(u, v)| local[u].is_some() && local[v].is_some())
            .collect();
        let local_edges: Vec<(NodeId, NodeId)> = edges
            .iter()
            .map(|&(u, v)| (local[u].unwrap(), local[v].unwrap()))
            .collect();
        let topology = Topology::build(nodes.len(), &local_edges);
        let hops = nodes
            .iter()
            .map(|&u| self.dist_unchecked(center, u).hops().unwrap())
            .collect();
        Ok(Ball {
            center,
            radius,
            nodes,
            edges,
            local,
            hops,
            topology,
        })
    }
}

/// Every structural problem with an edge list, in input order.
pub fn structural_violations(n: usize, edges: &[(NodeId, NodeId)]) -> Vec<GraphError> {
    let mut out = Vec::new();
    let mut seen = HashMap::new();
    for (index, &(u, v)) in edges.iter().enumerate() {
        if u >= n || v >= n {
            let node = if u >= n { u } else { v };
            out.push(GraphError::EndpointOutOfRange { index, node, len: n });
            continue;
        }
        if u == v {
            out.push(GraphError::SelfLoop { index, node: u });
            continue;
        }
        if seen.insert(key(u, v), index).is_some() {
            out.push(GraphError::DuplicateEdge { index, u, v });
        }
    }
    out
}

/// Radius-bounded induced subgraph of a host graph. Node ids exposed by the
/// accessors are the host's ids.
#[derive(Debug, Clone)]
pub struct Ball {
    center: NodeId,
    radius: usize,
    nodes: Vec<NodeId>,
    edges: Vec<(NodeId, NodeId)>,
    local: Vec<Option<usize>>,
    hops: Vec<usize>,
    topology: Topology,
}

impl Ball {
    pub fn center(&self) -> NodeId {
        self.center
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Retained host nodes, ascending.
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    /// Host edges among retained nodes.
    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.local.get(v).is_some_and(|l| l.is_some())
    }

    fn local(&self, v: NodeId) -> Result<usize, GraphError> {
        self.local
            .get(v)
            .copied()
            .flatten()
            .ok_or(GraphError::UnknownNode(v))
    }

    /// Degree counted inside the ball.
    pub fn degree(&self, v: NodeId) -> Result<usize, GraphError> {
        self.topology.degree(self.local(v)?)
    }

    /// Maximum neighborhood-degree counted inside the ball.
    pub fn max_neighborhood_degree(&self, v: NodeId) -> Result<usize, GraphError> {
        self.topology.max_neighborhood_degree(self.local(v)?)
    }

    /// Hops from the center.
    pub fn hops_from_center(&self, v: NodeId) -> Result<usize, GraphError> {
        Ok(self.hops[self.local(v)?])
    }
}

/// A task component: tolerable completion time (s), CPU cycles, input bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskComponent {
    pub id: ComponentId,
    pub t_max: f64,
    pub q: f64,
    pub d: f64,
}

/// Data-exchange requirement between two components; `w_task` in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskEdge {
    pub u: ComponentId,
    pub v: ComponentId,
    pub w_task: f64,
}

/// Connected, simple, undirected weighted task graph.
#[derive(Debug, Clone)]
pub struct TaskGraph {
    components: Vec<TaskComponent>,
    edges: Vec<TaskEdge>,
    topology: Topology,
    eccentricity: Vec<usize>,
}

impl TaskGraph {
    pub fn new(components: Vec<TaskComponent>, edges: Vec<TaskEdge>) -> Result<Self, GraphError> {
        if let Some(err) = task_violations(&components, &edges).into_iter().next() {
            return Err(err);
        }
        let mut components = components;
        components.sort_by_key(|c| c.id);
        let pairs: Vec<_> = edges.iter().map(|e| (e.u, e.v)).collect();
        let topology = Topology::build(components.len(), &pairs);
        let eccentricity = (0..components.len())
            .map(|v| topology.eccentricity(v))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            components,
            edges,
            topology,
            eccentricity,
        })
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[TaskComponent] {
        &self.components
    }

    pub fn component(&self, n: ComponentId) -> &TaskComponent {
        &self.components[n]
    }

    /// Edges in input order; index `i` matches `topology().edges()[i]`.
    pub fn edges(&self) -> &[TaskEdge] {
        &self.edges
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn eccentricity(&self, n: ComponentId) -> Result<usize, GraphError> {
        self.eccentricity
            .get(n)
            .copied()
            .ok_or(GraphError::UnknownNode(n))
    }

    /// Required exchange duration on the edge `{u, v}`, if present.
    pub fn w_task(&self, u: ComponentId, v: ComponentId) -> Option<f64> {
        self.topology.edge_id(u, v).map(|i| self.edges[i].w_task)
    }
}

/// Every invariant violation of a prospective task graph.
pub fn task_violations(components: &[TaskComponent], edges: &[TaskEdge]) -> Vec<GraphError> {
    let n = components.len();
    let mut out = Vec::new();
    if n == 0 {
        out.push(GraphError::Empty);
        return out;
    }
    let mut seen = vec![false; n];
    for c in components {
        if c.id >= n {
            out.push(GraphError::NonDenseIds {
                len: n,
                detail: format!("id {} out of range", c.id),
            });
        } else if std::mem::replace(&mut seen[c.id], true) {
            out.push(GraphError::NonDenseIds {
                len: n,
                detail: format!("id {} repeated", c.id),
            });
        }
        let loc = format!("components[{}]", c.id);
        if !(c.t_max > 0.0 && c.t_max.is_finite()) {
            out.push(attr(&loc, format!("t_max must be > 0, got {}", c.t_max)));
        }
        if !(c.q > 0.0 && c.q.is_finite()) {
            out.push(attr(&loc, format!("q must be > 0, got {}", c.q)));
        }
        if !(c.d >= 0.0 && c.d.is_finite()) {
            out.push(attr(&loc, format!("d must be >= 0, got {}", c.d)));
        }
    }
    for (i, e) in edges.iter().enumerate() {
        if !(e.w_task > 0.0 && e.w_task.is_finite()) {
            out.push(attr(
                &format!("edges[{i}]"),
                format!("w_task must be > 0, got {}", e.w_task),
            ));
        }
    }
    let pairs: Vec<_> = edges.iter().map(|e| (e.u, e.v)).collect();
    let structural = structural_violations(n, &pairs);
    let clean = structural.is_empty();
    out.extend(structural);
    if clean {
        let topo = Topology::build(n, &pairs);
        if let Some(v) = (0..n).find(|&v| topo.dist_unchecked(0, v) == Distance::Unreachable) {
            out.push(GraphError::NotConnected(v));
        }
    }
    out
}

fn attr(location: &str, message: String) -> GraphError {
    GraphError::InvalidAttribute {
        location: location.to_string(),
        message,
    }
}

/// Vehicular cloud topology. Connectivity is not required.
#[derive(Debug, Clone)]
pub struct ServiceGraph {
    topology: Topology,
}

impl ServiceGraph {
    pub fn new(n_providers: usize, edges: &[(SpId, SpId)]) -> Result<Self, GraphError> {
        Ok(Self {
            topology: Topology::new(n_providers, edges)?,
        })
    }

    pub fn len(&self) -> usize {
        self.topology.node_count()
    }

    pub fn is_empty(&self) -> bool {
        self.topology.node_count() == 0
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    /// Edges as `(min, max)` pairs; the position is the service edge index.
    pub fn edges(&self) -> &[(SpId, SpId)] {
        self.topology.edges()
    }

    pub fn edge_id(&self, m: SpId, m2: SpId) -> Option<usize> {
        self.topology.edge_id(m, m2)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TemplateError {
    #[error("template assigns {got} components, task has {expected}")]
    NotTotal { expected: usize, got: usize },
    #[error("component {component} assigned to unknown SP {sp}")]
    UnknownProvider { component: ComponentId, sp: SpId },
    #[error("SP {sp} hosts both component {first} and component {second}")]
    NotInjective {
        sp: SpId,
        first: ComponentId,
        second: ComponentId,
    },
    #[error("task edge ({u}, {v}) maps to SPs ({su}, {sv}) which are not adjacent")]
    EdgeNotPreserved {
        u: ComponentId,
        v: ComponentId,
        su: SpId,
        sv: SpId,
    },
}

/// Component-to-SP assignment: `assignment()[n]` hosts component `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Template(Vec<SpId>);

impl Template {
    pub fn new(assignment: Vec<SpId>) -> Self {
        Self(assignment)
    }

    pub fn assignment(&self) -> &[SpId] {
        &self.0
    }

    pub fn sp(&self, n: ComponentId) -> SpId {
        self.0[n]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<SpId> {
        self.0
    }

    /// Totality, SP ids in range and injectivity. Does not look at edges.
    pub fn check_shape(&self, task: &TaskGraph, n_providers: usize) -> Result<(), TemplateError> {
        if self.0.len() != task.len() {
            return Err(TemplateError::NotTotal {
                expected: task.len(),
                got: self.0.len(),
            });
        }
        let mut host = vec![None; n_providers];
        for (n, &sp) in self.0.iter().enumerate() {
            if sp >= n_providers {
                return Err(TemplateError::UnknownProvider { component: n, sp });
            }
            if let Some(first) = host[sp].replace(n) {
                return Err(TemplateError::NotInjective {
                    sp,
                    first,
                    second: n,
                });
            }
        }
        Ok(())
    }

    /// Full structural validity: total, injective and edge-preserving
    /// (non-induced subgraph monomorphism).
    pub fn check_structure(&self, task: &TaskGraph, serv: &ServiceGraph) -> Result<(), TemplateError> {
        self.check_shape(task, serv.len())?;
        for e in task.edges() {
            let (su, sv) = (self.0[e.u], self.0[e.v]);
            if !serv.topology().has_edge(su, sv) {
                return Err(TemplateError::EdgeNotPreserved {
                    u: e.u,
                    v: e.v,
                    su,
                    sv,
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, sp) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "s{sp}")?;
        }
        f.write_str("]")
    }
}
