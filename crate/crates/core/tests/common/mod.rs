#![allow(dead_code)]

use vcsched::cost::{Realization, StatModel};
use vcsched::graph::{ServiceGraph, TaskComponent, TaskEdge, TaskGraph, Template};
use vcsched::simkit::{generate_service_graph, StatParams};
use vcsched::stochastic::SeededRng;

/// Random connected task: a random tree plus a few chords.
pub fn random_task(n: usize, rng: &mut SeededRng) -> TaskGraph {
    let components: Vec<TaskComponent> = (0..n)
        .map(|id| TaskComponent {
            id,
            t_max: rng.uniform(0.08, 0.3),
            q: rng.uniform(0.1e9, 0.3e9),
            d: rng.uniform(100e3, 500e3),
        })
        .collect();
    let mut pairs: Vec<(usize, usize)> = (1..n).map(|v| (rng.below(v), v)).collect();
    for _ in 0..rng.below(n) {
        let (u, v) = (rng.below(n), rng.below(n));
        let (u, v) = (u.min(v), u.max(v));
        if u != v && !pairs.iter().any(|&(a, b)| (a.min(b), a.max(b)) == (u, v)) {
            pairs.push((u, v));
        }
    }
    let edges = pairs
        .into_iter()
        .map(|(u, v)| TaskEdge {
            u,
            v,
            w_task: rng.uniform(0.2, 0.6),
        })
        .collect();
    TaskGraph::new(components, edges).unwrap()
}

pub struct Instance {
    pub task: TaskGraph,
    pub serv: ServiceGraph,
    pub model: StatModel,
    pub real: Realization,
}

/// Task of `n_task` components on a connected service graph of at most
/// `max_sps` SPs, with a Table III model and one realization.
pub fn random_instance(seed: u64, n_task: usize, max_sps: usize) -> Instance {
    let rng = SeededRng::new(seed);
    let mut r = rng.child(0);
    let task = random_task(n_task, &mut r);
    let n_sps = n_task + r.below(max_sps - n_task + 1);
    let max_edges = n_sps * (n_sps - 1) / 2;
    let n_edges = (n_sps - 1) + r.below(max_edges - (n_sps - 1) + 1);
    let serv = generate_service_graph(n_sps, n_edges, &mut rng.child(1)).unwrap();
    let model = StatParams::default().draw_model(&serv, &mut rng.child(2));
    let real = model.realize(&mut rng.child(3));
    Instance { task, serv, model, real }
}

/// Every injective assignment of `n` components to `m` SPs.
pub fn all_injective(n: usize, m: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, m: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for s in 0..m {
            if !used[s] {
                used[s] = true;
                cur.push(s);
                go(n, m, cur, used, out);
                cur.pop();
                used[s] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(n, m, &mut Vec::new(), &mut vec![false; m], &mut out);
    out
}

/// Injective and every task edge lands on a service edge.
pub fn structurally_valid(task: &TaskGraph, serv: &ServiceGraph, a: &[usize]) -> bool {
    let mut seen = vec![false; serv.len()];
    for &s in a {
        if s >= serv.len() || seen[s] {
            return false;
        }
        seen[s] = true;
    }
    task.edges().iter().all(|e| {
        let (x, y) = (a[e.u], a[e.v]);
        serv.edges().iter().any(|&(p, q)| (p, q) == (x, y) || (p, q) == (y, x))
    })
}

/// Structure plus realized deadlines and contact durations, written out
/// longhand.
pub fn realized_valid(task: &TaskGraph, serv: &ServiceGraph, real: &Realization, tpl: &Template) -> bool {
    let a = tpl.assignment();
    if a.len() != task.len() || !structurally_valid(task, serv, a) {
        return false;
    }
    let deadlines = task.components().iter().all(|c| {
        let m = a[c.id];
        c.q / real.f[m] + c.d / real.r[m] <= c.t_max
    });
    let contacts = task.edges().iter().all(|e| {
        let (x, y) = (a[e.u], a[e.v]);
        let k = serv.edges().iter().position(|&(p, q)| (p, q) == (x, y) || (p, q) == (y, x)).unwrap();
        real.t_conn[k] >= e.w_task
    });
    deadlines && contacts
}
