//! Task, service and model files. Node ids may be integers (which must be
//! dense) or strings (numbered in order of appearance). Quantities are
//! converted to base units (cycles, bits, Hz, bit/s) here.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::cost::StatModel;
use crate::graph::{structural_violations, task_violations, GraphError, ServiceGraph, TaskComponent, TaskEdge, TaskGraph};
use crate::stochastic::DistributionSpec;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Index(u64),
    Name(String),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Index(i) => write!(f, "{i}"),
            Label::Name(s) => f.write_str(s),
        }
    }
}

/// A problem found in an input file, with its location.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub file: String,
    pub location: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.file, self.location, self.message)
    }
}

/// Dense ids assigned to file labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Labels {
    names: Vec<Label>,
    index: HashMap<Label, usize>,
}

impl Labels {
    pub fn name(&self, id: usize) -> &Label {
        &self.names[id]
    }

    pub fn id(&self, label: &Label) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    fn build(labels: &[Label], section: &str, file: &str, out: &mut Vec<Violation>) -> Self {
        let numeric = labels.iter().all(|l| matches!(l, Label::Index(_)));
        let textual = labels.iter().all(|l| matches!(l, Label::Name(_)));
        let mut names = Vec::new();
        let mut index = HashMap::new();
        let push = |out: &mut Vec<Violation>, i: usize, msg: String| {
            out.push(Violation {
                file: file.into(),
                location: format!("{section}[{i}].id"),
                message: msg,
            })
        };
        if !numeric && !textual {
            push(out, 0, "ids must be all integers or all strings".into());
            return Self::default();
        }
        if numeric {
            let n = labels.len();
            names = (0..n as u64).map(Label::Index).collect();
            for (i, l) in labels.iter().enumerate() {
                let Label::Index(v) = l else { unreachable!() };
                if *v as usize >= n {
                    push(out, i, format!("id {v} out of range: integer ids must be dense 0..{n}"));
                } else if index.insert(l.clone(), *v as usize).is_some() {
                    push(out, i, format!("id {v} repeated"));
                }
            }
        } else {
            for (i, l) in labels.iter().enumerate() {
                if index.contains_key(l) {
                    push(out, i, format!("id {l} repeated"));
                } else {
                    index.insert(l.clone(), names.len());
                    names.push(l.clone());
                }
            }
        }
        Self { names, index }
    }

    fn resolve(&self, l: &Label, file: &str, location: String, out: &mut Vec<Violation>) -> usize {
        match self.id(l) {
            Some(i) => i,
            None => {
                out.push(Violation {
                    file: file.into(),
                    location,
                    message: format!("unknown node {l}"),
                });
                usize::MAX
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CycleUnit {
    #[default]
    Cycles,
    Gigacycles,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataUnit {
    #[default]
    Bits,
    Kilobits,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FreqUnit {
    #[default]
    Hz,
    Ghz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateUnit {
    #[default]
    Bps,
    Mbps,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskUnits {
    #[serde(default)]
    pub q: CycleUnit,
    #[serde(default)]
    pub d: DataUnit,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelUnits {
    #[serde(default)]
    pub f: FreqUnit,
    #[serde(default)]
    pub r: RateUnit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentEntry {
    pub id: Label,
    pub t_max: f64,
    pub q: f64,
    pub d: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskEdgeEntry {
    pub u: Label,
    pub v: Label,
    pub w_task: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskFile {
    #[serde(default)]
    pub units: TaskUnits,
    pub components: Vec<ComponentEntry>,
    pub edges: Vec<TaskEdgeEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderEntry {
    pub id: Label,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceEdgeEntry {
    pub u: Label,
    pub v: Label,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceFile {
    pub providers: Vec<ProviderEntry>,
    pub edges: Vec<ServiceEdgeEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderModel {
    pub id: Label,
    pub f: DistributionSpec,
    pub r: DistributionSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeModel {
    pub u: Label,
    pub v: Label,
    pub t_conn: DistributionSpec,
    pub c_exch: DistributionSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default)]
    pub units: ModelUnits,
    pub providers: Vec<ProviderModel>,
    pub edges: Vec<EdgeModel>,
}

pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str, file: &str) -> Result<T, SimError> {
    serde_json::from_str(text).map_err(|e| SimError::Parse {
        path: file.into(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, SimError> {
    let text = std::fs::read_to_string(path).map_err(|source| SimError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_json(&text, &path.display().to_string())
}

fn graph_violation(e: GraphError, section: &str, labels: &Labels, file: &str) -> Violation {
    let name = |i: usize| {
        if i < labels.len() {
            labels.name(i).to_string()
        } else {
            i.to_string()
        }
    };
    let (location, message) = match e {
        GraphError::SelfLoop { index, node } => (format!("edges[{index}]"), format!("self-loop on {}", name(node))),
        GraphError::DuplicateEdge { index, u, v } => (
            format!("edges[{index}]"),
            format!("duplicate edge ({}, {})", name(u), name(v)),
        ),
        GraphError::InvalidAttribute { location, message } => {
            let location = match location.strip_prefix("components[") {
                Some(rest) => {
                    let id: usize = rest.trim_end_matches(']').parse().unwrap_or(usize::MAX);
                    format!("{section}[id {}]", name(id))
                }
                None => location,
            };
            (location, message)
        }
        GraphError::NotConnected(v) => (
            "edges".into(),
            format!("task graph is not connected: {} unreachable from {}", name(v), name(0)),
        ),
        other => (section.into(), other.to_string()),
    };
    Violation {
        file: file.into(),
        location,
        message,
    }
}

/// Task graph in base units plus its labels, or every violation found.
pub fn task_from_file(tf: &TaskFile, file: &str) -> Result<(TaskGraph, Labels), Vec<Violation>> {
    let mut out = Vec::new();
    let ids: Vec<Label> = tf.components.iter().map(|c| c.id.clone()).collect();
    let labels = Labels::build(&ids, "components", file, &mut out);
    if !out.is_empty() {
        return Err(out);
    }
    let q_scale = match tf.units.q {
        CycleUnit::Cycles => 1.0,
        CycleUnit::Gigacycles => 1e9,
    };
    let d_scale = match tf.units.d {
        DataUnit::Bits => 1.0,
        DataUnit::Kilobits => 1e3,
    };
    let components: Vec<TaskComponent> = tf
        .components
        .iter()
        .map(|c| TaskComponent {
            id: labels.id(&c.id).unwrap(),
            t_max: c.t_max,
            q: c.q * q_scale,
            d: c.d * d_scale,
        })
        .collect();
    let edges: Vec<TaskEdge> = tf
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| TaskEdge {
            u: labels.resolve(&e.u, file, format!("edges[{i}].u"), &mut out),
            v: labels.resolve(&e.v, file, format!("edges[{i}].v"), &mut out),
            w_task: e.w_task,
        })
        .collect();
    if !out.is_empty() {
        return Err(out);
    }
    let problems = task_violations(&components, &edges);
    if !problems.is_empty() {
        return Err(problems
            .into_iter()
            .map(|e| graph_violation(e, "components", &labels, file))
            .collect());
    }
    Ok((TaskGraph::new(components, edges).expect("violations already checked"), labels))
}

pub fn service_from_file(sf: &ServiceFile, file: &str) -> Result<(ServiceGraph, Labels), Vec<Violation>> {
    let mut out = Vec::new();
    let ids: Vec<Label> = sf.providers.iter().map(|p| p.id.clone()).collect();
    let labels = Labels::build(&ids, "providers", file, &mut out);
    if !out.is_empty() {
        return Err(out);
    }
    let edges: Vec<(usize, usize)> = sf
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| {
            (
                labels.resolve(&e.u, file, format!("edges[{i}].u"), &mut out),
                labels.resolve(&e.v, file, format!("edges[{i}].v"), &mut out),
            )
        })
        .collect();
    if !out.is_empty() {
        return Err(out);
    }
    let problems = structural_violations(labels.len(), &edges);
    if !problems.is_empty() {
        return Err(problems
            .into_iter()
            .map(|e| graph_violation(e, "providers", &labels, file))
            .collect());
    }
    Ok((ServiceGraph::new(labels.len(), &edges).expect("violations already checked"), labels))
}

/// Model aligned with `serv`: providers by label, edges by endpoint pair.
pub fn model_from_file(mf: &ModelFile, serv: &ServiceGraph, labels: &Labels, file: &str) -> Result<StatModel, Vec<Violation>> {
    let mut out = Vec::new();
    let f_scale = match mf.units.f {
        FreqUnit::Hz => 1.0,
        FreqUnit::Ghz => 1e9,
    };
    let r_scale = match mf.units.r {
        RateUnit::Bps => 1.0,
        RateUnit::Mbps => 1e6,
    };
    let mut f = vec![None; serv.len()];
    let mut r = vec![None; serv.len()];
    for (i, p) in mf.providers.iter().enumerate() {
        let m = labels.resolve(&p.id, file, format!("providers[{i}].id"), &mut out);
        if m == usize::MAX {
            continue;
        }
        if f[m].is_some() {
            out.push(Violation {
                file: file.into(),
                location: format!("providers[{i}].id"),
                message: format!("provider {} listed twice", p.id),
            });
        }
        f[m] = Some(p.f.scaled(f_scale));
        r[m] = Some(p.r.scaled(r_scale));
    }
    let k = serv.edges().len();
    let mut t_conn = vec![None; k];
    let mut c_exch = vec![None; k];
    for (i, e) in mf.edges.iter().enumerate() {
        let u = labels.resolve(&e.u, file, format!("edges[{i}].u"), &mut out);
        let v = labels.resolve(&e.v, file, format!("edges[{i}].v"), &mut out);
        if u == usize::MAX || v == usize::MAX {
            continue;
        }
        let Some(idx) = serv.edge_id(u, v) else {
            out.push(Violation {
                file: file.into(),
                location: format!("edges[{i}]"),
                message: format!("({}, {}) is not a service edge", e.u, e.v),
            });
            continue;
        };
        if t_conn[idx].is_some() {
            out.push(Violation {
                file: file.into(),
                location: format!("edges[{i}]"),
                message: format!("edge ({}, {}) listed twice", e.u, e.v),
            });
        }
        t_conn[idx] = Some(e.t_conn);
        c_exch[idx] = Some(e.c_exch);
    }
    for m in 0..serv.len() {
        if f[m].is_none() {
            out.push(Violation {
                file: file.into(),
                location: "providers".into(),
                message: format!("no distributions for provider {}", labels.name(m)),
            });
        }
    }
    for (idx, &(u, v)) in serv.edges().iter().enumerate() {
        if t_conn[idx].is_none() {
            out.push(Violation {
                file: file.into(),
                location: "edges".into(),
                message: format!("no distributions for edge ({}, {})", labels.name(u), labels.name(v)),
            });
        }
    }
    if !out.is_empty() {
        return Err(out);
    }
    let model = StatModel {
        f: f.into_iter().map(Option::unwrap).collect(),
        r: r.into_iter().map(Option::unwrap).collect(),
        t_conn: t_conn.into_iter().map(Option::unwrap).collect(),
        c_exch: c_exch.into_iter().map(Option::unwrap).collect(),
    };
    if let Err(e) = model.check(serv) {
        return Err(vec![Violation {
            file: file.into(),
            location: "model".into(),
            message: e.to_string(),
        }]);
    }
    Ok(model)
}

/// Inverse of `task_from_file`, in base units with integer ids.
pub fn task_to_file(task: &TaskGraph) -> TaskFile {
    TaskFile {
        units: TaskUnits::default(),
        components: task
            .components()
            .iter()
            .map(|c| ComponentEntry {
                id: Label::Index(c.id as u64),
                t_max: c.t_max,
                q: c.q,
                d: c.d,
            })
            .collect(),
        edges: task
            .edges()
            .iter()
            .map(|e| TaskEdgeEntry {
                u: Label::Index(e.u as u64),
                v: Label::Index(e.v as u64),
                w_task: e.w_task,
            })
            .collect(),
    }
}

pub fn service_to_file(serv: &ServiceGraph) -> ServiceFile {
    ServiceFile {
        providers: (0..serv.len()).map(|m| ProviderEntry { id: Label::Index(m as u64) }).collect(),
        edges: serv
            .edges()
            .iter()
            .map(|&(u, v)| ServiceEdgeEntry {
                u: Label::Index(u as u64),
                v: Label::Index(v as u64),
            })
            .collect(),
    }
}

pub fn model_to_file(serv: &ServiceGraph, model: &StatModel) -> ModelFile {
    ModelFile {
        units: ModelUnits::default(),
        providers: (0..serv.len())
            .map(|m| ProviderModel {
                id: Label::Index(m as u64),
                f: model.f[m],
                r: model.r[m],
            })
            .collect(),
        edges: serv
            .edges()
            .iter()
            .enumerate()
            .map(|(k, &(u, v))| EdgeModel {
                u: Label::Index(u as u64),
                v: Label::Index(v as u64),
                t_conn: model.t_conn[k],
                c_exch: model.c_exch[k],
            })
            .collect(),
    }
}
