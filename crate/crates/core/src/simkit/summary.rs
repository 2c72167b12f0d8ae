use serde::{Deserialize, Serialize};

use super::run::{Algorithm, EventRecord};
use super::scenario::SCHEMA_VERSION;
use crate::online::Source;

/// One event of one algorithm, in plotting order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub simulation: usize,
    pub event: usize,
    pub source: Source,
    pub cf: Option<f64>,
    pub tct: Option<f64>,
    pub dec: Option<f64>,
    pub rt_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoSummary {
    pub algo: Algorithm,
    pub n_events: usize,
    pub n_success: usize,
    /// Means over events that produced a template; `None` when none did.
    pub mean_cf: Option<f64>,
    pub mean_tct: Option<f64>,
    pub mean_dec: Option<f64>,
    /// Mean and median over all events.
    pub mean_rt: f64,
    pub median_rt: f64,
    pub reuse_rate: f64,
    pub failure_rate: f64,
    pub series: Vec<SeriesPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub algorithms: Vec<AlgoSummary>,
}

impl RunSummary {
    pub fn get(&self, algo: Algorithm) -> Option<&AlgoSummary> {
        self.algorithms.iter().find(|a| a.algo == algo)
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for x in xs {
        sum += x;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}

/// Aggregates per algorithm in `order`; algorithms present in the records
/// but absent from `order` follow in name order. Records are sorted by
/// (simulation, event) first, so the result does not depend on the order
/// they were produced in.
pub fn summarize_metrics(records: &[EventRecord], order: &[Algorithm]) -> RunSummary {
    let mut algos: Vec<Algorithm> = order.to_vec();
    let mut extra: Vec<Algorithm> = records.iter().map(|r| r.algo).filter(|a| !order.contains(a)).collect();
    extra.sort();
    extra.dedup();
    algos.extend(extra);

    let mut sorted: Vec<&EventRecord> = records.iter().collect();
    sorted.sort_by_key(|r| (r.simulation, r.event));

    let algorithms = algos
        .into_iter()
        .map(|algo| {
            let mine: Vec<&EventRecord> = sorted.iter().copied().filter(|r| r.algo == algo).collect();
            let ok: Vec<&EventRecord> = mine.iter().copied().filter(|r| r.cf.is_some()).collect();
            let n = mine.len();
            let rate = |s: Source| {
                if n == 0 {
                    0.0
                } else {
                    mine.iter().filter(|r| r.source == s).count() as f64 / n as f64
                }
            };
            let rts: Vec<f64> = mine.iter().map(|r| r.rt_seconds).collect();
            AlgoSummary {
                algo,
                n_events: n,
                n_success: ok.len(),
                mean_cf: mean(ok.iter().filter_map(|r| r.cf)),
                mean_tct: mean(ok.iter().filter_map(|r| r.tct)),
                mean_dec: mean(ok.iter().filter_map(|r| r.dec)),
                mean_rt: mean(rts.iter().copied()).unwrap_or(0.0),
                median_rt: median(&rts),
                reuse_rate: rate(Source::OfflineReused),
                failure_rate: rate(Source::Infeasible),
                series: mine
                    .iter()
                    .map(|r| SeriesPoint {
                        simulation: r.simulation,
                        event: r.event,
                        source: r.source,
                        cf: r.cf,
                        tct: r.tct,
                        dec: r.dec,
                        rt_seconds: r.rt_seconds,
                    })
                    .collect(),
            }
        })
        .collect();
    RunSummary {
        schema_version: SCHEMA_VERSION,
        algorithms,
    }
}
