use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::run::EventRecord;
use super::summary::RunSummary;
use super::SimError;

pub const RECORD_COLUMNS: [&str; 7] = ["event", "algo", "source", "cf", "tct", "dec", "rt"];
pub const MEANS_COLUMNS: [&str; 10] = [
    "algo",
    "n_events",
    "n_success",
    "cf",
    "tct",
    "dec",
    "rt_mean",
    "rt_median",
    "reuse_rate",
    "failure_rate",
];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SimError + '_ {
    move |source| SimError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, SimError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

/// One JSON object per line.
pub fn write_jsonl<T: Serialize, W: Write>(out: &mut W, items: &[T]) -> Result<(), SimError> {
    for item in items {
        let line = serde_json::to_string(item).map_err(|e| SimError::Internal(e.to_string()))?;
        writeln!(out, "{line}").map_err(|source| SimError::Io {
            path: "<output>".into(),
            source,
        })?;
    }
    Ok(())
}

pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(input: R, origin: &str) -> Result<Vec<T>, SimError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|source| SimError::Io {
            path: origin.to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| SimError::Parse {
            path: origin.to_string(),
            line: i + 1,
            column: e.column(),
            message: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

pub fn save_records(path: &Path, records: &[EventRecord]) -> Result<(), SimError> {
    let mut w = create(path)?;
    write_jsonl(&mut w, records)?;
    w.flush().map_err(io_err(path))
}

pub fn load_records(path: &Path) -> Result<Vec<EventRecord>, SimError> {
    let f = File::open(path).map_err(io_err(path))?;
    read_jsonl(BufReader::new(f), &path.display().to_string())
}

pub fn save_summary(path: &Path, summary: &RunSummary) -> Result<(), SimError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, summary).map_err(|e| SimError::Internal(e.to_string()))?;
    writeln!(w).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn load_summary(path: &Path) -> Result<RunSummary, SimError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| SimError::Parse {
        path: path.display().to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> SimError {
    SimError::Internal(format!("csv: {e}"))
}

/// Flat per-event table. `event` numbers the distinct (simulation, event)
/// pairs in ascending order.
pub fn write_records_csv<W: Write>(out: W, records: &[EventRecord]) -> Result<(), SimError> {
    let mut index = BTreeMap::new();
    for r in records {
        index.entry((r.simulation, r.event)).or_insert(0usize);
    }
    for (i, v) in index.values_mut().enumerate() {
        *v = i;
    }
    let mut sorted: Vec<&EventRecord> = records.iter().collect();
    sorted.sort_by_key(|r| (r.simulation, r.event));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_COLUMNS).map_err(csv_err)?;
    for r in sorted {
        w.write_record([
            index[&(r.simulation, r.event)].to_string(),
            r.algo.name().to_string(),
            r.source.as_str().to_string(),
            opt(r.cf),
            opt(r.tct),
            opt(r.dec),
            r.rt_seconds.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| SimError::Internal(e.to_string()))
}

/// One row of means per algorithm.
pub fn write_means_csv<W: Write>(out: W, summary: &RunSummary) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(MEANS_COLUMNS).map_err(csv_err)?;
    for a in &summary.algorithms {
        w.write_record([
            a.algo.name().to_string(),
            a.n_events.to_string(),
            a.n_success.to_string(),
            opt(a.mean_cf),
            opt(a.mean_tct),
            opt(a.mean_dec),
            a.mean_rt.to_string(),
            a.median_rt.to_string(),
            a.reuse_rate.to_string(),
            a.failure_rate.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| SimError::Internal(e.to_string()))
}

pub const SERIES_COLUMNS: [&str; 8] = ["algo", "simulation", "event", "source", "cf", "tct", "dec", "rt"];

/// Per-event series of every algorithm, for line plots.
pub fn write_series_csv<W: Write>(out: W, summary: &RunSummary) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SERIES_COLUMNS).map_err(csv_err)?;
    for a in &summary.algorithms {
        for p in &a.series {
            w.write_record([
                a.algo.name().to_string(),
                p.simulation.to_string(),
                p.event.to_string(),
                p.source.as_str().to_string(),
                opt(p.cf),
                opt(p.tct),
                opt(p.dec),
                p.rt_seconds.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| SimError::Internal(e.to_string()))
}

pub fn save_series_csv(path: &Path, summary: &RunSummary) -> Result<(), SimError> {
    write_series_csv(create(path)?, summary)
}

pub fn save_records_csv(path: &Path, records: &[EventRecord]) -> Result<(), SimError> {
    write_records_csv(create(path)?, records)
}

pub fn save_means_csv(path: &Path, summary: &RunSummary) -> Result<(), SimError> {
    write_means_csv(create(path)?, summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Template;
    use crate::online::Source;
    use crate::simkit::run::Algorithm;
    use crate::simkit::scenario::SCHEMA_VERSION;
    use crate::simkit::summary::summarize_metrics;

    fn records() -> Vec<EventRecord> {
        vec![
            EventRecord {
                schema_version: SCHEMA_VERSION,
                simulation: 0,
                event: 1,
                algo: Algorithm::Phts,
                source: Source::OfflineReused,
                cf: Some(0.1 + 0.2),
                tct: Some(0.1),
                dec: Some(0.5),
                rt_seconds: 3.5e-5,
                template: Some(Template::new(vec![3, 7, 10, 8, 11])),
            },
            EventRecord {
                schema_version: SCHEMA_VERSION,
                simulation: 0,
                event: 0,
                algo: Algorithm::Rts,
                source: Source::Infeasible,
                cf: None,
                tct: None,
                dec: None,
                rt_seconds: 0.01,
                template: None,
            },
        ]
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/records.jsonl");
        save_records(&p, &records()).unwrap();
        assert_eq!(load_records(&p).unwrap(), records());
        save_records(&p, &[]).unwrap();
        assert!(load_records(&p).unwrap().is_empty());
    }

    #[test]
    fn summary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("summary.json");
        let s = summarize_metrics(&records(), &[Algorithm::Phts, Algorithm::Rts]);
        save_summary(&p, &s).unwrap();
        assert_eq!(load_summary(&p).unwrap(), s);
    }

    #[test]
    fn malformed_line_reports_position() {
        let text = format!("{}\n{{\"event\": oops}}\n", serde_json::to_string(&records()[0]).unwrap());
        let err = read_jsonl::<EventRecord, _>(text.as_bytes(), "r.jsonl").unwrap_err();
        match err {
            SimError::Parse { line, path, .. } => assert_eq!((line, path.as_str()), (2, "r.jsonl")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_schema() {
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &records()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "event,algo,source,cf,tct,dec,rt");
        assert_eq!(lines[1], "0,rts,infeasible,,,,0.01");
        assert!(lines[2].starts_with("1,phts,offline_reused,0.30000000000000004,0.1,0.5,"));

        let mut empty = Vec::new();
        write_records_csv(&mut empty, &[]).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap(), "event,algo,source,cf,tct,dec,rt\n");
    }
}
