//! Scenario generation, the Monte-Carlo event loop, metric aggregation and
//! file formats.

mod ingest;
mod persist;
mod run;
mod scenario;
mod summary;

use thiserror::Error;

use crate::graph::GraphError;
use crate::search::ScheduleError;

pub use ingest::{
    model_from_file, model_to_file, parse_json, read_json, service_from_file, service_to_file, task_from_file,
    task_to_file, CycleUnit, DataUnit, FreqUnit, Label, Labels, ModelFile, ModelUnits, RateUnit, ServiceFile, TaskFile,
    TaskUnits, Violation,
};
pub use persist::{
    load_records, load_summary, read_jsonl, save_means_csv, save_records, save_records_csv, save_series_csv, save_summary,
    write_jsonl, write_means_csv, write_records_csv, write_series_csv, MEANS_COLUMNS, RECORD_COLUMNS, SERIES_COLUMNS,
};
pub use run::{run_monte_carlo, run_on_instance, Algorithm, EventRecord, RunOutput, Simulation};
pub use scenario::{
    builtin_task_graph, generate_service_graph, realize_scenario, ExpParams, GaussParams, Interval, ScenarioSpec,
    StatParams, TaskRef, SCHEMA_VERSION,
};
pub use summary::{median, summarize_metrics, AlgoSummary, RunSummary, SeriesPoint};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("{0}")]
    Spec(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid input:\n{}", .0.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Schedule(ScheduleError),
    #[error("internal error: {0}")]
    Internal(String),
}
