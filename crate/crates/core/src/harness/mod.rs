//! Declarative Monte Carlo sweeps and model-free theory tables.
//!
//! A run expands an [`ExperimentConfig`] into cells, executes every
//! (cell, trial) pair on a rayon pool and returns the rows in grid order.
//! Each trial seeds its own generator from the cell coordinates, so the
//! output does not depend on the number of threads.

mod config;
mod emit;
mod run;

pub use config::{Cell, ExperimentConfig, Method, Mode, Plan, SCHEMA_VERSION};
pub use emit::{emit_csv, emit_json, fmt_float, write_csv, CsvRecord};
pub use run::{
    run, run_plan, CellSummary, CurveRow, DiagnoseRow, PhaseRow, ResultRow, RunOutput, Stat, Summary, Table,
};
