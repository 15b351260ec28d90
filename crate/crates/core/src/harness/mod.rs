//! Replicated experiments and their CSV outputs.

pub mod experiment;
pub mod output;
pub mod run;

pub use experiment::{
    aggregate_cell, inflow_stats, run_experiment, series_stats, Aggregate, CellAggregate, InflowStats, PeriodSummary,
};
pub use output::{cell_dir, emit_outputs, limit_label, write_event_logs};
pub use run::{run_replication, LaneBalance, PlanInfo, RunOptions, RunOutput};
