//! CSV and metadata files written for an experiment.
//!
//! Layout under the output directory:
//!
//! ```text
//! summary.csv
//! run_meta.json
//! <controller>/limit_<limit|none>/queues.csv
//! <controller>/limit_<limit|none>/inflow.csv
//! <controller>/limit_<limit|none>/budget.csv
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::OutputError;
use crate::scenario::{ControllerKind, ScenarioConfig};

use super::experiment::{inflow_stats, Aggregate, CellAggregate};
use super::run::PlanInfo;

pub const QUEUES_HEADER: [&str; 2] = ["bin_start_s", "mean_queue_veh"];
pub const INFLOW_HEADER: [&str; 3] = ["bin_start_s", "veh_per_hr", "target_limit"];
pub const BUDGET_HEADER: [&str; 5] = ["period", "start_s", "budget", "mean_delivered", "max_delivered"];
pub const SUMMARY_HEADER: [&str; 6] = [
    "controller",
    "limit",
    "min_inflow_veh_per_hr",
    "max_inflow_veh_per_hr",
    "mean_inflow_veh_per_hr",
    "mean_delay_s",
];

pub fn limit_label(limit: Option<u32>) -> String {
    match limit {
        Some(l) => l.to_string(),
        None => "none".to_string(),
    }
}

/// Directory of one (controller, limit) cell.
pub fn cell_dir(out_dir: &Path, controller: ControllerKind, limit: Option<u32>) -> PathBuf {
    out_dir
        .join(controller.as_str())
        .join(format!("limit_{}", limit_label(limit)))
}

fn num(x: f64) -> String {
    format!("{x:.6}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), OutputError> {
    let csv_err = |source| OutputError::Csv {
        path: path.display().to_string(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

/// Refuses a non-empty directory unless `force` is set, then creates it.
pub fn prepare_out_dir(out_dir: &Path, force: bool) -> Result<(), OutputError> {
    if out_dir.exists() && !force {
        let mut entries = fs::read_dir(out_dir).map_err(io_err(out_dir))?;
        if entries.next().is_some() {
            return Err(OutputError::NotEmpty(out_dir.display().to_string()));
        }
    }
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))
}

#[derive(Serialize)]
struct CellMeta<'a> {
    controller: ControllerKind,
    limit: Option<u32>,
    seeds: &'a [u64],
    remaining_vehicles: Vec<u32>,
    auctions: Vec<u32>,
    revenue_micro_eur: Vec<u64>,
    plan: &'a Option<PlanInfo>,
}

#[derive(Serialize)]
struct RunMeta<'a> {
    code_version: &'static str,
    scenario_id: &'a str,
    base_seed: u64,
    replications: usize,
    seed_scheme: &'static str,
    scenario: &'a ScenarioConfig,
    cells: Vec<CellMeta<'a>>,
}

fn write_cell(out_dir: &Path, scenario: &ScenarioConfig, cell: &CellAggregate) -> Result<(), OutputError> {
    let dir = cell_dir(out_dir, cell.controller, cell.limit);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let bin = |i: usize| (i as u32 * cell.bin_s).to_string();
    let queues: Vec<Vec<String>> = cell
        .queue_series
        .iter()
        .enumerate()
        .map(|(i, &q)| vec![bin(i), num(q)])
        .collect();
    write_csv(&dir.join("queues.csv"), &QUEUES_HEADER, &queues)?;
    let m = &scenario.metering;
    let inflow: Vec<Vec<String>> = cell
        .inflow_series
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            let start = i as u32 * cell.bin_s;
            let target = match cell.limit {
                Some(l) if start >= m.start_s && start < m.end_s => l.to_string(),
                _ => String::new(),
            };
            vec![bin(i), num(f), target]
        })
        .collect();
    write_csv(&dir.join("inflow.csv"), &INFLOW_HEADER, &inflow)?;
    let budget: Vec<Vec<String>> = cell
        .periods
        .iter()
        .map(|p| {
            vec![
                p.period.to_string(),
                p.start_s.to_string(),
                p.budget.to_string(),
                num(p.mean_delivered),
                p.max_delivered.to_string(),
            ]
        })
        .collect();
    write_csv(&dir.join("budget.csv"), &BUDGET_HEADER, &budget)
}

/// Writes every cell's CSVs, `summary.csv` (one row per cell, inflow
/// statistics over the metering window) and `run_meta.json`.
pub fn emit_outputs(aggregate: &Aggregate, out_dir: &Path, force: bool) -> Result<(), OutputError> {
    prepare_out_dir(out_dir, force)?;
    let scenario = &aggregate.scenario;
    let mut summary = Vec::new();
    for cell in &aggregate.cells {
        write_cell(out_dir, scenario, cell)?;
        let (min, max, mean) = match inflow_stats(cell, scenario.metering.start_s, scenario.metering.end_s) {
            Ok(s) => (num(s.min), num(s.max), num(s.mean)),
            Err(_) => Default::default(),
        };
        summary.push(vec![
            cell.controller.as_str().to_string(),
            limit_label(cell.limit),
            min,
            max,
            mean,
            cell.mean_delay_s.map(num).unwrap_or_default(),
        ]);
    }
    write_csv(&out_dir.join("summary.csv"), &SUMMARY_HEADER, &summary)?;

    let meta = RunMeta {
        code_version: env!("CARGO_PKG_VERSION"),
        scenario_id: &scenario.id,
        base_seed: scenario.experiment.base_seed,
        replications: aggregate.cells.first().map_or(0, |c| c.seeds.len()),
        seed_scheme: "base_seed + replication index",
        scenario,
        cells: aggregate
            .cells
            .iter()
            .map(|c| CellMeta {
                controller: c.controller,
                limit: c.limit,
                seeds: &c.seeds,
                remaining_vehicles: c.runs.iter().map(|r| r.remaining).collect(),
                auctions: c.runs.iter().map(|r| r.auctions).collect(),
                revenue_micro_eur: c.runs.iter().map(|r| r.revenue.0).collect(),
                plan: &c.plan,
            })
            .collect(),
    };
    let path = out_dir.join("run_meta.json");
    let text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    fs::write(&path, text + "\n").map_err(io_err(&path))
}

/// Writes each kept event log of a cell as `events_rep<i>.jsonl`.
pub fn write_event_logs(out_dir: &Path, cell: &CellAggregate) -> Result<(), OutputError> {
    let dir = cell_dir(out_dir, cell.controller, cell.limit);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    for (i, run) in cell.runs.iter().enumerate() {
        let path = dir.join(format!("events_rep{i}.jsonl"));
        let file = fs::File::create(&path).map_err(io_err(&path))?;
        let mut w = std::io::BufWriter::new(file);
        run.events.write_jsonl(&mut w).map_err(io_err(&path))?;
        std::io::Write::flush(&mut w).map_err(io_err(&path))?;
    }
    Ok(())
}
