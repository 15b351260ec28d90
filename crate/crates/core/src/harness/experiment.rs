//! Replicated runs over a grid of controllers and flow limits.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::SimError;
use crate::scenario::{ControllerKind, ScenarioConfig};

use super::run::{run_replication, PlanInfo, RunOptions, RunOutput};

/// Per-period deliveries averaged over replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodSummary {
    pub period: u32,
    pub start_s: u32,
    pub budget: u32,
    pub mean_delivered: f64,
    pub max_delivered: u32,
}

/// Replication means for one (controller, limit) pair.
#[derive(Debug, Clone)]
pub struct CellAggregate {
    pub controller: ControllerKind,
    pub limit: Option<u32>,
    pub seeds: Vec<u64>,
    pub bin_s: u32,
    pub queue_series: Vec<f64>,
    /// veh/hr per bin.
    pub inflow_series: Vec<f64>,
    /// Mean of the replications' mean delays; `None` if no replication had one.
    pub mean_delay_s: Option<f64>,
    pub periods: Vec<PeriodSummary>,
    pub plan: Option<PlanInfo>,
    pub runs: Vec<RunOutput>,
}

#[derive(Debug, Clone)]
pub struct Aggregate {
    pub scenario: ScenarioConfig,
    pub cells: Vec<CellAggregate>,
}

impl Aggregate {
    pub fn cell(&self, controller: ControllerKind, limit: Option<u32>) -> Option<&CellAggregate> {
        self.cells
            .iter()
            .find(|c| c.controller == controller && c.limit == limit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InflowStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

fn mean_series<'a>(series: impl Iterator<Item = &'a [f64]>, n: usize) -> Vec<f64> {
    let mut sum: Vec<f64> = Vec::new();
    for s in series {
        if sum.is_empty() {
            sum = vec![0.0; s.len()];
        }
        for (acc, x) in sum.iter_mut().zip(s) {
            *acc += x;
        }
    }
    sum.iter().map(|s| s / n as f64).collect()
}

/// Averages completed replications of one cell.
pub fn aggregate_cell(runs: Vec<RunOutput>) -> CellAggregate {
    let first = &runs[0];
    let n = runs.len();
    let inflow: Vec<Vec<f64>> = runs.iter().map(|r| r.inflow_series()).collect();
    let delays: Vec<f64> = runs.iter().filter_map(|r| r.mean_delay_s).collect();
    let periods = first
        .periods
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let delivered: Vec<u32> = runs
                .iter()
                .filter_map(|r| r.periods.get(i))
                .map(|q| q.delivered)
                .collect();
            PeriodSummary {
                period: p.period,
                start_s: p.start_s,
                budget: p.budget,
                mean_delivered: delivered.iter().map(|&d| d as f64).sum::<f64>() / delivered.len() as f64,
                max_delivered: delivered.iter().copied().max().unwrap_or(0),
            }
        })
        .collect();
    CellAggregate {
        controller: first.controller,
        limit: first.limit,
        seeds: runs.iter().map(|r| r.seed).collect(),
        bin_s: first.bin_s,
        queue_series: mean_series(runs.iter().map(|r| r.queue_series.as_slice()), n),
        inflow_series: mean_series(inflow.iter().map(|s| s.as_slice()), n),
        mean_delay_s: (!delays.is_empty()).then(|| delays.iter().sum::<f64>() / delays.len() as f64),
        periods,
        plan: first.plan.clone(),
        runs,
    }
}

/// Runs `n_reps` replications of every (controller, limit) pair. Seeds are
/// the scenario's base seed plus the replication index. Runs execute in
/// parallel; results are collected in grid order.
pub fn run_experiment(
    scenario: &ScenarioConfig,
    controllers: &[ControllerKind],
    limits: &[Option<u32>],
    n_reps: u32,
    options: RunOptions,
) -> Result<Aggregate, SimError> {
    scenario.validate()?;
    let cells: Vec<(ControllerKind, Option<u32>)> = controllers
        .iter()
        .flat_map(|&c| limits.iter().map(move |&l| (c, l)))
        .collect();
    let jobs: Vec<(usize, ScenarioConfig, ControllerKind, u64)> = cells
        .iter()
        .enumerate()
        .flat_map(|(i, &(c, l))| {
            let s = scenario.with_limit(l);
            (0..n_reps).map(move |r| (i, s.clone(), c, scenario.experiment.seed(r)))
        })
        .collect();
    let outputs: Vec<RunOutput> = jobs
        .par_iter()
        .map(|(_, s, c, seed)| run_replication(s, *c, *seed, options))
        .collect::<Result<_, _>>()?;

    let mut by_cell: Vec<Vec<RunOutput>> = cells.iter().map(|_| Vec::new()).collect();
    for ((i, ..), out) in jobs.iter().zip(outputs) {
        by_cell[*i].push(out);
    }
    Ok(Aggregate {
        scenario: scenario.clone(),
        cells: by_cell
            .into_iter()
            .filter(|r| !r.is_empty())
            .map(aggregate_cell)
            .collect(),
    })
}

/// Min, max and mean of the bins of `series` that start inside `[start_s, end_s)`.
pub fn series_stats(series: &[f64], bin_s: u32, start_s: u32, end_s: u32) -> Result<InflowStats, SimError> {
    let window: Vec<f64> = series
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let b = *i as u32 * bin_s;
            b >= start_s && b < end_s
        })
        .map(|(_, &x)| x)
        .collect();
    if window.is_empty() {
        return Err(SimError::EmptyWindow);
    }
    Ok(InflowStats {
        min: window.iter().copied().fold(f64::INFINITY, f64::min),
        max: window.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean: window.iter().sum::<f64>() / window.len() as f64,
    })
}

/// Inflow statistics of a cell's replication-mean series over `[start_s, end_s)`.
pub fn inflow_stats(cell: &CellAggregate, start_s: u32, end_s: u32) -> Result<InflowStats, SimError> {
    series_stats(&cell.inflow_series, cell.bin_s, start_s, end_s)
}
