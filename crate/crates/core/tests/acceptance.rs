//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use common::oracle::{brute_force, random_instance};
use common::{check_gating, library_auction, movement_phase, signal_safety_violations, Timeline};
use gatesim::harness::{
    emit_outputs, inflow_stats, run_experiment, run_replication, series_stats, Aggregate, RunOptions,
};
use gatesim::scenario::{budget_count, test_case, Arm, ControllerKind, ScenarioConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn grid_limits(s: &ScenarioConfig) -> Vec<Option<u32>> {
    s.experiment.limits.iter().map(|&l| Some(l)).collect()
}

fn full_grid(s: &ScenarioConfig) -> Aggregate {
    run_experiment(
        s,
        &[ControllerKind::Auction, ControllerKind::VolumeFixed],
        &grid_limits(s),
        s.experiment.replications,
        RunOptions::default(),
    )
    .expect("grid runs")
}

fn budget_conversion() -> Outcome {
    let expected = [(100, 8), (250, 20), (400, 33), (550, 45), (700, 58)];
    let got: Vec<(u32, u32)> = expected.iter().map(|&(l, _)| (l, budget_count(l, 300))).collect();
    let pass = got.iter().zip(&expected).all(|(g, e)| g == e);
    outcome(pass, format!("{got:?}"))
}

fn auction_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_a0c7);
    let mut mismatches = Vec::new();
    let mut contested = 0;
    for i in 0..1000 {
        let inst = random_instance(&mut rng);
        let lib = library_auction(&inst, 1).expect("at least one phase bids");
        let orc = brute_force(&inst, 1);
        let mut paid: Vec<(u32, u64)> = lib.payments.iter().map(|(v, m)| (v.0, m.0)).collect();
        paid.sort_unstable();
        let expected: Vec<(u32, u64)> = orc.payments.iter().map(|(v, m)| (v.0, *m)).collect();
        let totals: Vec<(u8, u64)> = lib.totals.iter().map(|(p, m)| (p.0, m.0)).collect();
        let orc_totals: Vec<(u8, u64)> = orc.totals.iter().map(|(p, m)| (p.0, *m)).collect();
        if lib.winner != orc.winner || lib.runner_up != orc.runner_up || paid != expected || totals != orc_totals {
            mismatches.push(format!("instance {i}: winner/runner-up/payments differ"));
            continue;
        }
        let c_w = lib.total_of(lib.winner).unwrap().0;
        let c_z = lib.runner_up.and_then(|z| lib.total_of(z)).map_or(0, |m| m.0);
        if c_w > 0 && lib.runner_up.is_some() {
            contested += 1;
            if lib.revenue().0 != c_z {
                mismatches.push(format!("instance {i}: payments sum {} != c_Z {c_z}", lib.revenue().0));
            }
        }
        for &(v, r) in &paid {
            let b = inst.vehicles[v as usize].bid().0;
            if r > b {
                mismatches.push(format!("instance {i}: vehicle {v} pays {r} > bid {b}"));
            }
        }
        let k = 2 + (i as u64 * 37) % 999;
        let scaled = library_auction(&inst, k).unwrap();
        let sw = scaled.total_of(scaled.winner).unwrap().0 as u128;
        let sz = scaled.runner_up.and_then(|z| scaled.total_of(z)).map_or(0, |m| m.0) as u128;
        if scaled.winner != lib.winner || scaled.runner_up != lib.runner_up || sz * c_w as u128 != c_z as u128 * sw {
            mismatches.push(format!("instance {i}: scaling by {k} changed the outcome"));
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    let pass = mismatches.is_empty() && elapsed < 5.0;
    let mut detail = format!(
        "1000 instances ({contested} priced), {} mismatches, {elapsed:.2} s",
        mismatches.len()
    );
    if let Some(m) = mismatches.first() {
        detail += &format!("; first: {m}");
    }
    outcome(pass, detail)
}

fn signal_safety(s: &ScenarioConfig) -> Outcome {
    let c = &s.controller;
    let phase_of = movement_phase(s);
    let mut notes = Vec::new();
    let mut pass = true;
    for limit in [None, Some(100), Some(400)] {
        let started = Instant::now();
        let sc = s.with_limit(limit);
        let opts = RunOptions {
            keep_events: true,
            trace_auctions: false,
        };
        let out = run_replication(&sc, ControllerKind::Auction, sc.experiment.seed(0), opts).unwrap();
        let tl = Timeline::from_events(out.events.events(), phase_of.len(), sc.experiment.horizon_s);
        let v = signal_safety_violations(&tl, &phase_of, c.yellow_s, c.min_green_s, c.max_green_s + c.extension_s);
        let elapsed = started.elapsed().as_secs_f64();
        pass &= v.is_empty() && elapsed < 10.0;
        let label = limit.map_or("none".to_string(), |l| l.to_string());
        notes.push(format!("limit {label}: {} violations in {elapsed:.2} s", v.len()));
        if let Some(first) = v.first() {
            notes.push(format!("first: {first}"));
        }
    }
    outcome(pass, notes.join(", "))
}

fn gating_invariant(s: &ScenarioConfig) -> Outcome {
    let started = Instant::now();
    let jobs: Vec<(ControllerKind, u32, u64)> = [ControllerKind::Auction, ControllerKind::VolumeFixed]
        .iter()
        .flat_map(|&c| {
            s.experiment
                .limits
                .iter()
                .flat_map(move |&l| (0..s.experiment.replications).map(move |r| (c, l, s.experiment.seed(r))))
        })
        .collect();
    let movements = s.intersection.movements.len();
    let reports: Vec<_> = jobs
        .par_iter()
        .map(|&(c, l, seed)| {
            let sc = s.with_limit(Some(l));
            let opts = RunOptions {
                keep_events: true,
                trace_auctions: false,
            };
            let out = run_replication(&sc, c, seed, opts).unwrap();
            let tl = Timeline::from_events(out.events.events(), movements, sc.experiment.horizon_s);
            (c, check_gating(&sc, out.events.events(), &tl))
        })
        .collect();
    let mut periods = 0;
    let mut exceedances = 0;
    let mut green = 0;
    let mut overshoot = 0;
    let mut mismatch = 0;
    let mut volume_over_bound = 0;
    for (c, r) in &reports {
        mismatch += r.count_mismatch.len();
        match c {
            ControllerKind::Auction => {
                periods += r.periods;
                exceedances += r.exceedances;
                green += r.green_after_exceedance.len();
                overshoot += r.overshoot.len();
            }
            ControllerKind::VolumeFixed => volume_over_bound += r.overshoot.len(),
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    let pass = green == 0 && overshoot == 0 && mismatch == 0 && elapsed < 120.0;
    outcome(
        pass,
        format!(
            "{} runs; auction: {periods} periods, {exceedances} exceedances, {green} green ticks after exceedance, \
             {overshoot} periods over bound; recount mismatches {mismatch}; \
             volume benchmark (no count cap) periods over bound {volume_over_bound}; {elapsed:.1} s",
            reports.len()
        ),
    )
}

fn directional_inflow(s: &ScenarioConfig, grid: &Aggregate) -> Outcome {
    let m = &s.metering;
    let mut pass = true;
    let mut notes = Vec::new();
    for limit in [100, 250, 400, 550] {
        let a = inflow_stats(
            grid.cell(ControllerKind::Auction, Some(limit)).unwrap(),
            m.start_s,
            m.end_s,
        )
        .unwrap();
        let v = inflow_stats(
            grid.cell(ControllerKind::VolumeFixed, Some(limit)).unwrap(),
            m.start_s,
            m.end_s,
        )
        .unwrap();
        let l = limit as f64;
        let a_ok = a.mean >= l && a.mean <= 2.0 * l;
        let b_ok = (a.min - l).abs() <= 40.0;
        let c_ok = (a.mean - l).abs() < (v.mean - l).abs();
        pass &= a_ok && b_ok && c_ok;
        notes.push(format!(
            "{limit}: auction mean {:.1} min {:.1}, volume mean {:.1} [{}{}{}]",
            a.mean,
            a.min,
            v.mean,
            if a_ok { "a" } else { "-" },
            if b_ok { "b" } else { "-" },
            if c_ok { "c" } else { "-" },
        ));
    }
    outcome(pass, notes.join("; "))
}

fn directional_queue_delay(s: &ScenarioConfig, grid: &Aggregate, baseline: &Aggregate) -> Outcome {
    let m = &s.metering;
    let queue = |agg: &Aggregate, l: Option<u32>| {
        let c = agg.cell(ControllerKind::Auction, l).unwrap();
        series_stats(&c.queue_series, c.bin_s, m.start_s, m.end_s).unwrap().mean
    };
    let limits = &s.experiment.limits;
    let queues: Vec<f64> = limits.iter().map(|&l| queue(grid, Some(l))).collect();
    let delays: Vec<f64> = limits
        .iter()
        .map(|&l| {
            grid.cell(ControllerKind::Auction, Some(l))
                .unwrap()
                .mean_delay_s
                .unwrap()
        })
        .collect();
    let free = queue(baseline, None);
    let q_ok = queues.windows(2).all(|w| w[1] <= w[0]);
    let d_ok = delays.windows(2).all(|w| w[1] <= w[0]);
    let ratio = queues[0] / free;
    let r_ok = ratio >= 3.0;
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.1}")).collect::<Vec<_>>().join(" ");
    outcome(
        q_ok && d_ok && r_ok,
        format!(
            "queue by limit [{}] (non-increasing: {q_ok}); delay [{}] (non-increasing: {d_ok}); \
             limit {} / no gating = {:.1} / {:.1} = {ratio:.1}x",
            fmt(&queues),
            fmt(&delays),
            limits[0],
            queues[0],
            free
        ),
    )
}

fn conservation_and_arrivals(s: &ScenarioConfig, grid: &Aggregate, baseline: &Aggregate) -> Outcome {
    let runs: Vec<_> = grid.cells.iter().chain(&baseline.cells).flat_map(|c| &c.runs).collect();
    let broken = runs.iter().filter(|r| !r.is_conserved()).count();
    let cell = baseline.cell(ControllerKind::Auction, None).unwrap();
    let mut within = 0;
    let mut worst = 0.0f64;
    for r in &cell.runs {
        let ok = Arm::ALL.iter().all(|&arm| {
            let mean = s.demand.rate(arm) * s.experiment.horizon_s as f64 / 3600.0;
            let dev = (r.arrivals_per_arm[arm.index()] as f64 - mean).abs() / mean.sqrt();
            worst = worst.max(dev);
            dev <= 3.0
        });
        within += ok as usize;
    }
    let pass = broken == 0 && within >= 9;
    outcome(
        pass,
        format!(
            "{} runs, {broken} conservation failures; {within}/{} replications within 3 sigma on every arm (worst {worst:.2} sigma)",
            runs.len(),
            cell.runs.len()
        ),
    )
}

fn files_under(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism_and_scale(s: &ScenarioConfig, grid: &Aggregate, grid_secs: f64) -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    emit_outputs(grid, a.path(), true).unwrap();
    let again = full_grid(s);
    emit_outputs(&again, b.path(), true).unwrap();
    let first = files_under(a.path());
    let second = files_under(b.path());
    emit_outputs(&again, a.path(), true).unwrap();
    let forced = files_under(a.path());
    let csvs = first.iter().filter(|(p, _)| p.ends_with(".csv")).count();
    let identical = first == second && first == forced;
    let pass = identical && grid_secs < 300.0;
    outcome(
        pass,
        format!(
            "{} files ({csvs} CSV) identical across reruns and --force: {identical}; full grid in {grid_secs:.1} s",
            first.len()
        ),
    )
}

fn main() {
    let s = test_case();
    let started = Instant::now();
    let grid = full_grid(&s);
    let grid_secs = started.elapsed().as_secs_f64();
    let baseline = run_experiment(
        &s,
        &[ControllerKind::Auction],
        &[None],
        s.experiment.replications,
        RunOptions::default(),
    )
    .unwrap();

    let criteria: Vec<(&str, Outcome)> = vec![
        ("1 budget conversion", budget_conversion()),
        ("2 auction oracle equivalence", auction_oracle()),
        ("3 signal safety", signal_safety(&s)),
        ("4 gating invariant", gating_invariant(&s)),
        ("5 inflow vs limit", directional_inflow(&s, &grid)),
        (
            "6 queue and delay trends",
            directional_queue_delay(&s, &grid, &baseline),
        ),
        (
            "7 conservation and arrivals",
            conservation_and_arrivals(&s, &grid, &baseline),
        ),
        ("8 determinism and scale", determinism_and_scale(&s, &grid, grid_secs)),
    ];
    let mut failed = 0;
    for (name, o) in &criteria {
        println!(
            "criterion {name}: {} - {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += !o.pass as usize;
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
