//! Single runs, seed lists and parameter sweeps.

use std::fs;
use std::path::{Path, PathBuf};
use std::thread;

use coded_chain::metrics::{entropy, gini, throughput};
use coded_chain::netsim::{Engine, EpochRecord};
use log::info;

use crate::report::{epoch_csv, schema_csv, summary_csv, sweep_csv};
use crate::scenario::Scenario;
use crate::CliError;

/// Per-run means over epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub scenario: String,
    pub seed: u64,
    pub epochs: u64,
    pub mean_miners: f64,
    pub throughput: f64,
    pub normalized_throughput: f64,
    pub wrong_confirmations: f64,
    pub mean_gini: f64,
    pub mean_entropy: f64,
    pub final_storage_fraction: f64,
    pub mean_miners_per_tx: f64,
    pub mean_backlog: f64,
}

pub fn summarize(name: &str, seed: u64, batch_size: usize, records: &[EpochRecord]) -> Summary {
    let r = records.len().max(1) as f64;
    let mean = |f: &dyn Fn(&EpochRecord) -> f64| records.iter().map(f).sum::<f64>() / r;
    let tp = throughput(records, batch_size);
    Summary {
        scenario: name.to_string(),
        seed,
        epochs: records.len() as u64,
        mean_miners: mean(&|e| e.miners as f64),
        throughput: tp.mean,
        normalized_throughput: tp.normalized,
        wrong_confirmations: tp.wrong_confirmations,
        mean_gini: mean(&|e| gini(&e.credits)),
        mean_entropy: mean(&|e| entropy(&e.credits)),
        final_storage_fraction: records.last().map_or(1.0, |e| e.storage_fraction),
        mean_miners_per_tx: mean(&|e| e.miners_per_tx as f64),
        mean_backlog: mean(&|e| e.backlog_in as f64),
    }
}

pub fn simulate(scenario: &Scenario, seed: u64) -> Result<Vec<EpochRecord>, CliError> {
    let mut engine = Engine::new(scenario.network(seed))?;
    Ok(engine.run(scenario.epochs)?)
}

/// Parameters a sweep may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Miners,
    DishonestFraction,
    StragglerCap,
    Discrepancy,
    JoinMean,
    LeaveMean,
    BatchSize,
    Epsilon,
    CacheBudget,
}

impl Axis {
    pub const ALL: [(&'static str, Axis); 9] = [
        ("initial_miners", Axis::Miners),
        ("dishonest_fraction", Axis::DishonestFraction),
        ("straggler_cap", Axis::StragglerCap),
        ("discrepancy", Axis::Discrepancy),
        ("join_mean", Axis::JoinMean),
        ("leave_mean", Axis::LeaveMean),
        ("batch_size", Axis::BatchSize),
        ("epsilon", Axis::Epsilon),
        ("cache_budget", Axis::CacheBudget),
    ];

    pub fn parse(name: &str) -> Result<Axis, CliError> {
        let canonical = match name {
            "N" | "miners" => "initial_miners",
            "mu" => "dishonest_fraction",
            "stragglers" => "straggler_cap",
            "theta" => "discrepancy",
            "n" => "batch_size",
            other => other,
        };
        Axis::ALL
            .iter()
            .find(|(k, _)| *k == canonical)
            .map(|(_, a)| *a)
            .ok_or_else(|| CliError::UnknownAxis(name.to_string()))
    }

    pub fn name(self) -> &'static str {
        Axis::ALL.iter().find(|(_, a)| *a == self).map(|(k, _)| *k).expect("listed")
    }

    /// Copy of `base` with this parameter set to `value`.
    pub fn apply(self, base: &Scenario, value: f64) -> Result<Scenario, CliError> {
        let count = || -> Result<usize, CliError> {
            if value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
                Ok(value as usize)
            } else {
                Err(CliError::AxisValue { axis: self.name().into(), value })
            }
        };
        let mut s = base.clone();
        match self {
            Axis::Miners => s.initial_miners = count()?,
            Axis::DishonestFraction => s.dishonest_fraction = value,
            Axis::StragglerCap => s.straggler_cap = value,
            Axis::Discrepancy => s.discrepancy = count()? as u32,
            Axis::JoinMean => s.join_mean = value,
            Axis::LeaveMean => s.leave_mean = value,
            Axis::BatchSize => s.batch_size = count()?,
            Axis::Epsilon => s.epsilon = value,
            Axis::CacheBudget => s.cache_budget = count()?,
        }
        s.sweep_axis = None;
        s.sweep_values.clear();
        s.validate()?;
        Ok(s)
    }
}

/// Runs every job on a bounded pool of scoped threads; results keep job order.
fn parallel<T: Send, F: Fn(usize) -> Result<T, CliError> + Sync>(jobs: usize, f: F) -> Result<Vec<T>, CliError> {
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(jobs.max(1));
    let mut slots: Vec<Option<Result<T, CliError>>> = (0..jobs).map(|_| None).collect();
    thread::scope(|scope| {
        let f = &f;
        let handles: Vec<_> = (0..workers)
            .map(|w| scope.spawn(move || (w..jobs).step_by(workers).map(|j| (j, f(j))).collect::<Vec<_>>()))
            .collect();
        for h in handles {
            for (j, r) in h.join().expect("worker panicked") {
                slots[j] = Some(r);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("every job ran")).collect()
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })
}

/// Writes one per-epoch CSV per seed, a summary CSV and the schema file.
pub fn run(scenario: &Scenario, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::Io { path: out.to_path_buf(), source: e })?;
    let runs = parallel(scenario.seeds.len(), |k| simulate(scenario, scenario.seeds[k]))?;
    let mut written = Vec::new();
    let mut summaries = Vec::new();
    for (seed, records) in scenario.seeds.iter().zip(&runs) {
        let path = out.join(format!("{}_seed{seed}.csv", scenario.name));
        write(&path, &epoch_csv(records))?;
        info!("wrote {}", path.display());
        written.push(path);
        summaries.push(summarize(&scenario.name, *seed, scenario.batch_size, records));
    }
    let path = out.join(format!("{}_summary.csv", scenario.name));
    write(&path, &summary_csv(&summaries))?;
    written.push(path);
    let path = out.join("schema.csv");
    write(&path, &schema_csv())?;
    written.push(path);
    Ok(written)
}

/// One summary per (value, seed), values outermost.
pub fn sweep_summaries(scenario: &Scenario, axis: Axis, values: &[f64]) -> Result<Vec<(f64, Summary)>, CliError> {
    if values.is_empty() {
        return Err(CliError::EmptySweep);
    }
    let variants: Vec<Scenario> = values.iter().map(|&v| axis.apply(scenario, v)).collect::<Result<_, _>>()?;
    let seeds = scenario.seeds.len();
    parallel(values.len() * seeds, |j| {
        let (v, s) = (j / seeds, j % seeds);
        let variant = &variants[v];
        let seed = scenario.seeds[s];
        let records = simulate(variant, seed)?;
        Ok((values[v], summarize(&scenario.name, seed, variant.batch_size, &records)))
    })
}

pub fn sweep(scenario: &Scenario, axis: Axis, values: &[f64], out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let rows = sweep_summaries(scenario, axis, values)?;
    fs::create_dir_all(out).map_err(|e| CliError::Io { path: out.to_path_buf(), source: e })?;
    let path = out.join(format!("{}_sweep.csv", scenario.name));
    write(&path, &sweep_csv(axis.name(), &rows))?;
    let schema = out.join("schema.csv");
    write(&schema, &schema_csv())?;
    Ok(vec![path, schema])
}
