//! Scenario files, presets, run orchestration and CSV output for the
//! coded-chain simulator.

pub mod presets;
pub mod report;
pub mod runner;
pub mod scenario;

use std::path::PathBuf;

use coded_chain::netsim::NetsimError;
use thiserror::Error;

pub use presets::{preset, preset_text, PRESETS};
pub use runner::{run, simulate, summarize, sweep, sweep_summaries, Axis, Summary};
pub use scenario::{parse_scenario, to_toml, Scenario};

fn at(line: &Option<usize>) -> String {
    line.map_or_else(String::new, |l| format!("line {l}: "))
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}{message}", at(line))]
    Parse { line: Option<usize>, message: String },
    #[error("{}invalid `{key}`: {message}", at(line))]
    Invalid { line: Option<usize>, key: String, message: String },
    #[error("cannot serialize scenario: {0}")]
    Serialize(String),
    #[error("unknown sweep axis `{0}`")]
    UnknownAxis(String),
    #[error("value {value} is not valid for axis `{axis}`")]
    AxisValue { axis: String, value: f64 },
    #[error("a sweep needs at least one value")]
    EmptySweep,
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Sim(#[from] NetsimError),
}
