use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use coded_chain_cli::{parse_scenario, preset, preset_text, run, sweep, Axis, CliError, Scenario, PRESETS};

#[derive(Parser)]
#[command(name = "codedchain", version, about = "Raptor-coded blockchain simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario once per seed and write per-epoch and summary CSVs.
    Run(Source),
    /// Run a scenario for each value of one parameter.
    Sweep {
        #[command(flatten)]
        source: Source,
        /// Parameter to vary; defaults to the scenario's `sweep_axis`.
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated values; default to the scenario's `sweep_values`.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
    },
    /// List shipped presets.
    Presets,
    /// Print a preset as a scenario file.
    ShowPreset { name: String },
}

#[derive(Args)]
struct Source {
    /// Scenario file.
    #[arg(long, conflicts_with = "preset")]
    scenario: Option<PathBuf>,
    /// Shipped preset name.
    #[arg(long)]
    preset: Option<String>,
    /// Seeds, replacing the scenario's list.
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    /// Epoch count, replacing the scenario's.
    #[arg(long)]
    epochs: Option<u64>,
    /// Output directory; defaults to the scenario's `output_dir`, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Source {
    fn load(&self) -> Result<(Scenario, PathBuf), CliError> {
        let mut s = match (&self.scenario, &self.preset) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.clone(), source: e })?;
                parse_scenario(&text).map_err(|e| CliError::Parse { line: None, message: format!("{}: {e}", path.display()) })?
            }
            (None, Some(name)) => preset(name)?,
            (None, None) => Scenario::default(),
        };
        if !self.seeds.is_empty() {
            s.seeds = self.seeds.clone();
        }
        if let Some(e) = self.epochs {
            s.epochs = e;
        }
        s.validate()?;
        let out = self.out.clone().or_else(|| s.output_dir.as_ref().map(PathBuf::from)).unwrap_or_else(|| "out".into());
        Ok((s, out))
    }
}

fn report(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(source) => {
            let (s, out) = source.load()?;
            report(&run(&s, &out)?);
        }
        Command::Sweep { source, axis, values } => {
            let (s, out) = source.load()?;
            let axis = axis.or_else(|| s.sweep_axis.clone()).ok_or(CliError::EmptySweep)?;
            let values = values.unwrap_or_else(|| s.sweep_values.clone());
            report(&sweep(&s, Axis::parse(&axis)?, &values, Path::new(&out))?);
        }
        Command::Presets => {
            for (name, text) in PRESETS {
                let about = text.lines().next().unwrap_or("").trim_start_matches('#').trim();
                println!("{name}\t{about}");
            }
        }
        Command::ShowPreset { name } => print!("{}", preset_text(&name)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("codedchain: {e}");
            ExitCode::FAILURE
        }
    }
}
