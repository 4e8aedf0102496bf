//! Flat TOML scenarios.

use coded_chain::netsim::NetworkConfig;
use coded_chain::raptor::GroupPolicy;
use coded_chain::txpool::{SelectionMode, SelectionProblem, TxDistributions};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCENARIO_VERSION: u32 = 1;

/// One fully specified experiment. Every key is optional in the file; omitted
/// keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    pub name: String,
    pub epochs: u64,
    pub seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,

    pub initial_miners: usize,
    pub join_mean: f64,
    pub leave_mean: f64,
    pub dishonest_fraction: f64,
    pub straggler_cap: f64,
    pub straggler_silence: f64,
    pub discrepancy: u32,
    pub epsilon: f64,
    pub forgetting: f64,
    pub batch_size: usize,
    pub cache_budget: usize,

    pub mode: SelectionMode,
    pub compute_budget: f64,
    pub size_budget: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    /// Gamma scale of transaction compute costs, shared by the generator and
    /// the selection budgets.
    pub gamma_scale: f64,
    pub compute_shape: f64,
    pub fee_scale: f64,
    pub fee_max: f64,
    pub age_scale: f64,
    pub age_max: u32,
    pub size_mean: f64,
    pub size_std: f64,
    pub depth_base: f64,
    pub depth_step: f64,
    pub depth_groups: u32,
    pub valid_probability: f64,

    pub code_rate: f64,
    pub failure_budget: f64,
    pub group_trials: usize,
    pub group_margin: usize,
    pub erasure: f64,
    pub max_group_blocks: usize,
    pub degree_c: f64,
    pub degree_delta: f64,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_axis: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sweep_values: Vec<f64>,
}

impl Default for Scenario {
    fn default() -> Self {
        let net = NetworkConfig::default();
        let sel = &net.selection;
        let tx = &net.transactions;
        let g = &net.group;
        Scenario {
            version: SCENARIO_VERSION,
            name: "scenario".into(),
            epochs: 100,
            seeds: vec![0],
            output_dir: None,
            initial_miners: net.initial_miners,
            join_mean: net.join_mean,
            leave_mean: net.leave_mean,
            dishonest_fraction: net.dishonest_fraction,
            straggler_cap: net.straggler_cap,
            straggler_silence: net.straggler_silence,
            discrepancy: net.discrepancy,
            epsilon: net.epsilon,
            forgetting: net.forgetting,
            batch_size: net.batch_size,
            cache_budget: net.cache_budget,
            mode: sel.mode,
            compute_budget: sel.compute_budget,
            size_budget: sel.size_budget,
            q1: sel.q1,
            q2: sel.q2,
            q3: sel.q3,
            gamma_scale: sel.gamma_scale,
            compute_shape: tx.compute_shape,
            fee_scale: tx.fee_scale,
            fee_max: tx.fee_max,
            age_scale: tx.age_scale,
            age_max: tx.age_max,
            size_mean: tx.size_mean,
            size_std: tx.size_std,
            depth_base: tx.depth_base,
            depth_step: tx.depth_step,
            depth_groups: tx.depth_groups,
            valid_probability: tx.valid_probability,
            code_rate: g.rate,
            failure_budget: g.failure_budget,
            group_trials: g.trials,
            group_margin: g.margin,
            erasure: g.erasure,
            max_group_blocks: g.max_sources,
            degree_c: g.degree_c,
            degree_delta: g.degree_delta,
            sweep_axis: None,
            sweep_values: Vec::new(),
        }
    }
}

fn line_at(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Line holding `key = ...`, if the key is present.
fn line_of(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|k| k + 1)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let scenario: Scenario = toml::from_str(text).map_err(|e| CliError::Parse {
        line: e.span().map(|s| line_at(text, s.start)),
        message: e.message().trim().to_string(),
    })?;
    scenario.validate().map_err(|e| match e {
        CliError::Invalid { key, message, .. } => {
            let line = line_of(text, &key);
            CliError::Invalid { line, key, message }
        }
        other => other,
    })?;
    Ok(scenario)
}

pub fn to_toml(scenario: &Scenario) -> Result<String, CliError> {
    toml::to_string(scenario).map_err(|e| CliError::Serialize(e.to_string()))
}

fn invalid(key: &str, message: impl Into<String>) -> CliError {
    CliError::Invalid { line: None, key: key.into(), message: message.into() }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.version != SCENARIO_VERSION {
            return Err(invalid("version", format!("unsupported version {}, expected {SCENARIO_VERSION}", self.version)));
        }
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(invalid("name", "name must be non-empty ASCII letters, digits, '-' or '_'"));
        }
        if self.epochs == 0 {
            return Err(invalid("epochs", "at least one epoch is required"));
        }
        if self.seeds.is_empty() {
            return Err(invalid("seeds", "at least one seed is required"));
        }
        if self.sweep_axis.is_some() && self.sweep_values.is_empty() {
            return Err(invalid("sweep_values", "a sweep needs at least one value"));
        }
        if let Some(axis) = &self.sweep_axis {
            crate::runner::Axis::parse(axis).map_err(|e| invalid("sweep_axis", e.to_string()))?;
        }
        let config = self.network(self.seeds[0]);
        config.validate().map_err(|e| {
            let message = e.to_string();
            // Point at the first key the message names, if any.
            let key = FIELD_KEYS
                .iter()
                .find(|k| message.contains(*k) || message.contains(&k.replace('_', " ")))
                .copied()
                .unwrap_or("scenario");
            invalid(key, message)
        })
    }

    pub fn network(&self, seed: u64) -> NetworkConfig {
        NetworkConfig {
            initial_miners: self.initial_miners,
            join_mean: self.join_mean,
            leave_mean: self.leave_mean,
            dishonest_fraction: self.dishonest_fraction,
            straggler_cap: self.straggler_cap,
            straggler_silence: self.straggler_silence,
            discrepancy: self.discrepancy,
            epsilon: self.epsilon,
            forgetting: self.forgetting,
            batch_size: self.batch_size,
            group: GroupPolicy {
                rate: self.code_rate,
                failure_budget: self.failure_budget,
                trials: self.group_trials,
                margin: self.group_margin,
                erasure: self.erasure,
                max_sources: self.max_group_blocks,
                degree_c: self.degree_c,
                degree_delta: self.degree_delta,
            },
            cache_budget: self.cache_budget,
            selection: SelectionProblem {
                compute_budget: self.compute_budget,
                size_budget: self.size_budget,
                depth_limit: 0,
                q1: self.q1,
                q2: self.q2,
                q3: self.q3,
                gamma_scale: self.gamma_scale,
                size_variance: self.size_std * self.size_std / self.size_mean,
                mode: self.mode,
            },
            transactions: TxDistributions {
                fee_scale: self.fee_scale,
                fee_max: self.fee_max,
                age_scale: self.age_scale,
                age_max: self.age_max,
                compute_shape: self.compute_shape,
                compute_scale: self.gamma_scale,
                size_mean: self.size_mean,
                size_std: self.size_std,
                depth_base: self.depth_base,
                depth_step: self.depth_step,
                depth_groups: self.depth_groups,
                valid_probability: self.valid_probability,
            },
            seed,
        }
    }
}

const FIELD_KEYS: &[&str] = &[
    "initial_miners",
    "join_mean",
    "leave_mean",
    "dishonest_fraction",
    "straggler_cap",
    "discrepancy",
    "epsilon",
    "forgetting",
    "batch_size",
];
