use serde::{Deserialize, Serialize};

use super::NetsimError;
use crate::raptor::GroupPolicy;
use crate::txpool::{SelectionMode, SelectionProblem, TxDistributions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// N₀.
    pub initial_miners: usize,
    /// λ_e, mean joins per epoch transition.
    pub join_mean: f64,
    /// λ_l, mean leaves per epoch transition.
    pub leave_mean: f64,
    /// μ.
    pub dishonest_fraction: f64,
    /// Upper bound on the straggler share of the roster.
    pub straggler_cap: f64,
    /// Per-epoch probability that a straggler stays silent.
    pub straggler_silence: f64,
    /// ϑ, distinct messages a dishonest miner could send. Votes are binary,
    /// so it never reaches the trace.
    pub discrepancy: u32,
    /// ε of the majority-error bound.
    pub epsilon: f64,
    /// β of the reliability update.
    pub forgetting: f64,
    /// n, transactions per batch.
    pub batch_size: usize,
    pub group: GroupPolicy,
    /// Intermediates each miner keeps per closed group.
    pub cache_budget: usize,
    pub selection: SelectionProblem,
    pub transactions: TxDistributions,
    pub seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            initial_miners: 500,
            join_mean: 0.0,
            leave_mean: 0.0,
            dishonest_fraction: 0.3,
            straggler_cap: 0.4,
            straggler_silence: 1.0 / 3.0,
            discrepancy: 1,
            epsilon: 0.01,
            forgetting: 0.1,
            batch_size: 500,
            group: GroupPolicy { max_sources: 50, ..GroupPolicy::default() },
            cache_budget: 0,
            selection: SelectionProblem { mode: SelectionMode::Deterministic, ..SelectionProblem::default() },
            transactions: TxDistributions::default(),
            seed: 0,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<(), NetsimError> {
        let bad = |what: String| Err(NetsimError::Config(what));
        if self.initial_miners < 3 {
            return bad(format!("at least 3 initial miners are required, got {}", self.initial_miners));
        }
        for (name, v) in [("join_mean", self.join_mean), ("leave_mean", self.leave_mean)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a non-negative rate, got {v}"));
            }
        }
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.dishonest_fraction) || !unit(self.straggler_cap) || !unit(self.straggler_silence) {
            return bad("fractions and probabilities must lie in [0, 1]".into());
        }
        if self.dishonest_fraction + self.straggler_cap >= 1.0 {
            return bad(format!(
                "dishonest fraction {} plus straggler cap {} must stay below 1",
                self.dishonest_fraction, self.straggler_cap
            ));
        }
        if self.discrepancy < 1 {
            return bad("discrepancy must be at least 1".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if !(self.forgetting > 0.0 && self.forgetting < 1.0) {
            return bad(format!("forgetting factor must lie in (0, 1), got {}", self.forgetting));
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive".into());
        }
        self.selection.validate().map_err(|e| NetsimError::Config(e.to_string()))?;
        self.transactions.validate().map_err(|e| NetsimError::Config(e.to_string()))?;
        Ok(())
    }
}
