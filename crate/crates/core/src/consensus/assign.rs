use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ConsensusError;
use crate::MinerId;

/// Which miners verify which selected transaction in one epoch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentPlan {
    pub epoch: u64,
    /// M(t) as requested; sets hold `min(M, N)` miners.
    pub miners_per_tx: usize,
    /// 𝓜_i for each selected transaction, sorted by miner id.
    pub sets: Vec<Vec<MinerId>>,
}

impl AssignmentPlan {
    pub fn transactions(&self) -> usize {
        self.sets.len()
    }

    /// Transaction indices assigned to each miner, ascending; a miner's vote
    /// vector follows this order.
    pub fn by_miner(&self) -> BTreeMap<MinerId, Vec<usize>> {
        let mut out: BTreeMap<MinerId, Vec<usize>> = BTreeMap::new();
        for (i, set) in self.sets.iter().enumerate() {
            for &m in set {
                out.entry(m).or_default().push(i);
            }
        }
        out
    }

    /// q_j(t) per miner with at least one assignment.
    pub fn loads(&self) -> BTreeMap<MinerId, usize> {
        self.by_miner().into_iter().map(|(m, v)| (m, v.len())).collect()
    }
}

/// Independently samples, for each of `count` transactions, `min(M, N)` distinct live miners.
pub fn assign_miners<R: Rng + ?Sized>(
    epoch: u64,
    count: usize,
    miners_per_tx: usize,
    live: &[MinerId],
    rng: &mut R,
) -> Result<AssignmentPlan, ConsensusError> {
    if live.is_empty() {
        return Err(ConsensusError::NoMiners);
    }
    let take = miners_per_tx.min(live.len());
    let sets = (0..count)
        .map(|_| {
            let mut set: Vec<MinerId> = if take == live.len() {
                live.to_vec()
            } else {
                sample(rng, live.len(), take).into_iter().map(|k| live[k]).collect()
            };
            set.sort_unstable();
            set
        })
        .collect();
    Ok(AssignmentPlan { epoch, miners_per_tx, sets })
}
