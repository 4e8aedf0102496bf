//! Reliability tracking, miner assignment, committed votes, majority tallies
//! and block formation.

mod assign;
mod block;
mod reliability;
mod vote;

use thiserror::Error;

use crate::MinerId;

pub use assign::{assign_miners, AssignmentPlan};
pub use block::{form_block, Block, BlockRow, BLOCK_HEADER_BYTES, BLOCK_ROW_BYTES, BLOCK_VERSION};
pub use reliability::{
    aggregate_reliability, required_miners, update_reliability, MinerRequirement, ReliabilityTracker, RELIABILITY_FLOOR,
    TRUST_MARGIN,
};
pub use vote::{
    commit_vote, tally_state_updates, tally_transaction_votes, CommitmentBoard, StateOutcome, Vote, VoteRecord,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConsensusError {
    #[error("{correct} correct votes out of {assigned} assigned")]
    Accuracy { correct: usize, assigned: usize },
    #[error("forgetting factor must lie in (0, 1), got {0}")]
    Forgetting(f64),
    #[error("epsilon must lie in (0, 1), got {0}")]
    Epsilon(f64),
    #[error("no live miners")]
    NoMiners,
    #[error("unknown miner {0}")]
    UnknownMiner(MinerId),
    #[error("miner {0} already revealed this epoch")]
    Equivocation(MinerId),
    #[error("miner {0} revealed without a commitment")]
    Uncommitted(MinerId),
    #[error("reveal of miner {0} does not match its commitment")]
    CommitmentMismatch(MinerId),
    #[error("malformed record: {0}")]
    Malformed(String),
    #[error("serialized block needs {need} bytes, symbol length is {have}")]
    SizeOverflow { need: usize, have: usize },
}
