//! Epoch-driven network simulator: miner churn, coded storage and the full
//! selection, assignment and voting pipeline.

mod config;
mod depth;
mod engine;
mod roster;
mod storage;

use thiserror::Error;

pub use config::NetworkConfig;
pub use depth::{adjust_depth_limit, depth_candidates};
pub use engine::{BoundaryEvent, Engine, EpochRecord, FetchStats};
pub use roster::{Behavior, MinerState, PopulationChange, Roster};
pub use storage::{encode_group_boundary, field_bits, symbol_len_for, ClosedGroup, EncodedGroup, FetchPath, SYMBOL_ALIGN};

use crate::consensus::ConsensusError;
use crate::metrics::MetricsError;
use crate::precode::PrecodeError;
use crate::raptor::{DecodeError, RaptorError};
use crate::txpool::TxError;
use crate::MinerId;

#[derive(Debug, Error)]
pub enum NetsimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{miners} live miners cannot hold {outputs} intermediates plus parity")]
    TooFewMiners { miners: usize, outputs: usize },
    #[error("recovered block {position} of group {group} does not match its header digest")]
    Corrupt { group: u32, position: usize },
    #[error("miner {0} is not in the roster")]
    UnknownMiner(MinerId),
    #[error(transparent)]
    Raptor(#[from] RaptorError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Precode(#[from] PrecodeError),
    #[error(transparent)]
    Tx(#[from] TxError),
    #[error(transparent)]
    Consensus(#[from] ConsensusError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}
