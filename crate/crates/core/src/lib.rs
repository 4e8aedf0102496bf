//! Raptor-coded IoT blockchain simulator.
//!
//! Closed block groups are precoded with a systematic Reed–Solomon code and
//! spread across miners as LT symbols. Each epoch a coordinator selects
//! transactions under stochastic resource budgets, assigns each to a random
//! subset of miners sized by their aggregate reliability, and appends the
//! transactions that win a strict majority.

pub mod consensus;
pub mod gf;
pub mod metrics;
pub mod netsim;
pub mod precode;
pub mod raptor;
pub mod txpool;

/// Stable miner identity; assigned in join order and never reused.
pub type MinerId = u64;
