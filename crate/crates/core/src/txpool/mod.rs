//! Transaction generation, rewards and per-epoch selection.

mod lp;
mod reward;
mod select;
mod special;
mod transaction;

use thiserror::Error;

pub use lp::{solve_box_lp, LpError, LpSolution};
pub use reward::compute_rewards;
pub use select::{
    brute_force_select, compute_shape_budget, deterministic_budgets, depth_cost, randomized_round,
    reduce_stochastic_to_linear, select_transactions, size_mean_budget, solve_relaxed, LinearBudgets, Selection,
    SelectionMode, SelectionProblem,
};
pub use special::{lower_gamma, normal_cdf, normal_quantile, regularized_gamma, upper_gamma, SpecialError};
pub use transaction::{generate_fresh, StateValue, Transaction, TxDistributions, PAYLOAD_BYTES};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TxError {
    #[error("empty transaction pool")]
    Empty,
    #[error("attribute vector has zero or non-finite norm")]
    ZeroVector,
    #[error("attribute lengths differ: vitality {vitality}, age {age}, fee {fee}")]
    Length { vitality: usize, age: usize, fee: usize },
    #[error("invalid distribution: {0}")]
    Distribution(String),
    #[error("invalid selection problem: {0}")]
    Problem(String),
    #[error("no selection satisfies the budgets")]
    EmptyFeasible,
    #[error("brute force limited to 20 transactions, got {0}")]
    TooLarge(usize),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Special(#[from] SpecialError),
}
