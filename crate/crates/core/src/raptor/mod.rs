//! Outer LT code: degree distribution, coded blocks, targeted repair,
//! peeling and full decode, and group sizing.

mod decode;
mod degree;
mod group;
mod lt;
mod rnm;

use thiserror::Error;

pub use decode::{full_decode, peel_decode, peel_partial, peel_structure, DecodeError, PeelSchedule};
pub use degree::DegreeDistribution;
pub use group::{choose_group_size, estimate_failure, sources_for, GroupPolicy, GroupSize};
pub use lt::{lt_encode_parity, systematic_block, CodedBlock};
pub use rnm::{rnm_repair, IntermediateCache, Repair, RepairFailure};

use crate::gf::GfError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RaptorError {
    #[error("degree distribution needs W-bar >= 2 matching the intermediates, got {0}")]
    Support(usize),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("no intermediate codewords supplied")]
    NoIntermediates,
    #[error("invalid neighbor set: {0}")]
    Neighbors(String),
    #[error("index {index} out of range for W-bar = {support}")]
    IndexOutOfRange { index: usize, support: usize },
    #[error(transparent)]
    Field(#[from] GfError),
}
