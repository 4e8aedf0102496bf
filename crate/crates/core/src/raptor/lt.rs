//! Coded blocks: one LT output symbol per miner and group.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DegreeDistribution, RaptorError};
use crate::gf::SymbolVector;
use crate::MinerId;

/// A miner's stored symbol for one closed group. Neighbor indices are
/// 0-based intermediate positions, kept sorted and distinct.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodedBlock {
    owner: MinerId,
    group: u32,
    neighbors: Vec<u32>,
    payload: SymbolVector,
}

impl CodedBlock {
    /// Builds the block whose payload is the XOR of `neighbors`.
    pub fn from_neighbors(
        intermediates: &[SymbolVector],
        neighbors: &[u32],
        owner: MinerId,
        group: u32,
    ) -> Result<Self, RaptorError> {
        if intermediates.is_empty() {
            return Err(RaptorError::NoIntermediates);
        }
        if neighbors.is_empty() {
            return Err(RaptorError::Neighbors("empty neighbor set".into()));
        }
        let mut sorted = neighbors.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(RaptorError::Neighbors(format!("duplicate neighbor in {neighbors:?}")));
        }
        if let Some(&bad) = sorted.iter().find(|&&i| i as usize >= intermediates.len()) {
            return Err(RaptorError::IndexOutOfRange { index: bad as usize, support: intermediates.len() });
        }
        let payload = SymbolVector::xor_all(sorted.iter().map(|&i| &intermediates[i as usize]))?;
        Ok(CodedBlock { owner, group, neighbors: sorted, payload })
    }

    /// Assembles a block from parts already known to be consistent.
    pub fn from_parts(owner: MinerId, group: u32, neighbors: Vec<u32>, payload: SymbolVector) -> Self {
        let mut neighbors = neighbors;
        neighbors.sort_unstable();
        neighbors.dedup();
        CodedBlock { owner, group, neighbors, payload }
    }

    pub fn owner(&self) -> MinerId {
        self.owner
    }

    pub fn group(&self) -> u32 {
        self.group
    }

    pub fn neighbors(&self) -> &[u32] {
        &self.neighbors
    }

    pub fn degree(&self) -> usize {
        self.neighbors.len()
    }

    pub fn payload(&self) -> &SymbolVector {
        &self.payload
    }

    pub fn is_systematic(&self) -> bool {
        self.neighbors.len() == 1
    }
}

/// Systematic block `j` (0-based): a verbatim copy of intermediate `j`.
pub fn systematic_block(
    intermediates: &[SymbolVector],
    j: usize,
    owner: MinerId,
    group: u32,
) -> Result<CodedBlock, RaptorError> {
    if j >= intermediates.len() {
        return Err(RaptorError::IndexOutOfRange { index: j, support: intermediates.len() });
    }
    Ok(CodedBlock {
        owner,
        group,
        neighbors: vec![j as u32],
        payload: intermediates[j].clone(),
    })
}

/// Parity block with degree drawn from `dist` and uniform distinct neighbors.
pub fn lt_encode_parity<R: Rng + ?Sized>(
    intermediates: &[SymbolVector],
    dist: &DegreeDistribution,
    owner: MinerId,
    group: u32,
    rng: &mut R,
) -> Result<CodedBlock, RaptorError> {
    if intermediates.is_empty() {
        return Err(RaptorError::NoIntermediates);
    }
    if dist.support() != intermediates.len() {
        return Err(RaptorError::Support(intermediates.len()));
    }
    let neighbors = dist.sample_neighbors(rng);
    CodedBlock::from_neighbors(intermediates, &neighbors, owner, group)
}
