//! Targeted repair of a single intermediate codeword from one edge block.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::gf::SymbolVector;
use crate::raptor::CodedBlock;
use crate::MinerId;

/// Source of intermediates a repairing miner already holds.
pub trait IntermediateCache {
    fn intermediate(&self, index: usize) -> Option<&SymbolVector>;
}

impl IntermediateCache for BTreeMap<usize, SymbolVector> {
    fn intermediate(&self, index: usize) -> Option<&SymbolVector> {
        self.get(&index)
    }
}

impl IntermediateCache for HashMap<usize, SymbolVector> {
    fn intermediate(&self, index: usize) -> Option<&SymbolVector> {
        self.get(&index)
    }
}

impl IntermediateCache for [Option<SymbolVector>] {
    fn intermediate(&self, index: usize) -> Option<&SymbolVector> {
        self.get(index).and_then(Option::as_ref)
    }
}

impl IntermediateCache for Vec<Option<SymbolVector>> {
    fn intermediate(&self, index: usize) -> Option<&SymbolVector> {
        self.as_slice().intermediate(index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum RepairFailure {
    #[error("no responding miner stores a block covering intermediate {0}")]
    NoEdgeBlock(usize),
    #[error("every edge block for intermediate {0} has a neighbor missing from the cache")]
    MissingNeighbors(usize),
}

/// A successful repair and the edge block it used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Repair {
    pub value: SymbolVector,
    pub via: MinerId,
    /// XOR operations performed.
    pub xors: usize,
}

/// Recovers intermediate `target` as `c(j') ^ XOR of its other neighbors`.
///
/// `responders` are the coded blocks of miners that answered the query; the
/// edge set is every responder whose neighbor set contains `target`.
/// Candidates are tried by ascending degree, then owner id.
pub fn rnm_repair<'a, C, I>(target: usize, responders: I, cache: &C) -> Result<Repair, RepairFailure>
where
    C: IntermediateCache + ?Sized,
    I: IntoIterator<Item = &'a CodedBlock>,
{
    let mut edges: Vec<&CodedBlock> = responders
        .into_iter()
        .filter(|b| b.neighbors().binary_search(&(target as u32)).is_ok())
        .collect();
    if edges.is_empty() {
        return Err(RepairFailure::NoEdgeBlock(target));
    }
    edges.sort_by_key(|b| (b.degree(), b.owner()));
    for edge in edges {
        let others: Option<Vec<&SymbolVector>> = edge
            .neighbors()
            .iter()
            .filter(|&&h| h as usize != target)
            .map(|&h| cache.intermediate(h as usize))
            .collect();
        let Some(others) = others else { continue };
        let mut value = edge.payload().clone();
        for other in &others {
            if value.xor_assign(other).is_err() {
                // A cached vector of the wrong shape cannot belong to this group.
                return Err(RepairFailure::MissingNeighbors(target));
            }
        }
        return Ok(Repair { value, via: edge.owner(), xors: others.len() });
    }
    Err(RepairFailure::MissingNeighbors(target))
}
