//! Peeling decoder over coded blocks and the combined LT + precode decode.
//!
//! Decoding runs in two passes. The structural pass works on neighbor sets
//! alone and records which block resolves which intermediate. The payload
//! pass then replays that schedule, so XOR work is spent only on the chain
//! that was actually used.

use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

use crate::gf::SymbolVector;
use crate::precode::{precode_erasure_decode, PrecodeError, PrecodeMatrix};
use crate::raptor::CodedBlock;
use crate::MinerId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("peeling stalled with {resolved} of {total} intermediates resolved")]
    Stalled { resolved: usize, total: usize },
    #[error("{resolved} intermediates resolved, the precode needs {need}")]
    Insufficient { resolved: usize, need: usize },
    #[error("blocks from miners {first} and {second} share neighbors but disagree on payload")]
    Integrity { first: MinerId, second: MinerId },
    #[error("neighbor {index} out of range for W-bar = {support}")]
    NeighborOutOfRange { index: usize, support: usize },
    #[error("block shapes disagree: {0}")]
    Shape(String),
    #[error(transparent)]
    Precode(#[from] PrecodeError),
}

/// Resolution order found by structural peeling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeelSchedule {
    /// `(intermediate, block)` pairs in the order they resolved.
    pub steps: Vec<(usize, usize)>,
    pub support: usize,
}

impl PeelSchedule {
    pub fn resolved(&self) -> usize {
        self.steps.len()
    }

    pub fn is_complete(&self) -> bool {
        self.steps.len() == self.support
    }
}

/// Structural peel over bare neighbor sets.
pub fn peel_structure<S: AsRef<[u32]>>(neighbor_sets: &[S], support: usize) -> PeelSchedule {
    let mut remaining: Vec<usize> = neighbor_sets.iter().map(|s| s.as_ref().len()).collect();
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); support];
    for (b, set) in neighbor_sets.iter().enumerate() {
        for &i in set.as_ref() {
            adjacency[i as usize].push(b);
        }
    }
    let mut resolved = vec![false; support];
    let mut queue: VecDeque<usize> = (0..neighbor_sets.len()).filter(|&b| remaining[b] == 1).collect();
    let mut steps = Vec::new();
    while let Some(b) = queue.pop_front() {
        let Some(&i) = neighbor_sets[b].as_ref().iter().find(|&&i| !resolved[i as usize]) else {
            continue;
        };
        let i = i as usize;
        resolved[i] = true;
        steps.push((i, b));
        for &other in &adjacency[i] {
            remaining[other] -= 1;
            if remaining[other] == 1 {
                queue.push_back(other);
            }
        }
    }
    PeelSchedule { steps, support }
}

fn validate(blocks: &[&CodedBlock], support: usize) -> Result<(), DecodeError> {
    for b in blocks {
        if let Some(&bad) = b.neighbors().iter().find(|&&i| i as usize >= support) {
            return Err(DecodeError::NeighborOutOfRange { index: bad as usize, support });
        }
    }
    if let Some(first) = blocks.first() {
        let shape = (first.payload().bits(), first.payload().as_bytes().len());
        if let Some(b) = blocks.iter().find(|b| (b.payload().bits(), b.payload().as_bytes().len()) != shape) {
            return Err(DecodeError::Shape(format!(
                "miner {} holds {} bytes at p = {}, expected {} bytes at p = {}",
                b.owner(),
                b.payload().as_bytes().len(),
                b.payload().bits(),
                shape.1,
                shape.0
            )));
        }
    }
    let mut seen: BTreeMap<&[u32], &CodedBlock> = BTreeMap::new();
    for b in blocks {
        if let Some(prev) = seen.insert(b.neighbors(), b) {
            if prev.payload() != b.payload() {
                return Err(DecodeError::Integrity { first: prev.owner(), second: b.owner() });
            }
        }
    }
    Ok(())
}

/// Peels as far as possible and returns whatever resolved.
pub fn peel_partial<'a, I>(coded: I, support: usize) -> Result<Vec<Option<SymbolVector>>, DecodeError>
where
    I: IntoIterator<Item = &'a CodedBlock>,
{
    let blocks: Vec<&CodedBlock> = coded.into_iter().collect();
    validate(&blocks, support)?;
    let sets: Vec<&[u32]> = blocks.iter().map(|b| b.neighbors()).collect();
    let schedule = peel_structure(&sets, support);
    let mut out: Vec<Option<SymbolVector>> = vec![None; support];
    for &(i, b) in &schedule.steps {
        let block = blocks[b];
        let mut value = block.payload().clone();
        for &h in block.neighbors() {
            if h as usize != i {
                let known = out[h as usize].as_ref().expect("schedule resolves neighbors first");
                value.xor_assign(known).map_err(|e| DecodeError::Shape(e.to_string()))?;
            }
        }
        out[i] = Some(value);
    }
    Ok(out)
}

/// All W̄ intermediates, or `Stalled` when peeling cannot finish.
pub fn peel_decode<'a, I>(coded: I, support: usize) -> Result<Vec<SymbolVector>, DecodeError>
where
    I: IntoIterator<Item = &'a CodedBlock>,
{
    let partial = peel_partial(coded, support)?;
    let resolved = partial.iter().filter(|v| v.is_some()).count();
    if resolved < support {
        return Err(DecodeError::Stalled { resolved, total: support });
    }
    Ok(partial.into_iter().map(Option::unwrap).collect())
}

/// Peel, then erasure-decode the precode from any W resolved intermediates.
pub fn full_decode<'a, I>(coded: I, code: &PrecodeMatrix) -> Result<Vec<SymbolVector>, DecodeError>
where
    I: IntoIterator<Item = &'a CodedBlock>,
{
    let partial = peel_partial(coded, code.outputs())?;
    let present: Vec<(usize, &SymbolVector)> =
        partial.iter().enumerate().filter_map(|(i, v)| v.as_ref().map(|v| (i, v))).collect();
    if present.len() < code.sources() {
        return Err(DecodeError::Insufficient { resolved: present.len(), need: code.sources() });
    }
    Ok(precode_erasure_decode(&present, code)?)
}
