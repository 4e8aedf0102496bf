//! Closed block groups: boundary encoding and recovery of erased blocks.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::NetsimError;
use crate::consensus::Block;
use crate::gf::SymbolVector;
use crate::precode::{precode_encode, PrecodeMatrix};
use crate::raptor::{
    full_decode, lt_encode_parity, peel_structure, systematic_block, CodedBlock, DegreeDistribution, GroupPolicy,
    GroupSize,
};
use crate::MinerId;

/// Symbol lengths are rounded up to this many bytes.
pub const SYMBOL_ALIGN: usize = 64;

/// Everything the network needs to know about a closed group once its raw
/// blocks are erased.
#[derive(Debug, Clone)]
pub struct ClosedGroup {
    pub index: u32,
    /// Heights `first..=last` of the W encoded blocks.
    pub first: u64,
    pub last: u64,
    pub size: GroupSize,
    pub symbol_len: usize,
    pub code: PrecodeMatrix,
    pub dist: DegreeDistribution,
    /// Header digests of the encoded blocks, used to check recovered data.
    pub digests: Vec<[u8; 32]>,
    /// Holder of each systematic intermediate while it stays live.
    pub systematic: Vec<Option<MinerId>>,
    /// Intermediates once some miner has decoded the group.
    pub recovered: Option<Vec<SymbolVector>>,
}

impl ClosedGroup {
    pub fn sources(&self) -> usize {
        self.size.sources
    }

    pub fn outputs(&self) -> usize {
        self.size.outputs
    }

    pub fn contains(&self, height: u64) -> bool {
        (self.first..=self.last).contains(&height)
    }

    /// Position of `height` among the group's source blocks.
    pub fn position(&self, height: u64) -> Option<usize> {
        self.contains(height).then(|| (height - self.first) as usize)
    }

    /// Whether the given coded blocks peel to at least W intermediates.
    pub fn decodable<'a, I: IntoIterator<Item = &'a CodedBlock>>(&self, blocks: I) -> bool {
        let sets: Vec<&[u32]> = blocks.into_iter().map(|b| b.neighbors()).collect();
        peel_structure(&sets, self.outputs()).resolved() >= self.sources()
    }

    /// Full decode of the group from `blocks`; on success the source blocks
    /// are checked against the header digests and all W̄ intermediates are
    /// rebuilt and kept.
    pub fn recover<'a, I: IntoIterator<Item = &'a CodedBlock>>(&mut self, blocks: I) -> Result<&[SymbolVector], NetsimError> {
        if self.recovered.is_none() {
            let sources = full_decode(blocks, &self.code)?;
            for (k, s) in sources.iter().enumerate() {
                let block = Block::from_symbol(s)?;
                if block.digest() != self.digests[k] {
                    return Err(NetsimError::Corrupt { group: self.index, position: k });
                }
            }
            self.recovered = Some(precode_encode(&sources, &self.code)?);
        }
        Ok(self.recovered.as_deref().unwrap_or_default())
    }
}

/// Symbol length for a set of blocks: the longest padded form, aligned.
pub fn symbol_len_for(blocks: &[Block]) -> usize {
    let longest = blocks.iter().map(Block::padded_len).max().unwrap_or(4);
    longest.div_ceil(SYMBOL_ALIGN) * SYMBOL_ALIGN
}

/// Field width for a precode with `outputs` intermediates.
pub fn field_bits(outputs: usize) -> u32 {
    if outputs <= 256 {
        8
    } else {
        16
    }
}

pub struct EncodedGroup {
    pub group: ClosedGroup,
    pub intermediates: Vec<SymbolVector>,
    /// One block per live miner, in the order of `live`.
    pub coded: Vec<CodedBlock>,
}

/// Precodes `blocks` into W̄ intermediates; the first W̄ miners of `live`
/// (sorted by id) receive systematic blocks and the rest parity blocks.
pub fn encode_group_boundary<R: Rng + ?Sized>(
    index: u32,
    first_height: u64,
    blocks: &[Block],
    live: &[MinerId],
    size: GroupSize,
    policy: &GroupPolicy,
    rng: &mut R,
) -> Result<EncodedGroup, NetsimError> {
    if blocks.len() != size.sources {
        return Err(NetsimError::Config(format!("group needs {} blocks, got {}", size.sources, blocks.len())));
    }
    if live.len() <= size.outputs {
        return Err(NetsimError::TooFewMiners { miners: live.len(), outputs: size.outputs });
    }
    let bits = field_bits(size.outputs);
    let symbol_len = symbol_len_for(blocks);
    let code = PrecodeMatrix::with_field(size.sources, size.outputs, bits)?;
    let dist = DegreeDistribution::build(size.outputs, policy.degree_c, policy.degree_delta)?;
    let sources: Vec<SymbolVector> = blocks.iter().map(|b| b.to_symbol(symbol_len, bits)).collect::<Result<_, _>>()?;
    let intermediates = precode_encode(&sources, &code)?;
    let mut coded = Vec::with_capacity(live.len());
    let mut systematic = vec![None; size.outputs];
    for (j, &miner) in live.iter().enumerate() {
        let block = if j < size.outputs {
            systematic[j] = Some(miner);
            systematic_block(&intermediates, j, miner, index)?
        } else {
            lt_encode_parity(&intermediates, &dist, miner, index, rng)?
        };
        coded.push(block);
    }
    let group = ClosedGroup {
        index,
        first: first_height,
        last: first_height + size.sources as u64 - 1,
        size,
        symbol_len,
        code,
        dist,
        digests: blocks.iter().map(Block::digest).collect(),
        systematic,
        recovered: None,
    };
    Ok(EncodedGroup { group, intermediates, coded })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FetchPath {
    /// Open group, own cache or own systematic block.
    Local,
    /// RNM repair from one responding miner, possibly a systematic holder.
    Repaired,
    /// Full decode of the group.
    Decoded,
    Unavailable,
}
