//! Block wire format, version 1, all integers little-endian:
//!
//! ```text
//! header (48 bytes): version u16 | reserved u16 | epoch u64 | parent [32] | rows u32
//! row (32 bytes):    id u64 | L [12] | S [8] | R [4]
//! ```
//!
//! The padded form used as a coding symbol is `len u32 | bytes | zeros`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ConsensusError;
use crate::gf::SymbolVector;
use crate::txpool::{StateValue, Transaction};

pub const BLOCK_VERSION: u16 = 1;
pub const BLOCK_HEADER_BYTES: usize = 48;
pub const BLOCK_ROW_BYTES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockRow {
    pub id: u64,
    pub ledger: [u8; 12],
    pub state: StateValue,
    pub receipt: [u8; 4],
}

impl BlockRow {
    /// Row for a confirmed transaction carrying the agreed state.
    pub fn confirmed(tx: &Transaction, state: StateValue) -> Self {
        let mut ledger = [0u8; 12];
        ledger.copy_from_slice(tx.ledger_part());
        let mut receipt = [0u8; 4];
        receipt.copy_from_slice(tx.receipt_part());
        BlockRow { id: tx.id, ledger, state, receipt }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub epoch: u64,
    pub parent: [u8; 32],
    pub rows: Vec<BlockRow>,
}

pub fn form_block(epoch: u64, rows: Vec<BlockRow>, parent: [u8; 32]) -> Block {
    Block { epoch, parent, rows }
}

impl Block {
    pub fn serialized_len(&self) -> usize {
        BLOCK_HEADER_BYTES + BLOCK_ROW_BYTES * self.rows.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.serialized_len());
        out.extend_from_slice(&BLOCK_VERSION.to_le_bytes());
        out.extend_from_slice(&0u16.to_le_bytes());
        out.extend_from_slice(&self.epoch.to_le_bytes());
        out.extend_from_slice(&self.parent);
        out.extend_from_slice(&(self.rows.len() as u32).to_le_bytes());
        for r in &self.rows {
            out.extend_from_slice(&r.id.to_le_bytes());
            out.extend_from_slice(&r.ledger);
            out.extend_from_slice(&r.state);
            out.extend_from_slice(&r.receipt);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Block, ConsensusError> {
        let bad = |why: &str| ConsensusError::Malformed(why.to_string());
        if bytes.len() < BLOCK_HEADER_BYTES {
            return Err(bad("truncated header"));
        }
        let version = u16::from_le_bytes([bytes[0], bytes[1]]);
        if version != BLOCK_VERSION {
            return Err(ConsensusError::Malformed(format!("unsupported block version {version}")));
        }
        let epoch = u64::from_le_bytes(bytes[4..12].try_into().unwrap());
        let parent: [u8; 32] = bytes[12..44].try_into().unwrap();
        let count = u32::from_le_bytes(bytes[44..48].try_into().unwrap()) as usize;
        if bytes.len() != BLOCK_HEADER_BYTES + count * BLOCK_ROW_BYTES {
            return Err(bad("row count does not match length"));
        }
        let rows = bytes[BLOCK_HEADER_BYTES..]
            .chunks_exact(BLOCK_ROW_BYTES)
            .map(|c| BlockRow {
                id: u64::from_le_bytes(c[..8].try_into().unwrap()),
                ledger: c[8..20].try_into().unwrap(),
                state: c[20..28].try_into().unwrap(),
                receipt: c[28..32].try_into().unwrap(),
            })
            .collect();
        Ok(Block { epoch, parent, rows })
    }

    pub fn digest(&self) -> [u8; 32] {
        Sha256::digest(self.to_bytes()).into()
    }

    /// Bytes needed by [`Block::padded`].
    pub fn padded_len(&self) -> usize {
        4 + self.serialized_len()
    }

    /// Length-prefixed serialization zero-filled to exactly `symbol_len` bytes.
    pub fn padded(&self, symbol_len: usize) -> Result<Vec<u8>, ConsensusError> {
        let body = self.to_bytes();
        let need = 4 + body.len();
        if need > symbol_len {
            return Err(ConsensusError::SizeOverflow { need, have: symbol_len });
        }
        let mut out = Vec::with_capacity(symbol_len);
        out.extend_from_slice(&(body.len() as u32).to_le_bytes());
        out.extend_from_slice(&body);
        out.resize(symbol_len, 0);
        Ok(out)
    }

    pub fn from_padded(bytes: &[u8]) -> Result<Block, ConsensusError> {
        if bytes.len() < 4 {
            return Err(ConsensusError::Malformed("missing length prefix".into()));
        }
        let len = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize;
        let body = bytes.get(4..4 + len).ok_or_else(|| ConsensusError::Malformed("length prefix overruns".into()))?;
        Block::from_bytes(body)
    }

    pub fn to_symbol(&self, symbol_len: usize, bits: u32) -> Result<SymbolVector, ConsensusError> {
        let bytes = self.padded(symbol_len)?;
        SymbolVector::from_bytes(bits, bytes).map_err(|e| ConsensusError::Malformed(e.to_string()))
    }

    pub fn from_symbol(symbol: &SymbolVector) -> Result<Block, ConsensusError> {
        Block::from_padded(symbol.as_bytes())
    }
}
