//! Systematic Reed–Solomon precode applied independently at every symbol
//! position of a block group.
//!
//! Output `k` (0-based) is the evaluation at field point `k` of the unique
//! polynomial of degree < W that takes the value of source block `i` at point
//! `i`. Outputs `0..W` are therefore the sources themselves and any W outputs
//! determine the rest (MDS).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::{Field, GfError, SymbolVector};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrecodeError {
    #[error("precode needs 1 <= W <= W-bar, got W = {sources}, W-bar = {outputs}")]
    BadShape { sources: usize, outputs: usize },
    #[error("W-bar = {outputs} exceeds the {order} points of GF(2^{bits})")]
    TooManyOutputs { outputs: usize, order: usize, bits: u32 },
    #[error("expected {expected} source blocks, got {got}")]
    SourceCount { expected: usize, got: usize },
    #[error("only {have} distinct outputs available, {need} required")]
    Insufficient { have: usize, need: usize },
    #[error("output index {index} out of range for W-bar = {outputs}")]
    IndexOutOfRange { index: usize, outputs: usize },
    #[error(transparent)]
    Field(#[from] GfError),
}

/// Generator description for a systematic (W̄, W) Reed–Solomon code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecodeMatrix {
    sources: usize,
    outputs: usize,
    bits: u32,
    /// Row `k - W` holds the Lagrange weights of output `k` over the sources.
    parity: Vec<Vec<u32>>,
}

impl PrecodeMatrix {
    /// Code over the smallest supported field that has W̄ evaluation points.
    pub fn new(sources: usize, outputs: usize) -> Result<Self, PrecodeError> {
        let bits = if outputs <= 256 { 8 } else { 16 };
        Self::with_field(sources, outputs, bits)
    }

    pub fn with_field(sources: usize, outputs: usize, bits: u32) -> Result<Self, PrecodeError> {
        if sources == 0 || outputs < sources {
            return Err(PrecodeError::BadShape { sources, outputs });
        }
        let field = Field::get(bits)?;
        if outputs > field.order() as usize {
            return Err(PrecodeError::TooManyOutputs {
                outputs,
                order: field.order() as usize,
                bits,
            });
        }
        let points: Vec<u32> = (0..sources as u32).collect();
        let parity = (sources..outputs)
            .map(|k| lagrange_row(field, &points, k as u32))
            .collect::<Result<_, _>>()?;
        Ok(PrecodeMatrix { sources, outputs, bits, parity })
    }

    /// W.
    pub fn sources(&self) -> usize {
        self.sources
    }

    /// W̄.
    pub fn outputs(&self) -> usize {
        self.outputs
    }

    /// Field width p.
    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Generator coefficient from source `i` to output `k`.
    pub fn coefficient(&self, k: usize, i: usize) -> u32 {
        if k < self.sources {
            (k == i) as u32
        } else {
            self.parity[k - self.sources][i]
        }
    }
}

/// Weights `L_i(x)` of the Lagrange basis over `points`, evaluated at `x`.
fn lagrange_row(field: &Field, points: &[u32], x: u32) -> Result<Vec<u32>, GfError> {
    if let Some(hit) = points.iter().position(|&p| p == x) {
        let mut row = vec![0; points.len()];
        row[hit] = 1;
        return Ok(row);
    }
    // Barycentric form: L_i(x) = l(x) * w_i / (x - x_i), l(x) = prod (x - x_m).
    let mut ell = 1u32;
    for &p in points {
        ell = field.mul(ell, x ^ p);
    }
    points
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            let mut denom = x ^ xi;
            for (m, &xm) in points.iter().enumerate() {
                if m != i {
                    denom = field.mul(denom, xi ^ xm);
                }
            }
            field.div(ell, denom)
        })
        .collect()
}

fn check_shapes(blocks: &[&SymbolVector], bits: u32) -> Result<(), PrecodeError> {
    if let Some(first) = blocks.first() {
        for b in blocks {
            if b.bits() != bits {
                return Err(GfError::Mismatch(format!("p = {} vs code p = {bits}", b.bits())).into());
            }
            if b.len() != first.len() {
                return Err(
                    GfError::Mismatch(format!("{} vs {} symbols", b.len(), first.len())).into()
                );
            }
        }
    }
    Ok(())
}

/// Encodes W source blocks into W̄ intermediate codewords.
pub fn precode_encode(
    blocks: &[SymbolVector],
    code: &PrecodeMatrix,
) -> Result<Vec<SymbolVector>, PrecodeError> {
    if blocks.len() != code.sources {
        return Err(PrecodeError::SourceCount { expected: code.sources, got: blocks.len() });
    }
    check_shapes(&blocks.iter().collect::<Vec<_>>(), code.bits)?;
    let mut out = blocks.to_vec();
    for row in &code.parity {
        let mut acc = SymbolVector::zeroed(code.bits, blocks[0].len())?;
        for (coef, block) in row.iter().zip(blocks) {
            acc.mul_add_assign(*coef, block)?;
        }
        out.push(acc);
    }
    Ok(out)
}

/// Recovers the W source blocks from any W distinct outputs.
///
/// Systematic outputs are preferred; parity outputs fill the remainder in
/// ascending index order. Duplicate indices keep their first occurrence.
pub fn precode_erasure_decode(
    present: &[(usize, &SymbolVector)],
    code: &PrecodeMatrix,
) -> Result<Vec<SymbolVector>, PrecodeError> {
    let mut slots: Vec<Option<&SymbolVector>> = vec![None; code.outputs];
    for &(index, vector) in present {
        if index >= code.outputs {
            return Err(PrecodeError::IndexOutOfRange { index, outputs: code.outputs });
        }
        slots[index].get_or_insert(vector);
    }
    let available: Vec<usize> = (0..code.outputs).filter(|&k| slots[k].is_some()).collect();
    if available.len() < code.sources {
        return Err(PrecodeError::Insufficient { have: available.len(), need: code.sources });
    }
    let chosen: Vec<usize> = available[..code.sources].to_vec();
    check_shapes(&chosen.iter().map(|&k| slots[k].unwrap()).collect::<Vec<_>>(), code.bits)?;

    // Chosen outputs as evaluations of the degree < W polynomial at the
    // points of their own indices; interpolate back to the source points.
    let field = Field::get(code.bits)?;
    let points: Vec<u32> = chosen.iter().map(|&k| k as u32).collect();
    let symbols = slots[chosen[0]].unwrap().len();
    (0..code.sources)
        .map(|w| {
            if let Some(v) = slots[w] {
                return Ok(v.clone());
            }
            let weights = lagrange_row(field, &points, w as u32)?;
            let mut acc = SymbolVector::zeroed(code.bits, symbols)?;
            for (coef, &k) in weights.iter().zip(&chosen) {
                acc.mul_add_assign(*coef, slots[k].unwrap())?;
            }
            Ok(acc)
        })
        .collect()
}
