//! Arithmetic in GF(2^p) for p in {8, 16} and byte-backed symbol vectors.
//!
//! Reduction polynomials are fixed and part of the external interface:
//! `x^8 + x^4 + x^3 + x^2 + 1` (0x11D) for p = 8 and
//! `x^16 + x^12 + x^3 + x + 1` (0x1100B) for p = 16. In both fields `x`
//! (the element 0x02) generates the multiplicative group, so log/exp tables
//! are built by repeated doubling.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Reduction polynomial for GF(2^8).
pub const POLY_GF8: u32 = 0x11D;
/// Reduction polynomial for GF(2^16).
pub const POLY_GF16: u32 = 0x1100B;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GfError {
    #[error("unsupported field width p = {0} (supported: 8, 16)")]
    UnsupportedWidth(u32),
    #[error("element {value:#x} does not fit in GF(2^{bits})")]
    OutOfField { value: u32, bits: u32 },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("symbol vectors differ: {0}")]
    Mismatch(String),
    #[error("byte length {len} is not a multiple of the {bytes}-byte symbol size")]
    Ragged { len: usize, bytes: usize },
}

/// Log/exp tables for one binary extension field.
#[derive(Debug)]
pub struct Field {
    bits: u32,
    order: u32,
    log: Vec<u32>,
    exp: Vec<u32>,
}

static GF8: OnceLock<Field> = OnceLock::new();
static GF16: OnceLock<Field> = OnceLock::new();

impl Field {
    /// The shared table set for `GF(2^bits)`.
    pub fn get(bits: u32) -> Result<&'static Field, GfError> {
        match bits {
            8 => Ok(GF8.get_or_init(|| Field::build(8, POLY_GF8))),
            16 => Ok(GF16.get_or_init(|| Field::build(16, POLY_GF16))),
            other => Err(GfError::UnsupportedWidth(other)),
        }
    }

    fn build(bits: u32, poly: u32) -> Field {
        let order = 1u32 << bits;
        let group = (order - 1) as usize;
        let mut log = vec![0u32; order as usize];
        // Doubled so that exp[log a + log b] needs no modular reduction.
        let mut exp = vec![0u32; 2 * group];
        let mut x = 1u32;
        for i in 0..group {
            exp[i] = x;
            log[x as usize] = i as u32;
            x <<= 1;
            if x & order != 0 {
                x ^= poly;
            }
        }
        for i in group..2 * group {
            exp[i] = exp[i - group];
        }
        Field { bits, order, log, exp }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Number of field elements, `2^p`.
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn contains(&self, a: u32) -> bool {
        a < self.order
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[(self.log[a as usize] + self.log[b as usize]) as usize]
    }

    pub fn inv(&self, a: u32) -> Result<u32, GfError> {
        if a == 0 {
            return Err(GfError::ZeroInverse);
        }
        let group = self.order - 1;
        Ok(self.exp[((group - self.log[a as usize]) % group) as usize])
    }

    pub fn div(&self, a: u32, b: u32) -> Result<u32, GfError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// Discrete logarithm base `x`; `None` for zero.
    pub fn log(&self, a: u32) -> Option<u32> {
        (a != 0 && a < self.order).then(|| self.log[a as usize])
    }

    /// `x^e`.
    pub fn exp(&self, e: u32) -> u32 {
        self.exp[(e % (self.order - 1)) as usize]
    }
}

/// Field addition (and subtraction).
#[inline]
pub fn gf_add(a: u32, b: u32) -> u32 {
    a ^ b
}

/// Product of `a` and `b` in GF(2^p).
pub fn gf_mul(a: u32, b: u32, bits: u32) -> Result<u32, GfError> {
    let field = Field::get(bits)?;
    for v in [a, b] {
        if !field.contains(v) {
            return Err(GfError::OutOfField { value: v, bits });
        }
    }
    Ok(field.mul(a, b))
}

/// Multiplicative inverse of `a` in GF(2^p).
pub fn gf_inv(a: u32, bits: u32) -> Result<u32, GfError> {
    let field = Field::get(bits)?;
    if !field.contains(a) {
        return Err(GfError::OutOfField { value: a, bits });
    }
    field.inv(a)
}

/// A block viewed as `s` symbols of GF(2^p), stored as raw bytes.
///
/// For p = 16 each symbol occupies two bytes, little-endian. Addition is
/// bytewise XOR regardless of p.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymbolVector {
    bits: u32,
    bytes: Vec<u8>,
}

impl std::fmt::Debug for SymbolVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let head: Vec<String> = self.bytes.iter().take(8).map(|b| format!("{b:02x}")).collect();
        write!(f, "SymbolVector(p={}, {} bytes, {}..)", self.bits, self.bytes.len(), head.join(""))
    }
}

impl SymbolVector {
    pub fn zeroed(bits: u32, symbols: usize) -> Result<Self, GfError> {
        Field::get(bits)?;
        Ok(SymbolVector { bits, bytes: vec![0; symbols * (bits as usize / 8)] })
    }

    pub fn from_bytes(bits: u32, bytes: Vec<u8>) -> Result<Self, GfError> {
        Field::get(bits)?;
        let width = bits as usize / 8;
        if bytes.len() % width != 0 {
            return Err(GfError::Ragged { len: bytes.len(), bytes: width });
        }
        Ok(SymbolVector { bits, bytes })
    }

    pub fn from_symbols(bits: u32, symbols: &[u32]) -> Result<Self, GfError> {
        let mut v = SymbolVector::zeroed(bits, symbols.len())?;
        for (i, &s) in symbols.iter().enumerate() {
            if s >= 1 << bits {
                return Err(GfError::OutOfField { value: s, bits });
            }
            v.set(i, s);
        }
        Ok(v)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Number of symbols `s`.
    pub fn len(&self) -> usize {
        self.bytes.len() / (self.bits as usize / 8)
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn get(&self, i: usize) -> u32 {
        match self.bits {
            8 => self.bytes[i] as u32,
            _ => u16::from_le_bytes([self.bytes[2 * i], self.bytes[2 * i + 1]]) as u32,
        }
    }

    pub fn set(&mut self, i: usize, value: u32) {
        match self.bits {
            8 => self.bytes[i] = value as u8,
            _ => self.bytes[2 * i..2 * i + 2].copy_from_slice(&(value as u16).to_le_bytes()),
        }
    }

    pub fn symbols(&self) -> Vec<u32> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }

    fn check_compatible(&self, other: &SymbolVector) -> Result<(), GfError> {
        if self.bits != other.bits {
            return Err(GfError::Mismatch(format!("p = {} vs p = {}", self.bits, other.bits)));
        }
        if self.bytes.len() != other.bytes.len() {
            return Err(GfError::Mismatch(format!(
                "{} vs {} bytes",
                self.bytes.len(),
                other.bytes.len()
            )));
        }
        Ok(())
    }

    /// `self ^= other`.
    pub fn xor_assign(&mut self, other: &SymbolVector) -> Result<(), GfError> {
        self.check_compatible(other)?;
        for (a, b) in self.bytes.iter_mut().zip(&other.bytes) {
            *a ^= b;
        }
        Ok(())
    }

    /// `self += coef * other`, symbol by symbol.
    pub fn mul_add_assign(&mut self, coef: u32, other: &SymbolVector) -> Result<(), GfError> {
        self.check_compatible(other)?;
        let field = Field::get(self.bits)?;
        if !field.contains(coef) {
            return Err(GfError::OutOfField { value: coef, bits: self.bits });
        }
        match coef {
            0 => {}
            1 => {
                for (a, b) in self.bytes.iter_mut().zip(&other.bytes) {
                    *a ^= b;
                }
            }
            _ if self.bits == 8 => {
                let mut row = [0u8; 256];
                for (b, slot) in row.iter_mut().enumerate() {
                    *slot = field.mul(coef, b as u32) as u8;
                }
                for (a, &b) in self.bytes.iter_mut().zip(&other.bytes) {
                    *a ^= row[b as usize];
                }
            }
            _ => {
                for i in 0..self.len() {
                    let v = self.get(i) ^ field.mul(coef, other.get(i));
                    self.set(i, v);
                }
            }
        }
        Ok(())
    }

    /// XOR of a non-empty collection of equally shaped vectors.
    pub fn xor_all<'a, I>(vectors: I) -> Result<SymbolVector, GfError>
    where
        I: IntoIterator<Item = &'a SymbolVector>,
    {
        let mut iter = vectors.into_iter();
        let mut acc = iter
            .next()
            .ok_or_else(|| GfError::Mismatch("empty XOR".into()))?
            .clone();
        for v in iter {
            acc.xor_assign(v)?;
        }
        Ok(acc)
    }
}
