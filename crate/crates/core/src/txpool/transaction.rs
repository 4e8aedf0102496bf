//! Transactions and the attribute laws used to generate them.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::TxError;

/// Bytes of the opaque `[L S R]` row: 12 bytes L, 8 bytes S, 4 bytes R.
pub const PAYLOAD_BYTES: usize = 24;

/// A state value carried in the S column of a block row.
pub type StateValue = [u8; 8];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transaction {
    pub id: u64,
    /// Urgency, 1..=10.
    pub vitality: u8,
    /// Epochs since submission, at least 1.
    pub age: u32,
    pub fee: f64,
    /// Gamma shape α_j of the compute cost.
    pub compute_shape: f64,
    /// Realized compute cost ξ_j.
    pub compute: f64,
    /// Mean size τ_j in bytes.
    pub size_mean: f64,
    /// Realized size η_j in bytes.
    pub size: f64,
    /// Poisson mean λ_j of the required depth.
    pub depth_mean: f64,
    /// Realized depth d_j in blocks; 0 needs no historical block.
    pub depth: u64,
    pub valid: bool,
    pub payload: [u8; PAYLOAD_BYTES],
    pub submitted_epoch: u64,
}

impl Transaction {
    /// The L column of the row.
    pub fn ledger_part(&self) -> &[u8] {
        &self.payload[..12]
    }

    /// The R column of the row.
    pub fn receipt_part(&self) -> &[u8] {
        &self.payload[20..]
    }

    /// State an honest miner computes after applying the transaction.
    pub fn honest_state(&self) -> StateValue {
        let digest = Sha256::new()
            .chain_update(b"state")
            .chain_update(self.id.to_le_bytes())
            .chain_update(self.payload)
            .finalize();
        let mut out = [0u8; 8];
        out.copy_from_slice(&digest[..8]);
        out
    }

    /// Block height holding the oldest block this transaction reads when
    /// processed at `epoch`, or `None` if it reads no historical block.
    pub fn required_height(&self, epoch: u64) -> Option<u64> {
        (self.depth > 0).then(|| epoch.saturating_sub(self.depth).max(1))
    }
}

/// Attribute laws for freshly submitted transactions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TxDistributions {
    /// Fee is exponential with mean `fee_scale / v`, conditioned on `[0, fee_max]`.
    pub fee_scale: f64,
    pub fee_max: f64,
    /// Age is exponential with mean `age_scale / v`, conditioned on `[1, age_max + 1)`, floored.
    pub age_scale: f64,
    pub age_max: u32,
    pub compute_shape: f64,
    pub compute_scale: f64,
    pub size_mean: f64,
    pub size_std: f64,
    /// Depth group κ has Poisson mean `height * (depth_base - depth_step * κ)`.
    pub depth_base: f64,
    pub depth_step: f64,
    pub depth_groups: u32,
    pub valid_probability: f64,
}

impl Default for TxDistributions {
    fn default() -> Self {
        TxDistributions {
            fee_scale: 20.0,
            fee_max: 100.0,
            age_scale: 6.0,
            age_max: 32,
            compute_shape: 1.5,
            compute_scale: 42_000.0,
            size_mean: 3000.0,
            size_std: 1000.0,
            depth_base: 0.95,
            depth_step: 0.23,
            depth_groups: 5,
            valid_probability: 0.9,
        }
    }
}

impl TxDistributions {
    pub fn validate(&self) -> Result<(), TxError> {
        let bad = |what: &str| Err(TxError::Distribution(what.to_string()));
        if !(self.fee_scale > 0.0 && self.fee_max > 0.0) {
            return bad("fee scale and maximum must be positive");
        }
        if !(self.age_scale > 0.0) || self.age_max < 1 {
            return bad("age scale must be positive and age maximum at least 1");
        }
        if !(self.compute_shape > 0.0 && self.compute_scale > 0.0) {
            return bad("compute shape and scale must be positive");
        }
        if !(self.size_mean > 0.0 && self.size_std >= 0.0) {
            return bad("size mean must be positive and deviation non-negative");
        }
        if self.depth_groups == 0 {
            return bad("at least one depth group is required");
        }
        let last = self.depth_base - self.depth_step * (self.depth_groups - 1) as f64;
        if !(self.depth_base >= 0.0 && last >= 0.0) {
            return bad("depth group means must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.valid_probability) {
            return bad("validity probability must lie in [0, 1]");
        }
        Ok(())
    }

    /// Variance factor ω such that `ω τ` is the size variance of one transaction.
    pub fn size_variance_factor(&self) -> f64 {
        self.size_std * self.size_std / self.size_mean
    }
}

fn truncated_exp<R: Rng + ?Sized>(rng: &mut R, mean: f64, lo: f64, hi: f64) -> f64 {
    // Inverse CDF restricted to [lo, hi]: exact conditional sampling.
    let rate = 1.0 / mean;
    let f_lo = 1.0 - (-rate * lo).exp();
    let f_hi = 1.0 - (-rate * hi).exp();
    let u: f64 = rng.random();
    let p = f_lo + u * (f_hi - f_lo);
    (-(1.0 - p).ln() / rate).clamp(lo, hi)
}

/// Draws `count` new transactions with ids starting at `first_id`.
///
/// The batch is split into equal depth groups in order (any remainder goes
/// to the leading groups); `height` is the last confirmed block height.
pub fn generate_fresh<R: Rng + ?Sized>(
    count: usize,
    first_id: u64,
    epoch: u64,
    height: u64,
    dist: &TxDistributions,
    rng: &mut R,
) -> Result<Vec<Transaction>, TxError> {
    dist.validate()?;
    let compute = Gamma::new(dist.compute_shape, dist.compute_scale)
        .map_err(|e| TxError::Distribution(e.to_string()))?;
    let size = Normal::new(dist.size_mean, dist.size_std).map_err(|e| TxError::Distribution(e.to_string()))?;
    let groups = dist.depth_groups as usize;
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let kappa = (k * groups / count.max(1)) as f64;
        let vitality: u8 = rng.random_range(1..=10);
        let v = vitality as f64;
        let fee = truncated_exp(rng, dist.fee_scale / v, 0.0, dist.fee_max);
        let age = truncated_exp(rng, dist.age_scale / v, 1.0, dist.age_max as f64 + 1.0).floor() as u32;
        let age = age.clamp(1, dist.age_max);
        let xi = compute.sample(rng).max(f64::MIN_POSITIVE);
        let eta = loop {
            let s = size.sample(rng);
            if s > 0.0 {
                break s;
            }
        };
        let lambda = height as f64 * (dist.depth_base - dist.depth_step * kappa);
        let depth = if lambda > 0.0 {
            Poisson::new(lambda).map_err(|e| TxError::Distribution(e.to_string()))?.sample(rng) as u64
        } else {
            0
        };
        let valid = rng.random_bool(dist.valid_probability);
        let mut payload = [0u8; PAYLOAD_BYTES];
        rng.fill(&mut payload[..]);
        out.push(Transaction {
            id: first_id + k as u64,
            vitality,
            age,
            fee,
            compute_shape: dist.compute_shape,
            compute: xi,
            size_mean: dist.size_mean,
            size: eta,
            depth_mean: lambda,
            depth,
            valid,
            payload,
            submitted_epoch: epoch,
        });
    }
    Ok(out)
}
