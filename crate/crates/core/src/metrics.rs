//! Evaluation quantities computed from epoch records.

use thiserror::Error;

use crate::netsim::EpochRecord;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("storage fraction needs at least one confirmed block")]
    NoBlocks,
    #[error("closed groups cover {covered} blocks but only {height} exist")]
    Coverage { covered: usize, height: u64 },
}

/// R_s = (Q − ΣW_ℓ + |𝒲|) / Q for a miner that stores one coded block per
/// closed group and every open block in full.
pub fn storage_fraction(height: u64, groups: &[usize]) -> Result<f64, MetricsError> {
    if height == 0 {
        return Err(MetricsError::NoBlocks);
    }
    let covered: usize = groups.iter().sum();
    if covered as u64 > height {
        return Err(MetricsError::Coverage { covered, height });
    }
    Ok((height - covered as u64 + groups.len() as u64) as f64 / height as f64)
}

/// Gini coefficient Σ_i Σ_j |φ_i − φ_j| / (2 N Σφ), evaluated through the
/// sorted form Σ_k (2k − N + 1) φ_(k). Zero when nobody holds credit.
pub fn gini(credits: &[u32]) -> f64 {
    let total: u64 = credits.iter().map(|&c| c as u64).sum();
    if total == 0 {
        return 0.0;
    }
    let n = credits.len() as i128;
    let mut sorted = credits.to_vec();
    sorted.sort_unstable();
    // Integer accumulation keeps the result equal to the double sum.
    let weighted: i128 = sorted.iter().enumerate().map(|(k, &c)| (2 * k as i128 - n + 1) * c as i128).sum();
    weighted as f64 / (n as f64 * total as f64)
}

/// Base-2 Shannon entropy of the credit shares.
pub fn entropy(credits: &[u32]) -> f64 {
    let total: u64 = credits.iter().map(|&c| c as u64).sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    -credits
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            p * p.log2()
        })
        .sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Throughput {
    /// Mean count of confirmed, truly valid transactions per epoch.
    pub mean: f64,
    /// `mean / n`.
    pub normalized: f64,
    /// Mean count of confirmed invalid transactions per epoch.
    pub wrong_confirmations: f64,
}

pub fn throughput(records: &[EpochRecord], batch_size: usize) -> Throughput {
    if records.is_empty() || batch_size == 0 {
        return Throughput { mean: 0.0, normalized: 0.0, wrong_confirmations: 0.0 };
    }
    let r = records.len() as f64;
    let mean = records.iter().map(|e| e.confirmed_valid as f64).sum::<f64>() / r;
    let wrong = records.iter().map(|e| e.wrong_confirmations as f64).sum::<f64>() / r;
    Throughput { mean, normalized: mean / batch_size as f64, wrong_confirmations: wrong }
}

/// Per-epoch participation credits φ_j(t), aligned with the live roster in
/// id order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParticipationLedger {
    epochs: Vec<Vec<u32>>,
}

impl ParticipationLedger {
    pub fn from_records(records: &[EpochRecord]) -> Self {
        ParticipationLedger { epochs: records.iter().map(|r| r.credits.clone()).collect() }
    }

    pub fn push(&mut self, credits: Vec<u32>) {
        self.epochs.push(credits);
    }

    pub fn epochs(&self) -> &[Vec<u32>] {
        &self.epochs
    }

    pub fn total(&self, epoch: usize) -> u64 {
        self.epochs.get(epoch).map_or(0, |c| c.iter().map(|&x| x as u64).sum())
    }

    pub fn gini_series(&self) -> Vec<f64> {
        self.epochs.iter().map(|c| gini(c)).collect()
    }

    pub fn entropy_series(&self) -> Vec<f64> {
        self.epochs.iter().map(|c| entropy(c)).collect()
    }
}
