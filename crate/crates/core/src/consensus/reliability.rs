use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ConsensusError;
use crate::MinerId;

/// Reliabilities are clamped here before the geometric mean.
pub const RELIABILITY_FLOOR: f64 = 1e-6;
/// Aggregate reliability at or below `0.5 + TRUST_MARGIN` forces full assignment.
pub const TRUST_MARGIN: f64 = 0.01;

/// `p_new = (1 − β) p + β l / q`; an epoch with no assignments leaves `p` unchanged.
pub fn update_reliability(p: f64, correct: usize, assigned: usize, beta: f64) -> Result<f64, ConsensusError> {
    if correct > assigned {
        return Err(ConsensusError::Accuracy { correct, assigned });
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(ConsensusError::Forgetting(beta));
    }
    if assigned == 0 {
        return Ok(p);
    }
    Ok(((1.0 - beta) * p + beta * correct as f64 / assigned as f64).clamp(0.0, 1.0))
}

/// Geometric mean of the reliabilities, each clamped at [`RELIABILITY_FLOOR`].
pub fn aggregate_reliability(p: &[f64]) -> Result<f64, ConsensusError> {
    if p.is_empty() {
        return Err(ConsensusError::NoMiners);
    }
    let log_sum: f64 = p.iter().map(|x| x.clamp(RELIABILITY_FLOOR, 1.0).ln()).sum();
    Ok((log_sum / p.len() as f64).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinerRequirement {
    pub miners: usize,
    /// Set when the aggregate reliability is too close to one half for the
    /// Chernoff sizing and every live miner is assigned instead.
    pub degraded: bool,
}

/// `M = ⌈8 ln(1/ε) P / (1 − 2P)²⌉` clamped to `[1, N]`.
pub fn required_miners(reliability: f64, epsilon: f64, live: usize) -> Result<MinerRequirement, ConsensusError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(ConsensusError::Epsilon(epsilon));
    }
    if live == 0 {
        return Err(ConsensusError::NoMiners);
    }
    if !(reliability > 0.5 + TRUST_MARGIN) {
        return Ok(MinerRequirement { miners: live, degraded: true });
    }
    let gap = 1.0 - 2.0 * reliability;
    let m = (8.0 * (1.0 / epsilon).ln() * reliability / (gap * gap)).ceil();
    let miners = if m.is_finite() { (m as usize).clamp(1, live) } else { live };
    Ok(MinerRequirement { miners, degraded: false })
}

/// Per-miner reliability `p_j(t)` with forgetting factor β.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityTracker {
    beta: f64,
    /// Joiners start uniform on `[initial_low, initial_high]`.
    initial_low: f64,
    initial_high: f64,
    values: BTreeMap<MinerId, f64>,
}

impl ReliabilityTracker {
    pub fn new(beta: f64) -> Result<Self, ConsensusError> {
        Self::with_initial_range(beta, 0.5, 1.0)
    }

    pub fn with_initial_range(beta: f64, low: f64, high: f64) -> Result<Self, ConsensusError> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(ConsensusError::Forgetting(beta));
        }
        if !(0.0 <= low && low <= high && high <= 1.0) {
            return Err(ConsensusError::Malformed(format!("initial reliability range [{low}, {high}]")));
        }
        Ok(ReliabilityTracker { beta, initial_low: low, initial_high: high, values: BTreeMap::new() })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn join<R: Rng + ?Sized>(&mut self, miner: MinerId, rng: &mut R) -> f64 {
        let p = if self.initial_low == self.initial_high {
            self.initial_low
        } else {
            rng.random_range(self.initial_low..=self.initial_high)
        };
        self.values.insert(miner, p);
        p
    }

    pub fn leave(&mut self, miner: MinerId) -> Option<f64> {
        self.values.remove(&miner)
    }

    pub fn get(&self, miner: MinerId) -> Option<f64> {
        self.values.get(&miner).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (MinerId, f64)> + '_ {
        self.values.iter().map(|(m, p)| (*m, *p))
    }

    pub fn record(&mut self, miner: MinerId, correct: usize, assigned: usize) -> Result<f64, ConsensusError> {
        let p = self.values.get_mut(&miner).ok_or(ConsensusError::UnknownMiner(miner))?;
        *p = update_reliability(*p, correct, assigned, self.beta)?;
        Ok(*p)
    }

    /// P(t) over every tracked miner.
    pub fn aggregate(&self) -> Result<f64, ConsensusError> {
        aggregate_reliability(&self.values.values().copied().collect::<Vec<_>>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn update_examples() {
        assert!((update_reliability(0.8, 5, 5, 0.1).unwrap() - 0.82).abs() < 1e-12);
        assert!((update_reliability(0.7, 0, 4, 0.2).unwrap() - 0.56).abs() < 1e-12);
        assert!((update_reliability(0.75, 3, 4, 0.3).unwrap() - 0.75).abs() < 1e-12);
        assert_eq!(update_reliability(0.6, 0, 0, 0.3).unwrap(), 0.6);
        assert!(update_reliability(0.6, 3, 2, 0.3).is_err());
    }

    #[test]
    fn aggregate_examples() {
        assert!((aggregate_reliability(&[0.9, 0.4]).unwrap() - 0.6).abs() < 1e-12);
        assert!((aggregate_reliability(&[0.7; 9]).unwrap() - 0.7).abs() < 1e-12);
        assert!(aggregate_reliability(&[]).is_err());
        // A zero reliability is clamped rather than collapsing the mean to 0.
        assert!((aggregate_reliability(&[0.0, 1.0]).unwrap() - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn required_miner_examples() {
        assert_eq!(required_miners(0.9, 0.01, 10_000).unwrap(), MinerRequirement { miners: 52, degraded: false });
        assert_eq!(required_miners(0.75, 0.01, 10_000).unwrap(), MinerRequirement { miners: 111, degraded: false });
        assert_eq!(required_miners(0.51, 0.01, 200).unwrap(), MinerRequirement { miners: 200, degraded: true });
        assert_eq!(required_miners(0.9, 0.01, 20).unwrap().miners, 20);
        assert!(required_miners(0.9, 1.0, 20).is_err());
    }

    #[test]
    fn tracker_joins_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut t = ReliabilityTracker::new(0.2).unwrap();
        for id in 0..1000 {
            let p = t.join(id, &mut rng);
            assert!((0.5..=1.0).contains(&p));
        }
        let mean = t.iter().map(|(_, p)| p).sum::<f64>() / 1000.0;
        assert!((mean - 0.75).abs() < 0.02);
        t.record(3, 2, 2).unwrap();
        assert!(t.record(5000, 1, 1).is_err());
        assert!(t.leave(3).is_some() && t.get(3).is_none());
    }

    #[test]
    fn chernoff_sizing_bounds_majority_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let eps = 0.01;
        for p in [0.6, 0.75, 0.9] {
            let m = required_miners(p, eps, 100_000).unwrap().miners;
            let trials = 10_000;
            let wrong = (0..trials)
                .filter(|_| {
                    let correct = (0..m).filter(|_| rng.random_bool(p)).count();
                    2 * correct <= m
                })
                .count();
            assert!(wrong as f64 / trials as f64 <= eps, "p = {p}, m = {m}, wrong = {wrong}");
        }
    }

    proptest! {
        #[test]
        fn update_stays_in_unit_interval(p in 0.0f64..=1.0, q in 1usize..50, l_frac in 0.0f64..=1.0, beta in 0.01f64..0.99) {
            let l = ((q as f64) * l_frac).floor() as usize;
            let next = update_reliability(p, l, q, beta).unwrap();
            prop_assert!((0.0..=1.0).contains(&next));
            let target = l as f64 / q as f64;
            prop_assert!((next - target).abs() <= (p - target).abs() + 1e-12);
        }

        #[test]
        fn aggregate_is_permutation_invariant(mut v in proptest::collection::vec(0.01f64..1.0, 1..30), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let a = aggregate_reliability(&v).unwrap();
            v.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let b = aggregate_reliability(&v).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a);
            let lo = v.iter().copied().fold(1.0, f64::min);
            let hi = v.iter().copied().fold(0.0, f64::max);
            prop_assert!(a >= lo - 1e-12 && a <= hi + 1e-12);
        }

        #[test]
        fn sizing_is_monotone(p1 in 0.52f64..0.99, p2 in 0.52f64..0.99, e1 in 0.001f64..0.5, e2 in 0.001f64..0.5) {
            let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
            prop_assert!(required_miners(hi, e1, usize::MAX).unwrap().miners <= required_miners(lo, e1, usize::MAX).unwrap().miners);
            let (small, big) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            prop_assert!(required_miners(lo, small, usize::MAX).unwrap().miners >= required_miners(lo, big, usize::MAX).unwrap().miners);
        }
    }
}
