use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{NetsimError, NetworkConfig};
use crate::gf::SymbolVector;
use crate::raptor::CodedBlock;
use crate::MinerId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Behavior {
    Honest,
    Dishonest,
    Straggler,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinerState {
    pub id: MinerId,
    pub behavior: Behavior,
    pub joined: u64,
    /// One coded block per closed group, keyed by group index.
    pub coded: BTreeMap<u32, CodedBlock>,
    /// Cached intermediates per group.
    pub cache: BTreeMap<u32, BTreeMap<usize, SymbolVector>>,
}

impl MinerState {
    pub fn new(id: MinerId, behavior: Behavior, joined: u64) -> Self {
        MinerState { id, behavior, joined, coded: BTreeMap::new(), cache: BTreeMap::new() }
    }
}

/// Live miners keyed by id; ids are assigned in join order and never reused.
#[derive(Debug, Clone, Default)]
pub struct Roster {
    miners: BTreeMap<MinerId, MinerState>,
    next_id: MinerId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PopulationChange {
    pub joined: Vec<MinerId>,
    pub left: Vec<MinerId>,
}

impl Roster {
    /// Exactly `round(μN₀)` dishonest miners and `round(cap·N₀)` stragglers,
    /// placed by a seeded shuffle.
    pub fn initial<R: Rng + ?Sized>(config: &NetworkConfig, rng: &mut R) -> Self {
        let n = config.initial_miners;
        let dishonest = (config.dishonest_fraction * n as f64).round() as usize;
        let stragglers = ((config.straggler_cap * n as f64).round() as usize).min(n - dishonest);
        let mut kinds: Vec<Behavior> = std::iter::repeat_n(Behavior::Dishonest, dishonest)
            .chain(std::iter::repeat_n(Behavior::Straggler, stragglers))
            .chain(std::iter::repeat_n(Behavior::Honest, n - dishonest - stragglers))
            .collect();
        kinds.shuffle(rng);
        let miners = kinds
            .into_iter()
            .enumerate()
            .map(|(i, b)| (i as MinerId, MinerState::new(i as MinerId, b, 0)))
            .collect();
        Roster { miners, next_id: n as MinerId }
    }

    pub fn len(&self) -> usize {
        self.miners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.miners.is_empty()
    }

    pub fn ids(&self) -> Vec<MinerId> {
        self.miners.keys().copied().collect()
    }

    pub fn get(&self, id: MinerId) -> Option<&MinerState> {
        self.miners.get(&id)
    }

    pub fn get_mut(&mut self, id: MinerId) -> Option<&mut MinerState> {
        self.miners.get_mut(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &MinerState> {
        self.miners.values()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut MinerState> {
        self.miners.values_mut()
    }

    pub fn count(&self, behavior: Behavior) -> usize {
        self.miners.values().filter(|m| m.behavior == behavior).count()
    }

    fn joiner_behavior<R: Rng + ?Sized>(&self, config: &NetworkConfig, rng: &mut R) -> Behavior {
        let dishonest = rng.random_bool(config.dishonest_fraction);
        let current = if self.miners.is_empty() {
            0.0
        } else {
            self.count(Behavior::Straggler) as f64 / self.miners.len() as f64
        };
        // Non-dishonest joiners become stragglers at the rate that holds the
        // cap share, but never while the roster is already at the cap.
        let p = if current >= config.straggler_cap {
            0.0
        } else {
            (config.straggler_cap / (1.0 - config.dishonest_fraction)).min(1.0)
        };
        let straggler = rng.random_bool(p);
        match (dishonest, straggler) {
            (true, _) => Behavior::Dishonest,
            (false, true) => Behavior::Straggler,
            (false, false) => Behavior::Honest,
        }
    }

    /// Poisson(λ_l) uniform departures, kept so at least 3 miners remain, then
    /// Poisson(λ_e) arrivals. Joiners come back without stored blocks.
    pub fn step_population<R: Rng + ?Sized>(
        &mut self,
        config: &NetworkConfig,
        epoch: u64,
        rng: &mut R,
    ) -> Result<(PopulationChange, Vec<MinerState>), NetsimError> {
        let draw = |mean: f64, rng: &mut R| -> Result<usize, NetsimError> {
            if mean == 0.0 {
                return Ok(0);
            }
            let p = Poisson::new(mean).map_err(|e| NetsimError::Config(e.to_string()))?;
            Ok(p.sample(rng) as usize)
        };
        let leaves = draw(config.leave_mean, rng)?.min(self.miners.len().saturating_sub(3));
        let joins = draw(config.join_mean, rng)?;
        let ids = self.ids();
        let mut left: Vec<MinerId> = sample(rng, ids.len(), leaves).into_iter().map(|k| ids[k]).collect();
        left.sort_unstable();
        let departed: Vec<MinerState> = left.iter().filter_map(|id| self.miners.remove(id)).collect();
        let mut joined = Vec::with_capacity(joins);
        for _ in 0..joins {
            let behavior = self.joiner_behavior(config, rng);
            let id = self.next_id;
            self.next_id += 1;
            self.miners.insert(id, MinerState::new(id, behavior, epoch));
            joined.push(id);
        }
        Ok((PopulationChange { joined, left }, departed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn initial_roster_has_exact_shares() {
        let config = NetworkConfig { initial_miners: 1000, ..Default::default() };
        let r = Roster::initial(&config, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(r.len(), 1000);
        assert_eq!(r.count(Behavior::Dishonest), 300);
        assert_eq!(r.count(Behavior::Straggler), 400);
        assert_eq!(r.ids(), (0..1000).collect::<Vec<_>>());
    }

    #[test]
    fn zero_rates_leave_roster_unchanged() {
        let config = NetworkConfig { initial_miners: 50, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut r = Roster::initial(&config, &mut rng);
        let before = r.ids();
        let (change, departed) = r.step_population(&config, 2, &mut rng).unwrap();
        assert!(change.joined.is_empty() && change.left.is_empty() && departed.is_empty());
        assert_eq!(r.ids(), before);
    }

    #[test]
    fn leaves_never_empty_the_roster() {
        let config = NetworkConfig { initial_miners: 5, leave_mean: 50.0, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut r = Roster::initial(&config, &mut rng);
        for epoch in 2..20 {
            r.step_population(&config, epoch, &mut rng).unwrap();
            assert_eq!(r.len(), 3);
        }
    }

    #[test]
    fn population_drift_matches_rates() {
        let config = NetworkConfig { initial_miners: 1000, join_mean: 10.0, leave_mean: 4.0, ..Default::default() };
        let mut total = 0usize;
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut r = Roster::initial(&config, &mut rng);
            for epoch in 1..=250 {
                r.step_population(&config, epoch, &mut rng).unwrap();
            }
            total += r.len();
        }
        let mean = total as f64 / 100.0;
        assert!((mean - 2500.0).abs() <= 0.05 * 2500.0, "{mean}");
    }

    #[test]
    fn straggler_share_stays_under_cap() {
        let config = NetworkConfig { initial_miners: 100, join_mean: 30.0, leave_mean: 5.0, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut r = Roster::initial(&config, &mut rng);
        for epoch in 1..=100 {
            r.step_population(&config, epoch, &mut rng).unwrap();
        }
        let share = r.count(Behavior::Straggler) as f64 / r.len() as f64;
        assert!(share <= 0.4 + 0.02, "{share}");
        assert!(share >= 0.3, "{share}");
        let dishonest = r.count(Behavior::Dishonest) as f64 / r.len() as f64;
        assert!((dishonest - 0.3).abs() < 0.05);
    }
}
