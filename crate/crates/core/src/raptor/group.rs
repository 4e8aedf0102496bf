//! Group-size selection by Monte Carlo estimation of group-decode failure.
//!
//! A trial models one closed group held by `N` miners: the first W̄ hold the
//! systematic intermediates and the remaining `N - W̄` hold parity blocks
//! drawn from Ω. Each holder is independently unreachable with probability
//! `erasure`. The trial fails when peeling the reachable blocks resolves
//! fewer than W intermediates, since the precode then cannot finish.

use log::warn;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{peel_structure, DegreeDistribution, RaptorError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPolicy {
    /// Target precode rate W / W̄.
    pub rate: f64,
    /// Tolerated group-decode failure probability.
    pub failure_budget: f64,
    pub trials: usize,
    /// W̄ must not exceed `N - margin`.
    pub margin: usize,
    /// Probability that a holder is unreachable during a decode.
    pub erasure: f64,
    /// Upper bound on W; 0 leaves W bounded by the network size only.
    pub max_sources: usize,
    pub degree_c: f64,
    pub degree_delta: f64,
}

impl Default for GroupPolicy {
    fn default() -> Self {
        GroupPolicy {
            rate: 0.8,
            failure_budget: 0.01,
            trials: 200,
            margin: 1,
            erasure: 0.4 / 3.0,
            max_sources: 0,
            degree_c: 0.15,
            degree_delta: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupSize {
    /// W.
    pub sources: usize,
    /// W̄.
    pub outputs: usize,
    /// Monte Carlo failure estimate at the chosen W̄ (0 when not measured).
    pub failure: f64,
    /// False when no W̄ met the budget and the minimum shape was returned.
    pub feasible: bool,
}

/// W = ⌈rate · W̄⌉, guarding against floating error at exact products.
pub fn sources_for(outputs: usize, rate: f64) -> usize {
    let exact = rate * outputs as f64;
    let rounded = exact.round();
    if (exact - rounded).abs() < 1e-9 {
        rounded as usize
    } else {
        exact.ceil() as usize
    }
}

fn valid_shape(outputs: usize, rate: f64) -> bool {
    let w = sources_for(outputs, rate);
    w >= 2 && w < outputs
}

/// Fraction of `trials` seeded trials in which the group fails to decode.
pub fn estimate_failure<R: Rng + ?Sized>(
    miners: usize,
    outputs: usize,
    sources: usize,
    policy: &GroupPolicy,
    rng: &mut R,
) -> Result<f64, RaptorError> {
    let dist = DegreeDistribution::build(outputs, policy.degree_c, policy.degree_delta)?;
    let trials = policy.trials.max(1);
    let mut failures = 0usize;
    let mut sets: Vec<Vec<u32>> = Vec::with_capacity(miners);
    for _ in 0..trials {
        sets.clear();
        for j in 0..miners {
            let set = if j < outputs { vec![j as u32] } else { dist.sample_neighbors(rng) };
            if !rng.random_bool(policy.erasure) {
                sets.push(set);
            }
        }
        if peel_structure(&sets, outputs).resolved() < sources {
            failures += 1;
        }
    }
    Ok(failures as f64 / trials as f64)
}

/// Largest W̄ ≤ N − margin whose estimated failure meets the budget.
pub fn choose_group_size<R: Rng + ?Sized>(
    miners: usize,
    policy: &GroupPolicy,
    rng: &mut R,
) -> Result<GroupSize, RaptorError> {
    if miners <= 2 {
        return Err(RaptorError::Parameter(format!("group sizing needs N > 2, got {miners}")));
    }
    if !(policy.rate > 0.0 && policy.rate < 1.0) {
        return Err(RaptorError::Parameter(format!("rate must lie in (0, 1), got {}", policy.rate)));
    }
    if !(0.0..1.0).contains(&policy.erasure) {
        return Err(RaptorError::Parameter(format!("erasure must lie in [0, 1), got {}", policy.erasure)));
    }
    let fallback = GroupSize { sources: 2, outputs: 3, failure: 1.0, feasible: false };

    let mut hi = miners.saturating_sub(policy.margin.max(1));
    if policy.max_sources > 0 {
        while hi > 0 && sources_for(hi, policy.rate) > policy.max_sources {
            hi -= 1;
        }
    }
    while hi > 0 && !valid_shape(hi, policy.rate) {
        hi -= 1;
    }
    let Some(lo) = (2..=hi).find(|&o| valid_shape(o, policy.rate)) else {
        warn!("no admissible group shape for N = {miners}");
        return Ok(fallback);
    };

    let probe = |outputs: usize, rng: &mut R| -> Result<f64, RaptorError> {
        if policy.failure_budget >= 1.0 {
            return Ok(0.0);
        }
        estimate_failure(miners, outputs, sources_for(outputs, policy.rate), policy, rng)
    };

    let top = probe(hi, rng)?;
    if top <= policy.failure_budget {
        return Ok(GroupSize { sources: sources_for(hi, policy.rate), outputs: hi, failure: top, feasible: true });
    }
    let bottom = probe(lo, rng)?;
    if bottom > policy.failure_budget {
        warn!("no group size meets failure budget {} at N = {miners}", policy.failure_budget);
        return Ok(fallback);
    }
    // Invariant: `good` meets the budget, `bad` does not.
    let (mut good, mut good_failure, mut bad) = (lo, bottom, hi);
    while bad - good > 1 {
        let mid = good + (bad - good) / 2;
        let mid = (mid..bad).find(|&o| valid_shape(o, policy.rate)).unwrap_or(mid);
        if mid >= bad || !valid_shape(mid, policy.rate) {
            break;
        }
        let f = probe(mid, rng)?;
        if f <= policy.failure_budget {
            good = mid;
            good_failure = f;
        } else {
            bad = mid;
        }
    }
    Ok(GroupSize { sources: sources_for(good, policy.rate), outputs: good, failure: good_failure, feasible: true })
}
