//! Modified robust soliton degree distribution with no mass at degree one.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::RaptorError;

/// Ω(L) over `1..=W̄`, with Ω(1) = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeDistribution {
    support: usize,
    c: f64,
    delta: f64,
    /// Expected number of degree-one symbols of the underlying robust soliton.
    ripple: f64,
    spike: usize,
    /// `probs[L]` for `L` in `0..=W̄`; index 0 is unused and zero.
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl DegreeDistribution {
    pub fn build(support: usize, c: f64, delta: f64) -> Result<Self, RaptorError> {
        if support < 2 {
            return Err(RaptorError::Support(support));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(RaptorError::Parameter(format!("c must be positive, got {c}")));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(RaptorError::Parameter(format!("delta must lie in (0, 1], got {delta}")));
        }
        let w = support as f64;
        let ripple = c * w.sqrt() * (w / delta).ln();
        let spike = ((w / ripple).round() as usize).clamp(1, support);

        let mut mass = vec![0.0; support + 1];
        for (i, m) in mass.iter_mut().enumerate().skip(1) {
            let fi = i as f64;
            let rho = if i == 1 { 1.0 / w } else { 1.0 / (fi * (fi - 1.0)) };
            let tau = if i < spike {
                ripple / (fi * w)
            } else if i == spike {
                // ln(S/δ) turns negative for very small supports; the spike
                // never removes mass.
                (ripple * (ripple / delta).ln() / w).max(0.0)
            } else {
                0.0
            };
            *m = rho + tau;
        }
        let beta: f64 = mass.iter().sum();
        let mu: Vec<f64> = mass.iter().map(|m| m / beta).collect();

        let mut probs = vec![0.0; support + 1];
        let shift = mu[1] / (w - 1.0);
        for l in 2..=support {
            probs[l] = mu[l] + shift;
        }
        let mut cdf = Vec::with_capacity(support + 1);
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cdf.push(acc);
        }
        Ok(DegreeDistribution { support, c, delta, ripple, spike, probs, cdf })
    }

    /// W̄.
    pub fn support(&self) -> usize {
        self.support
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// 𝒮 = c √W̄ ln(W̄/δ).
    pub fn ripple(&self) -> f64 {
        self.ripple
    }

    /// Index carrying the ln(𝒮/δ) term.
    pub fn spike(&self) -> usize {
        self.spike
    }

    /// Ω(L); zero outside `1..=W̄`.
    pub fn prob(&self, degree: usize) -> f64 {
        self.probs.get(degree).copied().unwrap_or(0.0)
    }

    /// Ω(1..=W̄) as a slice indexed from degree 0.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(l, p)| l as f64 * p).sum()
    }

    /// Draws a degree by inversion, clamped to `[2, W̄]`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random::<f64>() * self.cdf[self.support];
        let l = self.cdf.partition_point(|&c| c <= u);
        l.clamp(2, self.support)
    }

    /// Degree plus a uniformly drawn neighbor set, sorted ascending.
    pub fn sample_neighbors<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u32> {
        let degree = self.sample(rng);
        let mut picks: Vec<u32> = rand::seq::index::sample(rng, self.support, degree)
            .into_iter()
            .map(|i| i as u32)
            .collect();
        picks.sort_unstable();
        picks
    }
}
