//! Regularized incomplete gamma and standard normal functions.

use statrs::function::{erf, gamma};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecialError {
    #[error("regularized gamma needs a > 0 and x >= 0, got a = {a}, x = {x}")]
    GammaDomain { a: f64, x: f64 },
    #[error("normal quantile needs q in (0, 1), got {0}")]
    Probability(f64),
}

/// Lower and upper regularized incomplete gamma, `(P(a, x), Q(a, x))`.
pub fn regularized_gamma(a: f64, x: f64) -> Result<(f64, f64), SpecialError> {
    if !(a > 0.0 && a.is_finite()) || !(x >= 0.0) || x.is_nan() {
        return Err(SpecialError::GammaDomain { a, x });
    }
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    if x.is_infinite() {
        return Ok((1.0, 0.0));
    }
    // Evaluate the smaller tail directly and take the other as its complement.
    if x < a + 1.0 {
        let p = gamma::gamma_lr(a, x);
        Ok((p, 1.0 - p))
    } else {
        let q = gamma::gamma_ur(a, x);
        Ok((1.0 - q, q))
    }
}

/// Upper regularized gamma `Q(a, x)` computed without cancellation.
pub fn upper_gamma(a: f64, x: f64) -> Result<f64, SpecialError> {
    regularized_gamma(a, x).map(|(_, q)| q)
}

/// Lower regularized gamma `P(a, x)`.
pub fn lower_gamma(a: f64, x: f64) -> Result<f64, SpecialError> {
    regularized_gamma(a, x).map(|(p, _)| p)
}

/// Φ(z).
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erf::erfc(-z / std::f64::consts::SQRT_2)
}

/// Φ⁻¹(q).
pub fn normal_quantile(q: f64) -> Result<f64, SpecialError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(SpecialError::Probability(q));
    }
    if q == 0.5 {
        return Ok(0.0);
    }
    Ok(-std::f64::consts::SQRT_2 * erf::erfc_inv(2.0 * q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Gamma};

    /// P(n, x) for integer n via the Poisson tail identity.
    fn integer_lower(n: u32, x: f64) -> f64 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..n {
            term *= x / k as f64;
            sum += term;
        }
        1.0 - (-x).exp() * sum
    }

    /// Composite Simpson integration of the standard normal density.
    fn simpson_cdf(z: f64) -> f64 {
        let n = 20_000;
        let (lo, hi) = (0.0, z.abs());
        let h = (hi - lo) / n as f64;
        let pdf = |t: f64| (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut s = pdf(lo) + pdf(hi);
        for i in 1..n {
            s += pdf(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let half = s * h / 3.0;
        if z >= 0.0 { 0.5 + half } else { 0.5 - half }
    }

    #[test]
    fn exponential_case_and_empty_integral() {
        for x in [0.0, 0.1, 1.0, 3.5, 20.0, 200.0] {
            let (p, q) = regularized_gamma(1.0, x).unwrap();
            assert!((p - (1.0 - (-x as f64).exp())).abs() < 1e-14);
            assert!((q - (-x as f64).exp()).abs() < 1e-14 * (1.0 + (-x as f64).exp()));
        }
        assert_eq!(regularized_gamma(3.0, 0.0).unwrap(), (0.0, 1.0));
        assert!(regularized_gamma(0.0, 1.0).is_err());
        assert!(regularized_gamma(1.0, -1.0).is_err());
    }

    #[test]
    fn integer_and_half_integer_oracles() {
        for n in 1..30u32 {
            for x in [0.5, 2.0, n as f64, 1.7 * n as f64 + 3.0] {
                let p = lower_gamma(n as f64, x).unwrap();
                assert!((p - integer_lower(n, x)).abs() < 1e-10, "P({n}, {x})");
            }
        }
        for x in [0.01, 0.3, 1.0, 4.0, 25.0] {
            let p = lower_gamma(0.5, x).unwrap();
            assert!((p - erf::erf(x.sqrt())).abs() < 1e-10);
        }
    }

    #[test]
    fn monte_carlo_gamma_cdf() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let g = Gamma::new(2.5, 1.0).unwrap();
        let draws = 10_000_000;
        let hits = (0..draws).filter(|_| g.sample(&mut rng) <= 2.5).count();
        let p = lower_gamma(2.5, 2.5).unwrap();
        assert!((hits as f64 / draws as f64 - p).abs() < 1e-3);
    }

    #[test]
    fn normal_known_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        assert!((normal_cdf(1.96) - 0.9750).abs() < 5e-4);
        for z in [-6.0, -2.5, -1.0, 0.3, 1.96, 4.0] {
            assert!((normal_cdf(z) - simpson_cdf(z)).abs() < 1e-10, "z = {z}");
        }
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
    }

    proptest! {
        #[test]
        fn complements_sum_to_one(a in 0.01f64..500.0, x in 0.0f64..1000.0) {
            let (p, q) = regularized_gamma(a, x).unwrap();
            prop_assert!((p + q - 1.0).abs() <= 1e-12);
            prop_assert!((0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&q));
        }

        #[test]
        fn quantile_inverts_cdf(q in 1e-12f64..(1.0 - 1e-12)) {
            let z = normal_quantile(q).unwrap();
            prop_assert!((normal_cdf(z) - q).abs() <= 1e-9);
        }
    }
}
