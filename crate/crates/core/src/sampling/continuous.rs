use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{tv_distance, ExactDistribution, FloatDistribution};
use crate::rational::Rational;
use crate::seed::rng_from;

/// Rejection cap for the continuous sampler.
pub const MAX_REJECTIONS: usize = 1_000_000;

/// A seed-derived stream of `(element, u)` pairs, `element` uniform on
/// `{1, ..., n}` and `u` uniform on `[0, 1)`.
pub struct SharedStream {
    rng: ChaCha8Rng,
    n: usize,
}

impl SharedStream {
    pub fn new(seed: u64, n: usize) -> Self {
        SharedStream { rng: rng_from(seed), n }
    }
}

impl Iterator for SharedStream {
    type Item = (usize, f64);

    fn next(&mut self) -> Option<(usize, f64)> {
        let e = self.rng.random_range(1..=self.n);
        let u: f64 = self.rng.random();
        Some((e, u))
    }
}

/// Grid embedding in the `γ → 0` limit: the first stream point `(ω, u)`
/// with `u < P(ω)`.
pub fn holenstein_continuous_sample(p: &FloatDistribution, stream_seed: u64) -> Result<usize> {
    SharedStream::new(stream_seed, p.n())
        .take(MAX_REJECTIONS)
        .find(|&(e, u)| u < *p.prob(e))
        .map(|(e, _)| e)
        .ok_or_else(|| {
            Error::limit(
                format!("continuous rejection sampling (seed {stream_seed})"),
                format!("more than {MAX_REJECTIONS} draws"),
                MAX_REJECTIONS,
            )
        })
}

/// `1 − Σ min(P, Q) / Σ max(P, Q)`, which equals `2δ / (1 + δ)`: the chance
/// that the first stream point under either curve is not under both. This
/// is the sampler's disagreement probability whenever every element with
/// `P(ω) ≠ Q(ω)` has zero mass on one side, and an upper bound otherwise.
pub fn continuous_exact_error(p: &ExactDistribution, q: &ExactDistribution) -> Result<Rational> {
    tv_distance(p, q)?;
    let (mut lo, mut hi) = (Rational::zero(), Rational::zero());
    for (a, b) in p.probs().iter().zip(q.probs()) {
        lo += a.min(b);
        hi += a.max(b);
    }
    Ok(Rational::one() - lo / hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::holenstein_bound;
    use crate::rational::ratio;
    use crate::seed::trial_seed;

    #[test]
    fn point_mass_is_deterministic() {
        let p = FloatDistribution::new(vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        for s in 0..100 {
            assert_eq!(holenstein_continuous_sample(&p, s).unwrap(), 3);
        }
    }

    #[test]
    fn exact_error_is_the_holenstein_curve() {
        let p = ExactDistribution::new(vec![ratio(1, 2), ratio(1, 2), ratio(0, 1)]).unwrap();
        let q = ExactDistribution::new(vec![ratio(0, 1), ratio(1, 2), ratio(1, 2)]).unwrap();
        let delta = tv_distance(&p, &q).unwrap().into_inner();
        assert_eq!(continuous_exact_error(&p, &q).unwrap(), holenstein_bound(&delta));
        assert_eq!(continuous_exact_error(&p, &q).unwrap(), ratio(2, 3));
    }

    #[test]
    fn uniform_marginal_passes_chi_square() {
        let n = 5;
        let p = FloatDistribution::new(vec![0.2; n]).unwrap();
        let trials = 1_000_000u64;
        let mut counts = vec![0u64; n + 1];
        for t in 0..trials {
            counts[holenstein_continuous_sample(&p, trial_seed(11, t)).unwrap()] += 1;
        }
        let expected = trials as f64 / n as f64;
        let chi2: f64 = counts[1..].iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // chi-square, 4 degrees of freedom: P(X > 18.47) = 0.001
        assert!(chi2 < 18.47, "chi2 = {chi2}");
    }

    #[test]
    fn shared_stream_disagreement_matches_two_thirds() {
        let p = FloatDistribution::new(vec![0.5, 0.5, 0.0]).unwrap();
        let q = FloatDistribution::new(vec![0.0, 0.5, 0.5]).unwrap();
        let trials = 1_000_000u64;
        let disagree = (0..trials)
            .filter(|&t| {
                let s = trial_seed(5, t);
                holenstein_continuous_sample(&p, s).unwrap() != holenstein_continuous_sample(&q, s).unwrap()
            })
            .count();
        let est = disagree as f64 / trials as f64;
        assert!((est - 2.0 / 3.0).abs() <= 0.005, "{est}");
    }
}
