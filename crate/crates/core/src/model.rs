//! Universes, subsets, distributions, total variation distance, and the
//! closed-form error curves every other module is measured against.
//!
//! Elements are 1-indexed: the universe of size `n` is `{1, ..., n}`.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{count_ratio, format_rational, int, snap_f64, Rational};

/// The universe `{1, ..., n}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Universe(usize);

impl Universe {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("universe must have at least one element"));
        }
        Ok(Universe(n))
    }

    pub fn size(self) -> usize {
        self.0
    }

    pub fn elements(self) -> impl Iterator<Item = usize> {
        1..=self.0
    }
}

/// A subset of `{1, ..., n}`, stored as a strictly increasing element list.
///
/// Empty subsets are representable. Operations that need a member reject
/// them explicitly.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subset {
    n: usize,
    elems: Vec<usize>,
}

impl Subset {
    /// Builds a subset from a strictly increasing list of elements in `1..=n`.
    pub fn new(n: usize, elems: Vec<usize>) -> Result<Self> {
        Universe::new(n)?;
        if let Some(&e) = elems.iter().find(|&&e| e == 0 || e > n) {
            return Err(Error::invalid(format!("element {e} outside 1..={n}")));
        }
        if elems.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("subset elements must be strictly increasing"));
        }
        Ok(Subset { n, elems })
    }

    /// Sorts and deduplicates before validating the range.
    pub fn from_elements(n: usize, elems: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut elems: Vec<usize> = elems.into_iter().collect();
        elems.sort_unstable();
        elems.dedup();
        Subset::new(n, elems)
    }

    /// `{lo, ..., hi}` inside `{1, ..., n}`.
    pub fn range(n: usize, lo: usize, hi: usize) -> Result<Self> {
        Subset::new(n, (lo..=hi).collect())
    }

    pub fn full(n: usize) -> Result<Self> {
        Subset::new(n, (1..=n).collect())
    }

    pub fn empty(n: usize) -> Result<Self> {
        Subset::new(n, Vec::new())
    }

    /// Bit `i - 1` of `mask` marks element `i`.
    pub fn from_mask(n: usize, mask: u64) -> Result<Self> {
        if n < 64 && mask >> n != 0 {
            return Err(Error::invalid(format!("mask {mask:#x} has bits beyond n = {n}")));
        }
        Subset::new(n, (1..=n.min(64)).filter(|&i| mask >> (i - 1) & 1 == 1).collect())
    }

    /// Bitmask form, available when `n <= 64`.
    pub fn to_mask(&self) -> Option<u64> {
        (self.n <= 64).then(|| self.elems.iter().fold(0u64, |m, &e| m | 1 << (e - 1)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn elements(&self) -> &[usize] {
        &self.elems
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn contains(&self, e: usize) -> bool {
        self.elems.binary_search(&e).is_ok()
    }

    pub fn intersection_len(&self, other: &Subset) -> usize {
        let (mut i, mut j, mut count) = (0, 0, 0);
        while i < self.elems.len() && j < other.elems.len() {
            match self.elems[i].cmp(&other.elems[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    count += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        count
    }

    pub fn union_len(&self, other: &Subset) -> usize {
        self.len() + other.len() - self.intersection_len(other)
    }

    pub fn intersection(&self, other: &Subset) -> Subset {
        Subset {
            n: self.n,
            elems: self.elems.iter().copied().filter(|&e| other.contains(e)).collect(),
        }
    }

    pub(crate) fn require_nonempty(&self, what: &str) -> Result<()> {
        if self.is_empty() {
            Err(Error::invalid(format!("{what} must be nonempty")))
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, e) in self.elems.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "}}")
    }
}

/// Which party: Alice holds the left input, Bob the right.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// An input pair `(A, B)` over a common universe.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetPair {
    pub a: Subset,
    pub b: Subset,
}

impl SubsetPair {
    pub fn new(a: Subset, b: Subset) -> Result<Self> {
        if a.n() != b.n() {
            return Err(Error::invalid(format!(
                "subsets live in different universes ({} vs {})",
                a.n(),
                b.n()
            )));
        }
        Ok(SubsetPair { a, b })
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn intersection_len(&self) -> usize {
        self.a.intersection_len(&self.b)
    }

    pub fn union_len(&self) -> usize {
        self.a.union_len(&self.b)
    }

    pub fn has_empty_side(&self) -> bool {
        self.a.is_empty() || self.b.is_empty()
    }
}

/// Numeric type a distribution can be stored in: exact rationals for the
/// oracles, `f64` for sampling.
pub trait Probability: Clone + PartialOrd + Signed + fmt::Debug + Send + Sync {
    fn is_normalized(sum: &Self) -> bool;
    fn half() -> Self;
}

impl Probability for f64 {
    fn is_normalized(sum: &f64) -> bool {
        (sum - 1.0).abs() <= 1e-12
    }

    fn half() -> f64 {
        0.5
    }
}

impl Probability for Rational {
    fn is_normalized(sum: &Rational) -> bool {
        sum.is_one()
    }

    fn half() -> Rational {
        Rational::new(1.into(), 2.into())
    }
}

/// A probability vector over `{1, ..., n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDistribution<T> {
    universe: Universe,
    probs: Vec<T>,
}

pub type ExactDistribution = DiscreteDistribution<Rational>;
pub type FloatDistribution = DiscreteDistribution<f64>;

impl<T: Probability> DiscreteDistribution<T> {
    /// `probs[i]` is the mass of element `i + 1`.
    pub fn new(probs: Vec<T>) -> Result<Self> {
        let universe = Universe::new(probs.len())?;
        if let Some(i) = probs.iter().position(|p| p.is_negative()) {
            return Err(Error::invalid(format!("negative probability at element {}", i + 1)));
        }
        let sum = probs.iter().cloned().fold(T::zero(), |a, b| a + b);
        if !T::is_normalized(&sum) {
            return Err(Error::invalid(format!("probabilities sum to {sum:?}, not 1")));
        }
        Ok(DiscreteDistribution { universe, probs })
    }

    pub fn universe(&self) -> Universe {
        self.universe
    }

    pub fn n(&self) -> usize {
        self.universe.size()
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    /// Mass of the 1-indexed element `e`.
    pub fn prob(&self, e: usize) -> &T {
        &self.probs[e - 1]
    }

    pub fn support(&self) -> Vec<usize> {
        (1..=self.n()).filter(|&e| !self.prob(e).is_zero()).collect()
    }
}

impl ExactDistribution {
    /// The flat distribution on a nonempty subset.
    pub fn uniform(set: &Subset) -> Result<Self> {
        set.require_nonempty("support of a flat distribution")?;
        let mass = count_ratio(1, set.len());
        let mut probs = vec![Rational::zero(); set.n()];
        for &e in set.elements() {
            probs[e - 1] = mass.clone();
        }
        Ok(DiscreteDistribution { universe: Universe(set.n()), probs })
    }

    pub fn point_mass(n: usize, e: usize) -> Result<Self> {
        Self::uniform(&Subset::new(n, vec![e])?)
    }

    /// The support when the distribution is flat, `None` otherwise.
    pub fn flat_support(&self) -> Option<Subset> {
        let support = self.support();
        let mass = self.prob(support[0]);
        support
            .iter()
            .all(|&e| self.prob(e) == mass)
            .then(|| Subset { n: self.n(), elems: support })
    }

    pub fn to_float(&self) -> FloatDistribution {
        DiscreteDistribution {
            universe: self.universe,
            probs: self.probs.iter().map(crate::rational::to_f64).collect(),
        }
    }
}

impl FloatDistribution {
    /// Rounds each entry to a multiple of `1/den`, moving any rounding
    /// residual onto the largest entry so the result sums to exactly 1.
    pub fn snap(&self, den: u64) -> Result<ExactDistribution> {
        let mut probs: Vec<Rational> = self.probs.iter().map(|&p| snap_f64(p, den)).collect();
        let sum = probs.iter().fold(Rational::zero(), |a, b| a + b);
        let residual = Rational::one() - sum;
        if !residual.is_zero() {
            let largest = (0..probs.len())
                .max_by(|&i, &j| probs[i].cmp(&probs[j]).then(j.cmp(&i)))
                .expect("nonempty");
            probs[largest] += residual;
        }
        let exact = ExactDistribution::new(probs)
            .map_err(|e| Error::invalid(format!("cannot snap to denominator {den}: {e}")))?;
        if exact.probs.iter().zip(&self.probs).any(|(r, &f)| crate::rational::to_f64(r) != f) {
            log::warn!("float probabilities snapped to multiples of 1/{den}");
        }
        Ok(exact)
    }
}

/// Total variation distance, a value in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, PartialOrd)]
pub struct TvDistance<T>(T);

impl<T> TvDistance<T> {
    pub fn value(&self) -> &T {
        &self.0
    }

    pub fn into_inner(self) -> T {
        self.0
    }
}

impl fmt::Display for TvDistance<Rational> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}

/// `½ Σ |P(ω) − Q(ω)|`, exact when the inputs are.
pub fn tv_distance<T: Probability>(
    p: &DiscreteDistribution<T>,
    q: &DiscreteDistribution<T>,
) -> Result<TvDistance<T>> {
    if p.universe != q.universe {
        return Err(Error::invalid(format!(
            "distributions over different universes ({} vs {})",
            p.n(),
            q.n()
        )));
    }
    let l1 = p
        .probs
        .iter()
        .zip(&q.probs)
        .map(|(a, b)| (a.clone() - b.clone()).abs())
        .fold(T::zero(), |acc, d| acc + d);
    Ok(TvDistance(l1 * T::half()))
}

/// Distance between the flat distributions on `A` and `B`:
/// `1 − |A∩B| / max(|A|, |B|)`.
pub fn flat_tv_distance(pair: &SubsetPair) -> Result<TvDistance<Rational>> {
    pair.a.require_nonempty("A")?;
    pair.b.require_nonempty("B")?;
    let larger = pair.a.len().max(pair.b.len());
    Ok(TvDistance(Rational::one() - count_ratio(pair.intersection_len(), larger)))
}

/// Error achievable at distance `delta`: `2δ / (1 + δ)`.
pub fn holenstein_bound(delta: &Rational) -> Rational {
    debug_assert!(!delta.is_negative() && *delta <= Rational::one());
    int(2) * delta / (Rational::one() + delta)
}

/// Lower bound on constrained-agreement error under the product family
/// with rate `p`: `2(1 − p) / (2 − p)`.
pub fn dp_lower_bound(p: &Rational) -> Rational {
    debug_assert!(!p.is_negative() && *p <= Rational::one());
    int(2) * (Rational::one() - p) / (int(2) - p)
}

/// Exact optimal constrained-agreement error under the product family on
/// `n` elements: `(2(1 − p) + p(1 − p)^{2n}) / (2 − p)`.
///
/// Pairs with an empty side count as disagreement.
pub fn finite_dp_optimum(n: usize, p: &Rational) -> Rational {
    dp_lower_bound(p) + dp_tail(n, p)
}

/// `p(1 − p)^{2n} / (2 − p)`, the gap between the finite optimum and the limit.
pub fn dp_tail(n: usize, p: &Rational) -> Rational {
    let q = Rational::one() - p;
    p * num_traits::pow(q, 2 * n) / (int(2) - p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn exact(v: &[(i64, i64)]) -> ExactDistribution {
        ExactDistribution::new(v.iter().map(|&(a, b)| ratio(a, b)).collect()).unwrap()
    }

    #[test]
    fn tv_examples() {
        let third = exact(&[(1, 3), (1, 3), (1, 3)]);
        assert_eq!(*tv_distance(&third, &third).unwrap().value(), ratio(0, 1));

        let p = exact(&[(1, 2), (1, 2), (0, 1)]);
        let q = exact(&[(0, 1), (1, 2), (1, 2)]);
        assert_eq!(*tv_distance(&p, &q).unwrap().value(), ratio(1, 2));

        let p = exact(&[(1, 3), (1, 3), (1, 3), (0, 1)]);
        let q = exact(&[(0, 1), (1, 3), (1, 3), (1, 3)]);
        assert_eq!(*tv_distance(&p, &q).unwrap().value(), ratio(1, 3));
    }

    #[test]
    fn tv_rejects_universe_mismatch() {
        let p = exact(&[(1, 2), (1, 2)]);
        let q = exact(&[(1, 3), (1, 3), (1, 3)]);
        assert!(matches!(tv_distance(&p, &q), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn float_tv() {
        let p = FloatDistribution::new(vec![0.5, 0.5, 0.0]).unwrap();
        let q = FloatDistribution::new(vec![0.0, 0.5, 0.5]).unwrap();
        assert!((tv_distance(&p, &q).unwrap().value() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn distribution_validation() {
        assert!(ExactDistribution::new(vec![ratio(1, 2), ratio(1, 3)]).is_err());
        assert!(ExactDistribution::new(vec![ratio(3, 2), ratio(-1, 2)]).is_err());
        assert!(ExactDistribution::new(vec![]).is_err());
        assert!(FloatDistribution::new(vec![0.5, 0.4]).is_err());
        assert!(FloatDistribution::new(vec![0.1, 0.2, 0.7]).is_ok());
    }

    #[test]
    fn flat_tv_examples() {
        let pair = |a: Vec<usize>, b: Vec<usize>, n| {
            SubsetPair::new(Subset::new(n, a).unwrap(), Subset::new(n, b).unwrap()).unwrap()
        };
        assert_eq!(*flat_tv_distance(&pair(vec![1, 2], vec![1, 2], 2)).unwrap().value(), ratio(0, 1));
        assert_eq!(*flat_tv_distance(&pair(vec![1, 2], vec![2, 3], 3)).unwrap().value(), ratio(1, 2));
        assert_eq!(
            *flat_tv_distance(&pair(vec![1, 2, 3], vec![3, 4], 4)).unwrap().value(),
            ratio(2, 3)
        );
        assert!(flat_tv_distance(&pair(vec![], vec![1], 2)).is_err());
    }

    #[test]
    fn bound_examples() {
        assert_eq!(holenstein_bound(&ratio(0, 1)), ratio(0, 1));
        assert_eq!(holenstein_bound(&ratio(1, 1)), ratio(1, 1));
        assert_eq!(holenstein_bound(&ratio(1, 3)), ratio(1, 2));
        assert_eq!(dp_lower_bound(&ratio(1, 1)), ratio(0, 1));
        assert_eq!(dp_lower_bound(&ratio(0, 1)), ratio(1, 1));
        assert_eq!(dp_lower_bound(&ratio(1, 2)), ratio(2, 3));
    }

    #[test]
    fn finite_optimum_examples() {
        assert_eq!(finite_dp_optimum(1, &ratio(1, 2)), ratio(3, 4));
        assert_eq!(finite_dp_optimum(3, &ratio(1, 2)), ratio(43, 64));
        for n in 1..6 {
            assert_eq!(finite_dp_optimum(n, &ratio(1, 1)), ratio(0, 1));
        }
    }

    /// Independent route: one minus the geometric agreement sum term by term.
    fn agreement_sum_oracle(n: usize, p: &Rational) -> Rational {
        let q = Rational::one() - p;
        let agree = (0..n)
            .map(|i| num_traits::pow(q.clone(), 2 * i) * p * p)
            .fold(Rational::zero(), |a, b| a + b);
        Rational::one() - agree
    }

    #[test]
    fn finite_optimum_matches_geometric_sum() {
        for n in 1..=12 {
            for (a, b) in [(1, 4), (1, 3), (1, 2), (2, 3), (3, 4), (3, 10), (7, 10), (1, 1), (0, 1)] {
                let p = ratio(a, b);
                assert_eq!(finite_dp_optimum(n, &p), agreement_sum_oracle(n, &p), "n={n} p={a}/{b}");
            }
        }
    }

    #[test]
    fn finite_optimum_decreases_to_the_limit() {
        for (a, b) in [(1, 4), (1, 3), (1, 2), (2, 3), (3, 4)] {
            let p = ratio(a, b);
            let limit = dp_lower_bound(&p);
            for n in 1..15 {
                let gap = finite_dp_optimum(n, &p) - &limit;
                assert_eq!(gap, p.clone() * num_traits::pow(Rational::one() - &p, 2 * n) / (int(2) - &p));
                assert!(finite_dp_optimum(n + 1, &p) <= finite_dp_optimum(n, &p));
            }
        }
    }

    #[test]
    fn bounds_are_reflections_and_monotone() {
        let grid: Vec<Rational> = (0..=60).map(|i| ratio(i, 60)).collect();
        for d in &grid {
            assert_eq!(dp_lower_bound(&(Rational::one() - d)), holenstein_bound(d));
        }
        for w in grid.windows(2) {
            assert!(holenstein_bound(&w[0]) < holenstein_bound(&w[1]));
        }
    }

    #[test]
    fn flat_tv_agrees_with_uniform_tv_exhaustively() {
        for n in 1..=10usize {
            let sets: Vec<Subset> = (1..1u64 << n).map(|m| Subset::from_mask(n, m).unwrap()).collect();
            let flats: Vec<ExactDistribution> =
                sets.iter().map(|s| ExactDistribution::uniform(s).unwrap()).collect();
            for (a, pa) in sets.iter().zip(&flats) {
                for (b, pb) in sets.iter().zip(&flats) {
                    let pair = SubsetPair::new(a.clone(), b.clone()).unwrap();
                    assert_eq!(flat_tv_distance(&pair).unwrap(), tv_distance(pa, pb).unwrap());
                }
            }
        }
    }

    #[test]
    fn subset_validation_and_masks() {
        assert!(Subset::new(3, vec![0]).is_err());
        assert!(Subset::new(3, vec![4]).is_err());
        assert!(Subset::new(3, vec![2, 1]).is_err());
        assert!(Subset::new(3, vec![2, 2]).is_err());
        let s = Subset::from_elements(5, [5, 1, 3, 1]).unwrap();
        assert_eq!(s.elements(), &[1, 3, 5]);
        assert_eq!(s.to_mask(), Some(0b10101));
        assert_eq!(Subset::from_mask(5, 0b10101).unwrap(), s);
        assert!(Subset::from_mask(2, 0b100).is_err());
        assert_eq!(s.to_string(), "{1,3,5}");
    }

    #[test]
    fn snapping_keeps_normalization() {
        let f = FloatDistribution::new(vec![0.6, 0.4]).unwrap();
        assert_eq!(f.snap(5000).unwrap().probs(), &[ratio(3, 5), ratio(2, 5)]);
        let f = FloatDistribution::new(vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]).unwrap();
        let snapped = f.snap(10).unwrap();
        assert_eq!(snapped.probs(), &[ratio(4, 10), ratio(3, 10), ratio(3, 10)]);
    }

    #[test]
    fn flat_support_detection() {
        let d = ExactDistribution::uniform(&Subset::new(4, vec![2, 4]).unwrap()).unwrap();
        assert_eq!(d.flat_support().unwrap().elements(), &[2, 4]);
        let d = ExactDistribution::new(vec![ratio(1, 4), ratio(3, 4)]).unwrap();
        assert!(d.flat_support().is_none());
    }
}
