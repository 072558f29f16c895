use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::seq::index::sample as sample_indices;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Subset, SubsetPair};
use crate::rational::{format_rational, in_unit_interval, integer_weights, to_f64, Rational};
use crate::seed::rng_from;

/// Largest `n` for exact enumeration of the product-style families (`4^n` pairs).
pub const EXACT_PRODUCT_MAX_N: usize = 10;
pub const MATCH_MAX_N: usize = 8;
/// Cap on `C(n, a) · C(n, b)` for the fixed-intersection family.
pub const MAX_INTERSECTION_SUPPORT: u128 = 1_000_000;

/// A distribution over pairs of subsets of `[n]`.
#[derive(Clone, Debug, PartialEq)]
pub enum PairDistribution {
    /// Each element enters each side independently with probability `p`.
    Product { n: usize, p: Rational },
    /// Draw `S` at rate `p / (1 − δ)`, then keep each member of `S` on
    /// each side independently with probability `1 − δ`.
    PositivelyCorrelated { n: usize, p: Rational, delta: Rational },
    /// Uniform over `A ∪ B = [n]`, `|A| = |B| = |A ∩ B| + 1 = n − 1`.
    Match { n: usize },
    /// Uniform over `|A| = a`, `|B| = b`, `|A ∩ B| = l`.
    Intersection { n: usize, a: usize, b: usize, l: usize },
    Explicit { n: usize, support: Vec<(SubsetPair, Rational)> },
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    (0..k as u128).fold(1u128, |acc, i| acc * (n as u128 - i) / (i + 1))
}

fn check_unit(name: &str, v: &Rational) -> Result<()> {
    if in_unit_interval(v) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} = {} not in [0, 1]", format_rational(v))))
    }
}

impl PairDistribution {
    pub fn product(n: usize, p: Rational) -> Result<Self> {
        check_n(n)?;
        check_unit("p", &p)?;
        Ok(PairDistribution::Product { n, p })
    }

    pub fn positively_correlated(n: usize, p: Rational, delta: Rational) -> Result<Self> {
        check_n(n)?;
        check_unit("p", &p)?;
        check_unit("delta", &delta)?;
        if delta.is_one() {
            return Err(Error::invalid("delta must be below 1"));
        }
        if &p / (Rational::one() - &delta) > Rational::one() {
            return Err(Error::invalid("p / (1 - delta) exceeds 1"));
        }
        Ok(PairDistribution::PositivelyCorrelated { n, p, delta })
    }

    pub fn match_family(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("match family needs n >= 2"));
        }
        Ok(PairDistribution::Match { n })
    }

    pub fn intersection_family(n: usize, a: usize, b: usize, l: usize) -> Result<Self> {
        check_n(n)?;
        if a == 0 || b == 0 {
            return Err(Error::invalid("set sizes a and b must be positive"));
        }
        if l > a.min(b) || a + b - l > n {
            return Err(Error::invalid(format!("no pairs with n={n}, a={a}, b={b}, l={l}")));
        }
        Ok(PairDistribution::Intersection { n, a, b, l })
    }

    pub fn explicit(support: Vec<(SubsetPair, Rational)>) -> Result<Self> {
        let n = support
            .first()
            .map(|(pair, _)| pair.n())
            .ok_or_else(|| Error::invalid("explicit support is empty"))?;
        if support.iter().any(|(pair, _)| pair.n() != n) {
            return Err(Error::invalid("explicit support mixes universes"));
        }
        if let Some((_, p)) = support.iter().find(|(_, p)| p.is_negative()) {
            return Err(Error::invalid(format!("negative probability {}", format_rational(p))));
        }
        let total: Rational = support.iter().map(|(_, p)| p.clone()).sum();
        if !total.is_one() {
            return Err(Error::invalid(format!("probabilities sum to {}", format_rational(&total))));
        }
        Ok(PairDistribution::Explicit { n, support })
    }

    pub fn n(&self) -> usize {
        match self {
            PairDistribution::Product { n, .. }
            | PairDistribution::PositivelyCorrelated { n, .. }
            | PairDistribution::Match { n }
            | PairDistribution::Intersection { n, .. }
            | PairDistribution::Explicit { n, .. } => *n,
        }
    }

    /// Per-element probabilities of `(in A, in B)`: `[11, 10, 01, 00]`.
    fn element_weights(&self) -> Option<[Rational; 4]> {
        let one = Rational::one();
        match self {
            PairDistribution::Product { p, .. } => {
                let q = &one - p;
                Some([p * p, p * &q, p * &q, &q * &q])
            }
            PairDistribution::PositivelyCorrelated { p, delta, .. } => {
                let s = p / (&one - delta);
                let keep = &one - delta;
                let split = &s * &keep * delta;
                Some([&s * &keep * &keep, split.clone(), split, &one - &s + &s * delta * delta])
            }
            _ => None,
        }
    }

    /// The exact support, skipping zero-probability pairs.
    pub fn enumerate_support(&self) -> Result<Support> {
        let n = self.n();
        let entries = match self {
            PairDistribution::Product { .. } | PairDistribution::PositivelyCorrelated { .. } => {
                if n > EXACT_PRODUCT_MAX_N {
                    return Err(Error::limit(
                        format!("exact enumeration of 4^{n} pairs"),
                        format!("n = {n}"),
                        format!("n <= {EXACT_PRODUCT_MAX_N}"),
                    ));
                }
                let w = self.element_weights().expect("product-style family");
                let powers: Vec<Vec<Rational>> = w
                    .iter()
                    .map(|x| {
                        std::iter::successors(Some(Rational::one()), |acc| Some(acc * x))
                            .take(n + 1)
                            .collect()
                    })
                    .collect();
                let full = (1u64 << n) - 1;
                let mut entries = Vec::new();
                for ma in 0..=full {
                    for mb in 0..=full {
                        let c = [
                            (ma & mb).count_ones(),
                            (ma & !mb).count_ones(),
                            (!ma & mb).count_ones(),
                            (!ma & !mb & full).count_ones(),
                        ];
                        let prob = (0..4).fold(Rational::one(), |acc, s| acc * &powers[s][c[s] as usize]);
                        if !prob.is_zero() {
                            entries.push((mask_pair(n, ma, mb), prob));
                        }
                    }
                }
                entries
            }
            PairDistribution::Match { .. } => {
                if n > MATCH_MAX_N {
                    return Err(Error::limit("match family enumeration", format!("n = {n}"), format!("n <= {MATCH_MAX_N}")));
                }
                let full = (1u64 << n) - 1;
                let prob = Rational::new(BigInt::one(), BigInt::from(n * (n - 1)));
                let mut entries = Vec::new();
                for i in 0..n {
                    for j in 0..n {
                        if i != j {
                            entries.push((mask_pair(n, full & !(1 << i), full & !(1 << j)), prob.clone()));
                        }
                    }
                }
                entries.sort_by(|x, y| x.0.cmp(&y.0));
                entries
            }
            PairDistribution::Intersection { a, b, l, .. } => {
                let size = binomial(n, *a) * binomial(n, *b);
                if size > MAX_INTERSECTION_SUPPORT || n > 64 {
                    return Err(Error::limit("C(n,a)·C(n,b) candidate pairs", size, MAX_INTERSECTION_SUPPORT));
                }
                let lefts = subsets_of_size(n, *a);
                let rights = subsets_of_size(n, *b);
                let mut pairs = Vec::new();
                for &ma in &lefts {
                    for &mb in &rights {
                        if (ma & mb).count_ones() as usize == *l {
                            pairs.push(mask_pair(n, ma, mb));
                        }
                    }
                }
                let prob = Rational::new(BigInt::one(), BigInt::from(pairs.len()));
                pairs.into_iter().map(|pair| (pair, prob.clone())).collect()
            }
            PairDistribution::Explicit { support, .. } => support
                .iter()
                .filter(|(_, p)| !p.is_zero())
                .cloned()
                .collect(),
        };
        Ok(Support { n, entries })
    }

    /// One draw. Works for any `n`.
    pub fn sample_pair(&self, seed: u64) -> Result<SubsetPair> {
        let n = self.n();
        let mut rng = rng_from(seed);
        let (a, b): (Vec<usize>, Vec<usize>) = match self {
            PairDistribution::Product { p, .. } => {
                let p = to_f64(p);
                let mut a = Vec::new();
                let mut b = Vec::new();
                for e in 1..=n {
                    if rng.random::<f64>() < p {
                        a.push(e);
                    }
                    if rng.random::<f64>() < p {
                        b.push(e);
                    }
                }
                (a, b)
            }
            PairDistribution::PositivelyCorrelated { p, delta, .. } => {
                let rate = to_f64(&(p / (Rational::one() - delta)));
                let keep = 1.0 - to_f64(delta);
                let mut a = Vec::new();
                let mut b = Vec::new();
                for e in 1..=n {
                    if rng.random::<f64>() < rate {
                        if rng.random::<f64>() < keep {
                            a.push(e);
                        }
                        if rng.random::<f64>() < keep {
                            b.push(e);
                        }
                    }
                }
                (a, b)
            }
            PairDistribution::Match { .. } => {
                let i = rng.random_range(1..=n);
                let j = loop {
                    let j = rng.random_range(1..=n);
                    if j != i {
                        break j;
                    }
                };
                ((1..=n).filter(|&e| e != i).collect(), (1..=n).filter(|&e| e != j).collect())
            }
            PairDistribution::Intersection { a, b, l, .. } => {
                let left: Vec<usize> = sample_indices(&mut rng, n, *a).into_iter().map(|i| i + 1).collect();
                let mut in_left = vec![false; n + 1];
                left.iter().for_each(|&e| in_left[e] = true);
                let outside: Vec<usize> = (1..=n).filter(|&e| !in_left[e]).collect();
                let mut right: Vec<usize> = sample_indices(&mut rng, *a, *l).into_iter().map(|i| left[i]).collect();
                right.extend(sample_indices(&mut rng, outside.len(), b - l).into_iter().map(|i| outside[i]));
                (left, right)
            }
            PairDistribution::Explicit { support, .. } => {
                let probs: Vec<Rational> = support.iter().map(|(_, p)| p.clone()).collect();
                let (weights, total) = integer_weights(&probs)?;
                let mut ticket = rng.random_range(0..total);
                let idx = weights
                    .iter()
                    .position(|&w| {
                        if ticket < w {
                            true
                        } else {
                            ticket -= w;
                            false
                        }
                    })
                    .expect("weights sum to total");
                return Ok(support[idx].0.clone());
            }
        };
        SubsetPair::new(Subset::from_elements(n, a)?, Subset::from_elements(n, b)?)
    }
}

impl fmt::Display for PairDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairDistribution::Product { n, p } => write!(f, "product(n={n}, p={})", format_rational(p)),
            PairDistribution::PositivelyCorrelated { n, p, delta } => write!(
                f,
                "positively_correlated(n={n}, p={}, delta={})",
                format_rational(p),
                format_rational(delta)
            ),
            PairDistribution::Match { n } => write!(f, "match(n={n})"),
            PairDistribution::Intersection { n, a, b, l } => write!(f, "intersection(n={n}, a={a}, b={b}, l={l})"),
            PairDistribution::Explicit { n, support } => write!(f, "explicit(n={n}, {} pairs)", support.len()),
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::invalid("n must be positive"))
    } else {
        Ok(())
    }
}

fn mask_pair(n: usize, a: u64, b: u64) -> SubsetPair {
    SubsetPair {
        a: Subset::from_mask(n, a).expect("mask in range"),
        b: Subset::from_mask(n, b).expect("mask in range"),
    }
}

fn subsets_of_size(n: usize, k: usize) -> Vec<u64> {
    let full: u64 = if n == 64 { u64::MAX } else { (1 << n) - 1 };
    if k == 0 {
        return vec![0];
    }
    // Gosper's hack, ascending numeric order
    let mut out = Vec::new();
    let mut x: u64 = (1 << k) - 1;
    while x <= full {
        out.push(x);
        let c = x & x.wrapping_neg();
        let r = x.wrapping_add(c);
        if r == 0 {
            break;
        }
        x = (((r ^ x) >> 2) / c) | r;
    }
    out
}

/// An exactly enumerated pair distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct Support {
    pub(crate) n: usize,
    pub(crate) entries: Vec<(SubsetPair, Rational)>,
}

impl Support {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[(SubsetPair, Rational)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> Rational {
        self.entries.iter().map(|(_, p)| p.clone()).sum()
    }

    /// Probability mass on pairs with an empty side.
    pub fn empty_side_mass(&self) -> Rational {
        self.entries
            .iter()
            .filter(|(pair, _)| pair.has_empty_side())
            .map(|(_, p)| p.clone())
            .sum()
    }

    /// Distinct nonempty sets on one side, sorted.
    pub fn sets(&self, side: crate::model::Side) -> Vec<Subset> {
        let mut sets: Vec<Subset> = self
            .entries
            .iter()
            .map(|(pair, _)| match side {
                crate::model::Side::Left => &pair.a,
                crate::model::Side::Right => &pair.b,
            })
            .filter(|s| !s.is_empty())
            .cloned()
            .collect();
        sets.sort();
        sets.dedup();
        sets
    }
}
