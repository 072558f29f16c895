//! Inputs shared by the benchmarks.

use corrsample::rational::count_ratio;
use corrsample::{ExactDistribution, Subset, SubsetPair};

/// `{1..t}` and `{s+1..s+t}` inside `[s + t]`.
pub fn shifted_pair(s: usize, t: usize) -> SubsetPair {
    let n = s + t;
    SubsetPair::new(Subset::range(n, 1, t).unwrap(), Subset::range(n, s + 1, s + t).unwrap()).unwrap()
}

/// Weights `1, 2, ..., n`, normalized.
pub fn ramp(n: usize) -> ExactDistribution {
    let total = n * (n + 1) / 2;
    ExactDistribution::new((1..=n).map(|i| count_ratio(i, total)).collect()).unwrap()
}

/// Weights `n, ..., 2, 1`, normalized.
pub fn reverse_ramp(n: usize) -> ExactDistribution {
    let total = n * (n + 1) / 2;
    ExactDistribution::new((1..=n).rev().map(|i| count_ratio(i, total)).collect()).unwrap()
}
