//! Exhaustive optimum of the constrained agreement game.
//!
//! Every left strategy is scanned; for each, the right player's exact best
//! response is computed in closed form, so the scan attains the global
//! minimum error. Strategy `f` is identified with its mixed-radix index:
//! digit `j` is the position of `f(L_j)` inside `L_j`, where `L_0 < L_1 < ...`
//! are the nonempty left sets in sorted order, and digit 0 is most significant.

use num_traits::One;
use rayon::prelude::*;
use serde::Serialize;

use super::family::{PairDistribution, Support};
use super::game::argmax_member;
use super::strategy::DetStrategy;
use crate::error::{Error, Result};
use crate::model::{Side, Subset};
use crate::rational::{count_ratio, integer_weights, Rational};

/// Cap on the number of left strategies scanned.
pub const MAX_STRATEGY_SPACE: u128 = 100_000_000;

/// Rounds for the best-response iteration fallback.
pub const MAX_ITERATION_ROUNDS: usize = 100;

#[derive(Clone, Debug)]
pub struct BruteForceResult {
    pub error: Rational,
    /// Lexicographically smallest optimal left strategy.
    pub f: DetStrategy,
    /// Best response to `f`, smallest element on ties.
    pub g: DetStrategy,
    pub strategies_scanned: u128,
}

/// Integer-weighted view of a support for the scan.
struct Scan {
    n: usize,
    lefts: Vec<Subset>,
    rights: Vec<Subset>,
    /// `contrib[j]` lists `(right id, weight)` for pairs with left set `j`.
    contrib: Vec<Vec<(usize, u128)>>,
    total: u128,
}

impl Scan {
    fn new(support: &Support) -> Result<Scan> {
        let probs: Vec<Rational> = support.entries().iter().map(|(_, p)| p.clone()).collect();
        let (weights, total) = integer_weights(&probs)?;
        let lefts = support.sets(Side::Left);
        let rights = support.sets(Side::Right);
        let mut contrib = vec![Vec::new(); lefts.len()];
        for ((pair, _), w) in support.entries().iter().zip(weights) {
            if pair.has_empty_side() {
                continue;
            }
            let j = lefts.binary_search(&pair.a).expect("listed");
            let r = rights.binary_search(&pair.b).expect("listed");
            contrib[j].push((r, w));
        }
        Ok(Scan { n: support.n(), lefts, rights, contrib, total })
    }

    fn space(&self) -> Option<u128> {
        self.lefts.iter().try_fold(1u128, |acc, s| acc.checked_mul(s.len() as u128))
    }

    fn digits_of(&self, mut index: u128) -> Vec<usize> {
        let mut digits = vec![0; self.lefts.len()];
        for j in (0..self.lefts.len()).rev() {
            let radix = self.lefts[j].len() as u128;
            digits[j] = (index % radix) as usize;
            index /= radix;
        }
        digits
    }

    fn choice(&self, j: usize, digit: usize) -> usize {
        self.lefts[j].elements()[digit]
    }

    /// Agreement weight of the best response, given `acc[r * (n+1) + i]`.
    fn agreement(&self, acc: &[u128]) -> u128 {
        let width = self.n + 1;
        self.rights
            .iter()
            .enumerate()
            .map(|(r, set)| set.elements().iter().map(|&i| acc[r * width + i]).max().unwrap_or(0))
            .sum()
    }

    /// Scans indices `[start, end)`, returning the best `(agreement, index)`.
    fn scan_range(&self, start: u128, end: u128) -> (u128, u128) {
        let width = self.n + 1;
        let mut digits = self.digits_of(start);
        let mut acc = vec![0u128; self.rights.len() * width];
        for (j, &d) in digits.iter().enumerate() {
            let e = self.choice(j, d);
            for &(r, w) in &self.contrib[j] {
                acc[r * width + e] += w;
            }
        }
        let mut best = (self.agreement(&acc), start);
        let mut index = start;
        while index + 1 < end {
            index += 1;
            // odometer step from the least significant digit
            let mut j = self.lefts.len();
            loop {
                j -= 1;
                let old = self.choice(j, digits[j]);
                digits[j] += 1;
                let wrapped = digits[j] == self.lefts[j].len();
                if wrapped {
                    digits[j] = 0;
                }
                let new = self.choice(j, digits[j]);
                for &(r, w) in &self.contrib[j] {
                    acc[r * width + old] -= w;
                    acc[r * width + new] += w;
                }
                if !wrapped {
                    break;
                }
            }
            let agree = self.agreement(&acc);
            if agree > best.0 {
                best = (agree, index);
            }
        }
        best
    }

    fn strategies(&self, index: u128) -> Result<(DetStrategy, DetStrategy, u128)> {
        let width = self.n + 1;
        let digits = self.digits_of(index);
        let mut acc = vec![0u128; self.rights.len() * width];
        for (j, &d) in digits.iter().enumerate() {
            for &(r, w) in &self.contrib[j] {
                acc[r * width + self.choice(j, d)] += w;
            }
        }
        let f = DetStrategy::from_table(
            digits.iter().enumerate().map(|(j, &d)| (self.lefts[j].clone(), self.choice(j, d))),
        )?;
        let g = DetStrategy::from_table(self.rights.iter().enumerate().map(|(r, set)| {
            (set.clone(), argmax_member(set, &acc[r * width..(r + 1) * width]))
        }))?;
        Ok((f, g, self.agreement(&acc)))
    }
}

/// Exact optimum by exhaustive scan of left strategies. The result does not
/// depend on how the scan is split across threads.
pub fn brute_force_optimum(d: &PairDistribution) -> Result<BruteForceResult> {
    brute_force_support(&d.enumerate_support()?)
}

pub(crate) fn brute_force_support(support: &Support) -> Result<BruteForceResult> {
    let scan = Scan::new(support)?;
    let space = scan.space().unwrap_or(u128::MAX);
    if space > MAX_STRATEGY_SPACE {
        return Err(Error::limit("left strategy space", space, MAX_STRATEGY_SPACE));
    }
    if scan.lefts.is_empty() || scan.rights.is_empty() {
        return Err(Error::invalid("every pair has an empty side; no strategy can agree"));
    }
    let chunks = space.min(256);
    let best = (0..chunks)
        .into_par_iter()
        .map(|c| scan.scan_range(space * c / chunks, space * (c + 1) / chunks))
        .reduce(|| (0, u128::MAX), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
    let (f, g, agree) = scan.strategies(best.1)?;
    if agree != best.0 {
        return Err(Error::invariant("incremental and direct agreement weights differ"));
    }
    let error = Rational::one() - Rational::new(agree.into(), scan.total.into());
    Ok(BruteForceResult { error, f, g, strategies_scanned: space })
}

#[derive(Clone, Debug)]
pub struct IterationResult {
    pub error: Rational,
    pub f: DetStrategy,
    pub g: DetStrategy,
    pub rounds: usize,
    /// Stopped because the error failed to strictly decrease.
    pub stalled: bool,
}

/// Alternating best responses from the min-element strategy. Gives an upper
/// bound on the optimum with no optimality claim.
pub fn best_response_iteration(d: &PairDistribution) -> Result<IterationResult> {
    let support = d.enumerate_support()?;
    let lefts = support.sets(Side::Left);
    let mut f = DetStrategy::min_element(d.n()).tabulate(&lefts)?;
    let mut g = support.best_response(&f, Side::Right)?;
    let mut error = support.exact_error(&f, &g)?;
    for round in 1..=MAX_ITERATION_ROUNDS {
        let f2 = support.best_response(&g, Side::Left)?;
        let g2 = support.best_response(&f2, Side::Right)?;
        let e2 = support.exact_error(&f2, &g2)?;
        if e2 >= error {
            return Ok(IterationResult { error, f, g, rounds: round, stalled: true });
        }
        (f, g, error) = (f2, g2, e2);
    }
    Ok(IterationResult { error, f, g, rounds: MAX_ITERATION_ROUNDS, stalled: false })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    /// The optimum equals the MinHash value.
    Match,
    /// Some deterministic strategy beats MinHash on average.
    Below,
    /// Exhaustive search was capped; the reported value is only an upper bound.
    ResourceLimited,
}

#[derive(Clone, Debug)]
pub struct ProbeReport {
    pub n: usize,
    pub a: usize,
    pub b: usize,
    pub l: usize,
    pub optimum: Rational,
    pub minhash: Rational,
    pub verdict: Verdict,
    pub f: DetStrategy,
    pub g: DetStrategy,
}

/// Compares the exact optimum over the uniform `(n, a, b, l)` family with
/// MinHash's error `1 − l / (a + b − l)`.
pub fn conjecture_probe(n: usize, a: usize, b: usize, l: usize) -> Result<ProbeReport> {
    let d = PairDistribution::intersection_family(n, a, b, l)?;
    let minhash = Rational::one() - count_ratio(l, a + b - l);
    let (optimum, f, g, capped) = match brute_force_optimum(&d) {
        Ok(r) => (r.error, r.f, r.g, false),
        Err(Error::ResourceLimit { .. }) => {
            let it = best_response_iteration(&d)?;
            (it.error, it.f, it.g, true)
        }
        Err(e) => return Err(e),
    };
    let verdict = if capped {
        Verdict::ResourceLimited
    } else if optimum == minhash {
        Verdict::Match
    } else if optimum < minhash {
        Verdict::Below
    } else {
        return Err(Error::invariant(format!(
            "optimum exceeds the MinHash value on {d}, but MinHash averages over order strategies"
        )));
    };
    Ok(ProbeReport { n, a, b, l, optimum, minhash, verdict, f, g })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agreement::{order_strategy, RankOrder};
    use crate::model::{dp_lower_bound, finite_dp_optimum, SubsetPair};
    use crate::rational::ratio;

    /// Independent oracle: every (f, g) pair, no best-response shortcut.
    fn full_pair_enumeration(support: &Support) -> Rational {
        let lefts = support.sets(Side::Left);
        let rights = support.sets(Side::Right);
        let tables = |sets: &[Subset]| -> Vec<DetStrategy> {
            let mut out = vec![Vec::new()];
            for s in sets {
                out = out
                    .into_iter()
                    .flat_map(|prefix: Vec<(Subset, usize)>| {
                        s.elements().iter().map(move |&e| {
                            let mut p = prefix.clone();
                            p.push((s.clone(), e));
                            p
                        })
                    })
                    .collect();
            }
            out.into_iter().map(|t| DetStrategy::from_table(t).unwrap()).collect()
        };
        let fs = tables(&lefts);
        let gs = tables(&rights);
        fs.iter()
            .flat_map(|f| gs.iter().map(move |g| support.exact_error(f, g).unwrap()))
            .min()
            .unwrap()
    }

    #[test]
    fn matches_full_enumeration_on_tiny_instances() {
        let families = [
            PairDistribution::product(1, ratio(1, 2)).unwrap(),
            PairDistribution::product(2, ratio(1, 2)).unwrap(),
            PairDistribution::product(2, ratio(1, 3)).unwrap(),
            PairDistribution::positively_correlated(2, ratio(1, 2), ratio(1, 3)).unwrap(),
            PairDistribution::match_family(3).unwrap(),
            PairDistribution::intersection_family(4, 2, 2, 1).unwrap(),
        ];
        for d in families {
            let support = d.enumerate_support().unwrap();
            assert_eq!(brute_force_optimum(&d).unwrap().error, full_pair_enumeration(&support), "{d}");
        }
    }

    #[test]
    fn product_three_half() {
        let r = brute_force_optimum(&PairDistribution::product(3, ratio(1, 2)).unwrap()).unwrap();
        assert_eq!(r.error, ratio(43, 64));
        assert!(r.error >= dp_lower_bound(&ratio(1, 2)));
        assert_eq!(r.strategies_scanned, 24);
    }

    #[test]
    fn product_family_grid() {
        for n in 1..=3 {
            for p in [ratio(1, 4), ratio(1, 3), ratio(1, 2), ratio(2, 3), ratio(3, 4)] {
                let d = PairDistribution::product(n, p.clone()).unwrap();
                let r = brute_force_optimum(&d).unwrap();
                assert_eq!(r.error, finite_dp_optimum(n, &p));
                assert!(r.error >= dp_lower_bound(&p));
                // the order strategy attains the optimum
                let id = order_strategy(RankOrder::identity(n));
                assert_eq!(d.enumerate_support().unwrap().exact_error(&id, &id).unwrap(), r.error);
            }
        }
    }

    #[test]
    fn witness_attains_reported_error() {
        let d = PairDistribution::intersection_family(5, 2, 3, 1).unwrap();
        let r = brute_force_optimum(&d).unwrap();
        assert_eq!(d.enumerate_support().unwrap().exact_error(&r.f, &r.g).unwrap(), r.error);
    }

    #[test]
    fn match_family_optima() {
        // n = 3 is the singleton-intersection case, where matchings beat 2/n
        assert_eq!(brute_force_optimum(&PairDistribution::match_family(3).unwrap()).unwrap().error, ratio(1, 2));
        for n in [4, 5] {
            let d = PairDistribution::match_family(n).unwrap();
            assert_eq!(brute_force_optimum(&d).unwrap().error, ratio(2, n as i64));
            let id = DetStrategy::min_element(n);
            assert_eq!(crate::agreement::exact_error(&id, &id, &d).unwrap(), ratio(2, n as i64));
        }
    }

    #[test]
    fn intersection_three_two_two_one() {
        let r = brute_force_optimum(&PairDistribution::intersection_family(3, 2, 2, 1).unwrap()).unwrap();
        assert_eq!(r.error, ratio(1, 2));
    }

    #[test]
    fn chunking_does_not_change_the_answer() {
        let d = PairDistribution::product(3, ratio(1, 3)).unwrap();
        let scan = Scan::new(&d.enumerate_support().unwrap()).unwrap();
        let space = scan.space().unwrap();
        let whole = scan.scan_range(0, space);
        for chunks in [1u128, 2, 3, 7, 24] {
            let best = (0..chunks)
                .map(|c| scan.scan_range(space * c / chunks, space * (c + 1) / chunks))
                .fold((0, u128::MAX), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
            assert_eq!(best, whole);
        }
    }

    #[test]
    fn relabeling_preserves_the_optimum() {
        let relabel = |d: &PairDistribution, perm: &[usize]| {
            let n = d.n();
            let map = |s: &Subset| Subset::from_elements(n, s.elements().iter().map(|&e| perm[e - 1])).unwrap();
            let support = d
                .enumerate_support()
                .unwrap()
                .entries()
                .iter()
                .map(|(pair, p)| (SubsetPair::new(map(&pair.a), map(&pair.b)).unwrap(), p.clone()))
                .collect();
            PairDistribution::explicit(support).unwrap()
        };
        let skewed = |n: usize| {
            let d = PairDistribution::intersection_family(n, 2, 2, 1).unwrap();
            let entries = d.enumerate_support().unwrap().entries().to_vec();
            let total: usize = (1..=entries.len()).sum();
            PairDistribution::explicit(
                entries
                    .into_iter()
                    .enumerate()
                    .map(|(i, (pair, _))| (pair, count_ratio(i + 1, total)))
                    .collect(),
            )
            .unwrap()
        };
        for (d, perms) in [
            (skewed(3), vec![vec![2, 3, 1], vec![3, 2, 1]]),
            (skewed(4), vec![vec![4, 3, 2, 1], vec![2, 4, 1, 3]]),
        ] {
            let base = brute_force_optimum(&d).unwrap().error;
            for perm in perms {
                assert_eq!(brute_force_optimum(&relabel(&d, &perm)).unwrap().error, base);
            }
        }
    }

    #[test]
    fn space_cap() {
        let d = PairDistribution::product(6, ratio(1, 2)).unwrap();
        match brute_force_optimum(&d) {
            Err(Error::ResourceLimit { .. }) => {}
            other => panic!("expected resource limit, got {other:?}"),
        }
    }

    #[test]
    fn probes() {
        let r = conjecture_probe(3, 2, 2, 1).unwrap();
        assert_eq!((r.optimum.clone(), r.minhash.clone(), r.verdict), (ratio(1, 2), ratio(2, 3), Verdict::Below));
        let r = conjecture_probe(3, 2, 2, 2).unwrap();
        assert_eq!((r.optimum.clone(), r.minhash.clone(), r.verdict), (ratio(0, 1), ratio(0, 1), Verdict::Match));
        let r = conjecture_probe(4, 3, 3, 2).unwrap();
        assert_eq!(r.minhash, ratio(1, 2));
        assert!(r.optimum <= r.minhash);
    }

    #[test]
    fn capped_probe_falls_back_to_iteration() {
        // C(9,4) = 126 left sets of size 4: 4^126 strategies
        let r = conjecture_probe(9, 4, 4, 2).unwrap();
        assert_eq!(r.verdict, Verdict::ResourceLimited);
        assert!(r.optimum <= r.minhash);
    }

    #[test]
    fn iteration_never_beats_the_optimum() {
        for d in [
            PairDistribution::product(3, ratio(1, 2)).unwrap(),
            PairDistribution::match_family(4).unwrap(),
            PairDistribution::intersection_family(4, 2, 3, 1).unwrap(),
        ] {
            let it = best_response_iteration(&d).unwrap();
            assert!(it.error >= brute_force_optimum(&d).unwrap().error);
        }
    }
}
