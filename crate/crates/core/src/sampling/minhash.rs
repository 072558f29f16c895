use num_traits::One;

use crate::error::{Error, Result};
use crate::model::{Subset, SubsetPair};
use crate::rational::{count_ratio, Rational};
use crate::seed::keyed;

/// Assigns each element id a priority. The lowest priority wins.
pub trait PrioritySource {
    fn priority(&self, id: u64) -> u64;
}

/// Seed-derived priorities: a uniformly random order on any finite set of ids.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PriorityTable {
    seed: u64,
}

impl PriorityTable {
    pub fn new(seed: u64) -> Self {
        PriorityTable { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl PrioritySource for PriorityTable {
    #[inline]
    fn priority(&self, id: u64) -> u64 {
        keyed(self.seed, id)
    }
}

impl<P: PrioritySource + ?Sized> PrioritySource for &P {
    fn priority(&self, id: u64) -> u64 {
        (**self).priority(id)
    }
}

/// The id with minimal `(priority, id)`, or `None` for an empty iterator.
#[inline]
pub fn argmin_priority<P: PrioritySource + ?Sized>(
    ids: impl IntoIterator<Item = u64>,
    pri: &P,
) -> Option<u64> {
    ids.into_iter()
        .map(|id| (pri.priority(id), id))
        .min()
        .map(|(_, id)| id)
}

/// MinHash: the member of `a` that comes first in the shared order.
pub fn minhash_sample<P: PrioritySource + ?Sized>(a: &Subset, pri: &P) -> Result<usize> {
    argmin_priority(a.elements().iter().map(|&e| e as u64), pri)
        .map(|id| id as usize)
        .ok_or_else(|| Error::invalid("MinHash input set must be nonempty"))
}

/// Disagreement probability of MinHash on flat inputs: `1 − |A∩B| / |A∪B|`.
pub fn minhash_exact_error(pair: &SubsetPair) -> Result<Rational> {
    pair.a.require_nonempty("A")?;
    pair.b.require_nonempty("B")?;
    Ok(Rational::one() - count_ratio(pair.intersection_len(), pair.union_len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    /// Priorities given explicitly, `ranks[id - 1]`.
    struct Ranks(Vec<u64>);

    impl PrioritySource for Ranks {
        fn priority(&self, id: u64) -> u64 {
            self.0[id as usize - 1]
        }
    }

    fn permutations(n: usize) -> Vec<Vec<u64>> {
        fn go(prefix: &mut Vec<u64>, left: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
            if left.is_empty() {
                out.push(prefix.clone());
                return;
            }
            for i in 0..left.len() {
                let x = left.remove(i);
                prefix.push(x);
                go(prefix, left, out);
                prefix.pop();
                left.insert(i, x);
            }
        }
        let mut out = Vec::new();
        go(&mut Vec::new(), &mut (0..n as u64).collect(), &mut out);
        out
    }

    #[test]
    fn singleton_always_wins() {
        let a = Subset::new(9, vec![5]).unwrap();
        for seed in 0..50 {
            assert_eq!(minhash_sample(&a, &PriorityTable::new(seed)).unwrap(), 5);
        }
    }

    #[test]
    fn picks_lowest_priority() {
        let a = Subset::new(3, vec![1, 2, 3]).unwrap();
        assert_eq!(minhash_sample(&a, &Ranks(vec![1, 0, 2])).unwrap(), 2);
    }

    #[test]
    fn ties_go_to_the_smaller_id() {
        let a = Subset::new(3, vec![2, 3]).unwrap();
        assert_eq!(minhash_sample(&a, &Ranks(vec![0, 7, 7])).unwrap(), 2);
    }

    #[test]
    fn empty_input_is_rejected() {
        let a = Subset::empty(3).unwrap();
        assert!(matches!(minhash_sample(&a, &PriorityTable::new(1)), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn uniform_over_all_orders() {
        let a = Subset::new(3, vec![1, 3]).unwrap();
        let mut hits = [0; 4];
        for perm in permutations(3) {
            hits[minhash_sample(&a, &Ranks(perm)).unwrap()] += 1;
        }
        assert_eq!(hits, [0, 3, 0, 3]);

        for n in 1..=7usize {
            let perms = permutations(n);
            for mask in 1..1u64 << n {
                let a = Subset::from_mask(n, mask).unwrap();
                let mut hits = vec![0usize; n + 1];
                for perm in &perms {
                    hits[minhash_sample(&a, &Ranks(perm.clone())).unwrap()] += 1;
                }
                for (e, &h) in hits.iter().enumerate().skip(1) {
                    let expected = if a.contains(e) { perms.len() / a.len() } else { 0 };
                    assert_eq!(h, expected);
                }
            }
        }
    }

    #[test]
    fn exact_error_examples() {
        let s = |v: Vec<usize>| Subset::new(4, v).unwrap();
        let pair = |a, b| SubsetPair::new(s(a), s(b)).unwrap();
        assert_eq!(minhash_exact_error(&pair(vec![1, 2], vec![1, 2])).unwrap(), ratio(0, 1));
        assert_eq!(minhash_exact_error(&pair(vec![1, 2], vec![3, 4])).unwrap(), ratio(1, 1));
        assert_eq!(minhash_exact_error(&pair(vec![1, 2], vec![2, 3])).unwrap(), ratio(2, 3));
        assert!(minhash_exact_error(&pair(vec![], vec![2, 3])).is_err());
    }

    #[test]
    fn exact_error_matches_permutation_enumeration() {
        for n in 1..=5usize {
            let perms = permutations(n);
            for ma in 1..1u64 << n {
                for mb in 1..1u64 << n {
                    let pair = SubsetPair::new(
                        Subset::from_mask(n, ma).unwrap(),
                        Subset::from_mask(n, mb).unwrap(),
                    )
                    .unwrap();
                    let disagree = perms
                        .iter()
                        .filter(|p| {
                            let r = Ranks((*p).clone());
                            minhash_sample(&pair.a, &r).unwrap() != minhash_sample(&pair.b, &r).unwrap()
                        })
                        .count();
                    assert_eq!(minhash_exact_error(&pair).unwrap(), count_ratio(disagree, perms.len()));
                }
            }
        }
    }

    #[test]
    fn seeded_output_is_a_member() {
        let a = Subset::new(20, vec![2, 3, 5, 7, 11, 13, 17, 19]).unwrap();
        for seed in 0..500 {
            assert!(a.contains(minhash_sample(&a, &PriorityTable::new(seed)).unwrap()));
        }
    }
}
