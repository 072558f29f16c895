use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::Subset;
use crate::sampling::PrioritySource;

/// A permutation `σ` of `[n]`; `rank(e) = σ(e)`, lower ranks come first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RankOrder {
    ranks: Vec<usize>,
}

impl RankOrder {
    /// `ranks[e - 1] = σ(e)`, a bijection onto `1..=n`.
    pub fn new(ranks: Vec<usize>) -> Result<Self> {
        let n = ranks.len();
        let mut seen = vec![false; n + 1];
        for &r in &ranks {
            if r == 0 || r > n || std::mem::replace(&mut seen[r], true) {
                return Err(Error::invalid(format!("{ranks:?} is not a permutation of 1..={n}")));
            }
        }
        Ok(RankOrder { ranks })
    }

    pub fn identity(n: usize) -> Self {
        RankOrder { ranks: (1..=n).collect() }
    }

    pub fn reversal(n: usize) -> Self {
        RankOrder { ranks: (1..=n).rev().collect() }
    }

    /// The order listing `first_to_last[0]` first.
    pub fn from_sequence(first_to_last: &[usize]) -> Result<Self> {
        let n = first_to_last.len();
        let mut ranks = vec![0; n];
        for (pos, &e) in first_to_last.iter().enumerate() {
            if e == 0 || e > n {
                return Err(Error::invalid(format!("element {e} outside 1..={n}")));
            }
            ranks[e - 1] = pos + 1;
        }
        RankOrder::new(ranks)
    }

    pub fn n(&self) -> usize {
        self.ranks.len()
    }

    pub fn rank(&self, e: usize) -> usize {
        self.ranks[e - 1]
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }
}

impl PrioritySource for RankOrder {
    fn priority(&self, id: u64) -> u64 {
        self.ranks[id as usize - 1] as u64
    }
}

/// A deterministic constrained-agreement strategy: one chosen member per
/// nonempty input set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DetStrategy {
    /// Explicit choices on a finite collection of sets.
    Table(BTreeMap<Subset, usize>),
    /// The `σ`-first member of any nonempty set.
    Order(RankOrder),
}

impl DetStrategy {
    /// Validates that every choice is a member of its set.
    pub fn from_table(entries: impl IntoIterator<Item = (Subset, usize)>) -> Result<Self> {
        let mut table = BTreeMap::new();
        for (set, choice) in entries {
            if !set.contains(choice) {
                return Err(Error::invalid(format!("choice {choice} is not a member of {set}")));
            }
            table.insert(set, choice);
        }
        Ok(DetStrategy::Table(table))
    }

    /// Always outputs the smallest element.
    pub fn min_element(n: usize) -> Self {
        DetStrategy::Order(RankOrder::identity(n))
    }

    /// The choice on `set`, or `None` when the strategy does not cover it.
    pub fn choose(&self, set: &Subset) -> Option<usize> {
        match self {
            DetStrategy::Table(table) => table.get(set).copied(),
            DetStrategy::Order(order) => {
                if set.n() != order.n() {
                    return None;
                }
                set.elements().iter().copied().min_by_key(|&e| order.rank(e))
            }
        }
    }

    pub(crate) fn require(&self, set: &Subset) -> Result<usize> {
        self.choose(set)
            .ok_or_else(|| Error::invalid(format!("strategy has no choice for {set}")))
    }

    /// The explicit table of this strategy restricted to `sets`.
    pub fn tabulate<'a>(&self, sets: impl IntoIterator<Item = &'a Subset>) -> Result<DetStrategy> {
        let table = sets
            .into_iter()
            .map(|s| Ok((s.clone(), self.require(s)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        Ok(DetStrategy::Table(table))
    }

    /// Table entries, when this is a table strategy.
    pub fn entries(&self) -> Option<impl Iterator<Item = (&Subset, &usize)>> {
        match self {
            DetStrategy::Table(table) => Some(table.iter()),
            DetStrategy::Order(_) => None,
        }
    }
}

/// The order strategy `A ↦ argmin_{i ∈ A} σ(i)`.
pub fn order_strategy(sigma: RankOrder) -> DetStrategy {
    DetStrategy::Order(sigma)
}
