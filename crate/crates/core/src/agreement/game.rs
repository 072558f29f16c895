use num_traits::{One, Zero};

use super::family::{PairDistribution, Support};
use super::strategy::DetStrategy;
use crate::error::{Error, Result};
use crate::model::{Side, Subset};
use crate::rational::Rational;

/// Output marginals `Pr[strategy(X) = i]` for `i = 1..=n`. Entries sum to
/// one minus the mass of empty inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct Marginals(Vec<Rational>);

impl Marginals {
    pub fn get(&self, i: usize) -> &Rational {
        &self.0[i - 1]
    }

    pub fn as_slice(&self) -> &[Rational] {
        &self.0
    }

    pub fn total(&self) -> Rational {
        self.0.iter().cloned().sum()
    }
}

impl Support {
    /// `Pr[f(A) ≠ g(B)]`, counting pairs with an empty side as disagreement.
    pub fn exact_error(&self, f: &DetStrategy, g: &DetStrategy) -> Result<Rational> {
        let mut agree = Rational::zero();
        for (pair, prob) in &self.entries {
            if pair.has_empty_side() {
                continue;
            }
            if f.require(&pair.a)? == g.require(&pair.b)? {
                agree += prob;
            }
        }
        Ok(Rational::one() - agree)
    }

    pub fn marginals(&self, strategy: &DetStrategy, side: Side) -> Result<Marginals> {
        let mut out = vec![Rational::zero(); self.n];
        for (pair, prob) in &self.entries {
            let set = pick(pair, side);
            if !set.is_empty() {
                out[strategy.require(set)? - 1] += prob;
            }
        }
        Ok(Marginals(out))
    }

    /// Best response on `side` to `opponent` (who plays the other side):
    /// each input set `X` maps to the `i ∈ X` maximizing
    /// `Pr[opponent output = i, own input = X]`, smallest `i` on ties.
    pub fn best_response(&self, opponent: &DetStrategy, side: Side) -> Result<DetStrategy> {
        let sets = self.sets(side);
        let mut weight: Vec<Vec<Rational>> = vec![vec![Rational::zero(); self.n + 1]; sets.len()];
        for (pair, prob) in &self.entries {
            if pair.has_empty_side() {
                continue;
            }
            let (own, theirs) = match side {
                Side::Left => (&pair.a, &pair.b),
                Side::Right => (&pair.b, &pair.a),
            };
            let id = sets.binary_search(own).expect("set listed");
            weight[id][opponent.require(theirs)?] += prob;
        }
        DetStrategy::from_table(sets.iter().zip(&weight).map(|(set, w)| (set.clone(), argmax_member(set, w))))
    }
}

fn pick(pair: &crate::model::SubsetPair, side: Side) -> &Subset {
    match side {
        Side::Left => &pair.a,
        Side::Right => &pair.b,
    }
}

/// The member of `set` with the largest weight, smallest element on ties.
pub(crate) fn argmax_member<W: PartialOrd>(set: &Subset, weight: &[W]) -> usize {
    let mut best = set.elements()[0];
    for &e in &set.elements()[1..] {
        if weight[e] > weight[best] {
            best = e;
        }
    }
    best
}

/// Exact disagreement probability of `(f, g)` under `d`.
pub fn exact_error(f: &DetStrategy, g: &DetStrategy, d: &PairDistribution) -> Result<Rational> {
    d.enumerate_support()?.exact_error(f, g)
}

/// `β_i = Pr[g(B) = i]`.
pub fn beta_marginals(g: &DetStrategy, d: &PairDistribution) -> Result<Marginals> {
    d.enumerate_support()?.marginals(g, Side::Right)
}

/// `α_i = Pr[f(A) = i]`.
pub fn alpha_marginals(f: &DetStrategy, d: &PairDistribution) -> Result<Marginals> {
    d.enumerate_support()?.marginals(f, Side::Left)
}

/// Best response for `side` against the opponent strategy, in the
/// conditional form that is exact for correlated families too.
pub fn best_response(opponent: &DetStrategy, d: &PairDistribution, side: Side) -> Result<DetStrategy> {
    let support = d.enumerate_support()?;
    if support.is_empty() {
        return Err(Error::invalid("distribution has empty support"));
    }
    support.best_response(opponent, side)
}
