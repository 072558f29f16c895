use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive};

use super::minhash::{argmin_priority, PrioritySource};
use crate::error::{Error, Result};
use crate::model::{tv_distance, ExactDistribution, FloatDistribution};
use crate::rational::{count_ratio, format_rational, parse_rational, Rational};

/// Which grid cells `(ω, kγ)` an input distribution owns.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GridRule {
    /// Cells lying entirely below the mass: `(k + 1)γ ≤ P(ω)`, giving
    /// `⌊P(ω)/γ⌋` cells per element.
    #[default]
    Floor,
    /// Cells whose level is strictly below the mass: `kγ < P(ω)`, giving
    /// `⌈P(ω)/γ⌉` cells per element.
    Strict,
}

/// Grid step `γ = 1/levels`; levels are `{0, γ, ..., 1 − γ}`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridParams {
    gamma: Rational,
    levels: u64,
    rule: GridRule,
}

impl GridParams {
    pub fn new(gamma: Rational) -> Result<Self> {
        if !gamma.is_positive() || gamma > Rational::one() {
            return Err(Error::invalid(format!("gamma {} not in (0, 1]", format_rational(&gamma))));
        }
        let inv = gamma.recip();
        if !inv.is_integer() {
            return Err(Error::invalid(format!(
                "1/gamma must be an integer, got {}",
                format_rational(&inv)
            )));
        }
        let levels = inv
            .to_integer()
            .to_u64()
            .ok_or_else(|| Error::invalid("1/gamma does not fit in 64 bits"))?;
        Ok(GridParams { gamma, levels, rule: GridRule::Floor })
    }

    /// Parses `"p/q"` or a decimal.
    pub fn parse(text: &str) -> Result<Self> {
        GridParams::new(parse_rational(text)?)
    }

    pub fn with_rule(mut self, rule: GridRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn gamma(&self) -> &Rational {
        &self.gamma
    }

    pub fn levels(&self) -> u64 {
        self.levels
    }

    pub fn rule(&self) -> GridRule {
        self.rule
    }

    /// Snaps float input to multiples of `γ/1000` so that cell boundaries
    /// are compared exactly.
    pub fn snap(&self, p: &FloatDistribution) -> Result<ExactDistribution> {
        p.snap(self.levels.saturating_mul(1000))
    }

    fn cells_for(&self, mass: &Rational) -> u64 {
        let scaled = mass * BigInt::from(self.levels);
        let count = match self.rule {
            GridRule::Floor => scaled.floor(),
            GridRule::Strict => scaled.ceil(),
        };
        count.to_integer().to_u64().expect("mass in [0, 1]").min(self.levels)
    }
}

/// A distribution embedded as a flat set of grid cells. Element `ω` owns the
/// levels `0..counts[ω - 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridEmbedding {
    levels: u64,
    counts: Vec<u64>,
    total: u64,
}

/// Embeds `p` into `Ω × Γ`.
pub fn grid_embed(p: &ExactDistribution, params: &GridParams) -> Result<GridEmbedding> {
    let counts: Vec<u64> = p.probs().iter().map(|m| params.cells_for(m)).collect();
    let total = counts.iter().sum();
    if total == 0 {
        return Err(Error::invalid(format!(
            "grid gamma = {} is too coarse: no cell lies below any probability",
            format_rational(params.gamma())
        )));
    }
    Ok(GridEmbedding { levels: params.levels, counts, total })
}

impl GridEmbedding {
    pub fn n(&self) -> usize {
        self.counts.len()
    }

    /// Number of cells owned by the 1-indexed element `e`.
    pub fn count(&self, e: usize) -> u64 {
        self.counts[e - 1]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// All cells as `(element, level index)`.
    pub fn cells(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| (0..c).map(move |k| (i + 1, k)))
    }

    /// Global id of cell `(e, k)` in `Ω × Γ`; shared by every embedding with
    /// the same grid.
    #[inline]
    pub fn cell_id(&self, e: usize, k: u64) -> u64 {
        (e as u64 - 1) * self.levels + k
    }

    pub fn intersection_len(&self, other: &GridEmbedding) -> u64 {
        self.counts.iter().zip(&other.counts).map(|(a, b)| *a.min(b)).sum()
    }

    pub fn union_len(&self, other: &GridEmbedding) -> u64 {
        self.counts.iter().zip(&other.counts).map(|(a, b)| *a.max(b)).sum()
    }

    /// Output distribution of the sampler: cells of `ω` over all cells.
    pub fn marginals(&self) -> Vec<Rational> {
        self.counts
            .iter()
            .map(|&c| Rational::new(c.into(), self.total.into()))
            .collect()
    }

    /// MinHash over the cells, reporting the element coordinate.
    pub fn sample<P: PrioritySource + ?Sized>(&self, pri: &P) -> usize {
        let id = argmin_priority(
            self.counts
                .iter()
                .enumerate()
                .flat_map(|(i, &c)| (0..c).map(move |k| i as u64 * self.levels + k)),
            pri,
        )
        .expect("embedding is nonempty");
        (id / self.levels) as usize + 1
    }

    fn check_compatible(&self, other: &GridEmbedding) -> Result<()> {
        if self.levels != other.levels || self.counts.len() != other.counts.len() {
            return Err(Error::invalid("embeddings use different grids or universes"));
        }
        Ok(())
    }
}

/// Holenstein's strategy for one party.
pub fn holenstein_sample<P: PrioritySource + ?Sized>(
    p: &ExactDistribution,
    params: &GridParams,
    pri: &P,
) -> Result<usize> {
    Ok(grid_embed(p, params)?.sample(pri))
}

/// `1 − |cells(P) ∩ cells(Q)| / |cells(P) ∪ cells(Q)|`, the probability
/// that the parties pick different cells. Different cells can still carry
/// the same element, so this is exact for element disagreement only when
/// every element with unequal cell counts has none on one side.
pub fn holenstein_exact_error(
    p: &ExactDistribution,
    q: &ExactDistribution,
    params: &GridParams,
) -> Result<Rational> {
    tv_distance(p, q)?;
    let ep = grid_embed(p, params)?;
    let eq = grid_embed(q, params)?;
    ep.check_compatible(&eq)?;
    Ok(Rational::one() - count_ratio(ep.intersection_len(&eq) as usize, ep.union_len(&eq) as usize))
}

/// `(P(ω) − γ, P(ω) / (1 − γ|Ω|))` for each element. The upper bound is
/// `None` when `γ|Ω| ≥ 1`, where it carries no information.
pub fn sandwich_bounds(p: &ExactDistribution, gamma: &Rational) -> Vec<(Rational, Option<Rational>)> {
    let shrink = Rational::one() - gamma * BigInt::from(p.n());
    p.probs()
        .iter()
        .map(|m| {
            let upper = shrink.is_positive().then(|| m / &shrink);
            (m - gamma, upper)
        })
        .collect()
}

/// Upper bound on the grid strategy's error: `(2δ + γ|Ω|) / (1 + δ)`.
pub fn grid_error_bound(delta: &Rational, gamma: &Rational, n: usize) -> Rational {
    (Rational::from_integer(2.into()) * delta + gamma * BigInt::from(n)) / (Rational::one() + delta)
}

impl GridParams {
    pub fn error_bound(&self, delta: &Rational, n: usize) -> Rational {
        grid_error_bound(delta, &self.gamma, n)
    }
}
