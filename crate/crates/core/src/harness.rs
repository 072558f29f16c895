//! Seeded Monte Carlo estimation and bound sweeps.
//!
//! Trial `i` draws all of its shared randomness from
//! `trial_seed(master_seed, i)`, and disagreements are tallied as integers,
//! so results are identical for any thread count.

use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    dp_lower_bound, holenstein_bound, ExactDistribution, FloatDistribution, Side, Subset, SubsetPair,
};
use crate::rational::{count_ratio, Rational};
use crate::matching::{matching_sample, shared_index, MatchingDecomposition};
use crate::sampling::{
    continuous_exact_error, grid_embed, holenstein_continuous_sample, holenstein_exact_error,
    minhash_exact_error, minhash_sample, GridEmbedding, GridParams, PriorityTable,
};
use crate::seed::trial_seed;

const BLOCK: u64 = 4096;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialConfig {
    pub master_seed: u64,
    pub trials: u64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl TrialConfig {
    pub fn new(master_seed: u64, trials: u64) -> Self {
        TrialConfig { master_seed, trials, threads: None }
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }
}

#[derive(Clone, Debug)]
pub enum Strategy {
    /// Flat inputs only.
    MinHash,
    HolensteinGrid(GridParams),
    HolensteinContinuous,
    /// Flat inputs on k-subsets of `[2k − 1]`.
    Matching(Arc<MatchingDecomposition>),
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::MinHash => f.write_str("minhash"),
            Strategy::HolensteinGrid(_) => f.write_str("holenstein"),
            Strategy::HolensteinContinuous => f.write_str("continuous"),
            Strategy::Matching(_) => f.write_str("matching"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub estimate: f64,
    /// Binomial standard error `sqrt(p̂(1 − p̂)/trials)`.
    pub stderr: f64,
    pub disagreements: u64,
    pub trials: u64,
}

fn flat(p: &ExactDistribution, who: &str) -> Result<Subset> {
    p.flat_support()
        .ok_or_else(|| Error::invalid(format!("{who} input is not flat (uniform on a subset)")))
}

enum Prepared<'a> {
    MinHash(Subset, Subset),
    Grid(GridEmbedding, GridEmbedding),
    Continuous(FloatDistribution, FloatDistribution),
    Matching(&'a MatchingDecomposition, Subset, Subset),
}

impl<'a> Prepared<'a> {
    fn new(strategy: &'a Strategy, p: &ExactDistribution, q: &ExactDistribution) -> Result<Self> {
        if p.n() != q.n() {
            return Err(Error::invalid("inputs live in different universes"));
        }
        Ok(match strategy {
            Strategy::MinHash => Prepared::MinHash(flat(p, "left")?, flat(q, "right")?),
            Strategy::HolensteinGrid(params) => Prepared::Grid(grid_embed(p, params)?, grid_embed(q, params)?),
            Strategy::HolensteinContinuous => Prepared::Continuous(p.to_float(), q.to_float()),
            Strategy::Matching(decomp) => {
                let (a, b) = (flat(p, "left")?, flat(q, "right")?);
                // validates the shapes up front
                matching_sample(Side::Left, &a, 1, decomp)?;
                matching_sample(Side::Right, &b, 1, decomp)?;
                Prepared::Matching(decomp, a, b)
            }
        })
    }

    fn outputs(&self, seed: u64) -> Result<(usize, usize)> {
        Ok(match self {
            Prepared::MinHash(a, b) => {
                let pri = PriorityTable::new(seed);
                (minhash_sample(a, &pri)?, minhash_sample(b, &pri)?)
            }
            Prepared::Grid(a, b) => {
                let pri = PriorityTable::new(seed);
                (a.sample(&pri), b.sample(&pri))
            }
            Prepared::Continuous(p, q) => {
                (holenstein_continuous_sample(p, seed)?, holenstein_continuous_sample(q, seed)?)
            }
            Prepared::Matching(decomp, a, b) => {
                let r = shared_index(seed, decomp.k());
                (matching_sample(Side::Left, a, r, decomp)?, matching_sample(Side::Right, b, r, decomp)?)
            }
        })
    }
}

/// Runs `job` on a dedicated pool of `threads` workers, or on the global
/// pool for `None`.
pub fn in_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(job()),
        Some(0) => Err(Error::invalid("thread count must be positive")),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::invalid(format!("cannot build a {t}-thread pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

/// Fraction of trials in which the two parties' outputs differ.
pub fn monte_carlo_error(
    strategy: &Strategy,
    p: &ExactDistribution,
    q: &ExactDistribution,
    cfg: &TrialConfig,
) -> Result<Estimate> {
    if cfg.trials == 0 {
        return Err(Error::invalid("trials must be positive"));
    }
    let prepared = Prepared::new(strategy, p, q)?;
    let blocks = cfg.trials.div_ceil(BLOCK);
    let disagreements = in_pool(cfg.threads, || {
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut count = 0u64;
                for i in b * BLOCK..((b + 1) * BLOCK).min(cfg.trials) {
                    let (x, y) = prepared.outputs(trial_seed(cfg.master_seed, i))?;
                    count += (x != y) as u64;
                }
                Ok::<u64, Error>(count)
            })
            .try_reduce(|| 0, |a, b| Ok(a + b))
    })??;
    let estimate = disagreements as f64 / cfg.trials as f64;
    Ok(Estimate {
        estimate,
        stderr: (estimate * (1.0 - estimate) / cfg.trials as f64).sqrt(),
        disagreements,
        trials: cfg.trials,
    })
}

/// The strategy's exact error evaluator on `(p, q)`. For the Holenstein
/// variants this counts disagreement between the underlying cells or stream
/// points, which upper-bounds element disagreement and equals it when the
/// inputs' differences sit on disjoint elements (as for any two flat sets of
/// equal size).
pub fn exact_strategy_error(strategy: &Strategy, p: &ExactDistribution, q: &ExactDistribution) -> Result<Rational> {
    match strategy {
        Strategy::MinHash => minhash_exact_error(&SubsetPair::new(flat(p, "left")?, flat(q, "right")?)?),
        Strategy::HolensteinGrid(params) => holenstein_exact_error(p, q, params),
        Strategy::HolensteinContinuous => continuous_exact_error(p, q),
        Strategy::Matching(decomp) => {
            let (a, b) = (flat(p, "left")?, flat(q, "right")?);
            let mut agree = 0;
            for r in 1..=decomp.k() {
                agree += (matching_sample(Side::Left, &a, r, decomp)? == matching_sample(Side::Right, &b, r, decomp)?) as usize;
            }
            Ok(Rational::one() - count_ratio(agree, decomp.k()))
        }
    }
}

/// Flat pair at distance exactly `δ = s/t` (lowest terms):
/// `A = {1..t}`, `B = {s+1..s+t}` inside `[s + t]`.
pub fn exact_delta_pair(delta: &Rational) -> Result<SubsetPair> {
    if delta < &Rational::zero() || delta > &Rational::one() {
        return Err(Error::invalid("delta must lie in [0, 1]"));
    }
    let s = usize::try_from(delta.numer()).map_err(|_| Error::invalid("delta numerator too large"))?;
    let t = usize::try_from(delta.denom()).map_err(|_| Error::invalid("delta denominator too large"))?;
    let n = s + t;
    SubsetPair::new(Subset::range(n, 1, t)?, Subset::range(n, s + 1, s + t)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub delta: Rational,
    /// `2δ / (1 + δ)`.
    pub bound: Rational,
    pub empirical: Option<f64>,
    pub exact: Option<Rational>,
    /// Constrained-agreement lower bound `2(1 − p)/(2 − p)` at `p = 1 − δ`.
    pub lower: Rational,
    pub stderr: Option<f64>,
    pub trials: u64,
    pub seed: u64,
    /// The construction needed more than the allowed universe size.
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub strategy: String,
    pub rows: Vec<SweepRow>,
}

/// Tabulates a strategy's error on the exact-δ flat construction against
/// the `2δ/(1+δ)` curve. Rows whose construction needs more than `max_n`
/// elements are flagged and carry no measurements.
pub fn sweep_delta(strategy: &Strategy, deltas: &[Rational], max_n: usize, cfg: &TrialConfig) -> Result<SweepReport> {
    if let Strategy::Matching(_) = strategy {
        return Err(Error::invalid("the matching strategy only applies to its promise family, not a delta sweep"));
    }
    if deltas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("deltas must be strictly increasing"));
    }
    let mut rows = Vec::with_capacity(deltas.len());
    for delta in deltas {
        let pair = exact_delta_pair(delta)?;
        let mut row = SweepRow {
            delta: delta.clone(),
            bound: holenstein_bound(delta),
            empirical: None,
            exact: None,
            lower: dp_lower_bound(&(Rational::one() - delta)),
            stderr: None,
            trials: cfg.trials,
            seed: cfg.master_seed,
            flagged: pair.n() > max_n,
        };
        if !row.flagged {
            let p = ExactDistribution::uniform(&pair.a)?;
            let q = ExactDistribution::uniform(&pair.b)?;
            row.exact = Some(exact_strategy_error(strategy, &p, &q)?);
            if cfg.trials > 0 {
                let est = monte_carlo_error(strategy, &p, &q, cfg)?;
                row.empirical = Some(est.estimate);
                row.stderr = Some(est.stderr);
            }
        }
        rows.push(row);
    }
    Ok(SweepReport { strategy: strategy.to_string(), rows })
}
