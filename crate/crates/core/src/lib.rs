//! Correlated sampling: MinHash, Holenstein's grid embedding, the
//! small-universe matching strategy, and exact tools for the
//! constrained-agreement game.
//!
//! Elements of a universe of size `n` are `1..=n`.

pub mod agreement;
pub mod error;
pub mod harness;
pub mod io;
pub mod model;
pub mod rational;
pub mod matching;
pub mod sampling;
pub mod seed;

pub use agreement::{
    alpha_marginals, best_response, best_response_iteration, beta_marginals, brute_force_optimum,
    conjecture_probe, exact_error, order_strategy, BruteForceResult, DetStrategy, IterationResult,
    PairDistribution, ProbeReport, RankOrder, Support, Verdict,
};
pub use error::{Error, Result};
pub use harness::{monte_carlo_error, sweep_delta, Estimate, Strategy, SweepReport, SweepRow, TrialConfig};
pub use model::{
    flat_tv_distance, holenstein_bound, tv_distance, DiscreteDistribution, ExactDistribution, FloatDistribution,
    Side, Subset, SubsetPair, TvDistance, Universe,
};
pub use rational::{format_rational, parse_rational, Rational};
pub use matching::{build_intersection_graph, decompose, matching_sample, MatchingDecomposition, IntersectionGraph};
pub use sampling::{
    grid_embed, holenstein_continuous_sample, holenstein_sample, minhash_sample, GridEmbedding, GridParams,
    GridRule, PrioritySource, PriorityTable,
};
