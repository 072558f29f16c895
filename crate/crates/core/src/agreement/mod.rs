//! The constrained agreement game: Alice gets `A`, Bob gets `B`, with
//! `(A, B)` drawn from a known distribution; each must output a member of
//! their own set, and they want to output the same element.
//!
//! Pairs with an empty side always count as disagreement, and strategy
//! tables are defined on nonempty sets only.

mod family;
mod game;
mod search;
mod strategy;

pub use family::{PairDistribution, Support, EXACT_PRODUCT_MAX_N, MATCH_MAX_N, MAX_INTERSECTION_SUPPORT};
pub use game::{alpha_marginals, beta_marginals, best_response, exact_error, Marginals};
pub use search::{
    best_response_iteration, brute_force_optimum, conjecture_probe, BruteForceResult, IterationResult,
    ProbeReport, Verdict, MAX_STRATEGY_SPACE,
};
pub use strategy::{order_strategy, DetStrategy, RankOrder};
