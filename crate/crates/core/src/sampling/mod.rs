//! Correlated sampling strategies: MinHash on flat inputs, Holenstein's
//! grid embedding for general distributions, and its continuous limit.
//!
//! A shared random permutation is realized as i.i.d. 64-bit priorities
//! keyed by element id, ties broken by the smaller id.

mod continuous;
mod grid;
mod minhash;

pub use continuous::{
    continuous_exact_error, holenstein_continuous_sample, SharedStream, MAX_REJECTIONS,
};
pub use grid::{
    grid_embed, grid_error_bound, holenstein_exact_error, holenstein_sample, sandwich_bounds, GridEmbedding,
    GridParams, GridRule,
};
pub use minhash::{argmin_priority, minhash_exact_error, minhash_sample, PrioritySource, PriorityTable};
