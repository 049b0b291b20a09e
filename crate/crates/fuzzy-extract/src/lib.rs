//! Dictionary-based approximate entity extraction.
//!
//! Finds all sub-strings of a document that are similar to entities in a
//! dictionary under a two-level similarity: character-level edit similarity
//! within tokens, combined with a token-level similarity (weighted edit
//! distance or fuzzy Jaccard) across token sequences.
//!
//! The extraction pipeline has four stages: match document tokens against
//! entity tokens, produce candidate windows (by enumeration or by spanning
//! from high-weight core tokens), filter candidates with cheap lower bounds,
//! and measure the full two-level similarity on the survivors.

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

pub mod candidates_enum;
pub mod candidates_span;
pub mod corpus;
pub mod eval;
pub mod filters;
pub mod fuzzy_ed;
pub mod fuzzy_jaccard;
pub mod matcher;
pub mod pipeline;
pub mod simcore;

/// Scalar type used by the core similarity math. `f32` and `f64` both work;
/// the pipeline and CLI run on [`Score`].
pub trait Real: Float + FromPrimitive + Sum + Debug + Send + Sync + 'static {}

impl<T> Real for T where T: Float + FromPrimitive + Sum + Debug + Send + Sync + 'static {}

/// Concrete scalar used by the pipeline, the matcher and the CLI.
pub type Score = f64;

/// Which token-level similarity an operation is working under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Similarity {
    /// Weighted token-level edit distance (insert/delete/substitute costs).
    FuzzyEd,
    /// Jaccard over fuzzily matched token pairs after redundant-match removal.
    FuzzyJaccard,
}

pub(crate) fn real<F: Real>(x: f64) -> F {
    F::from(x).expect("constant representable in scalar type")
}

/// Slack used when comparing against pruning thresholds, always applied on
/// the side that keeps a candidate alive.
pub(crate) fn eps<F: Real>() -> F {
    real(1e-9)
}
