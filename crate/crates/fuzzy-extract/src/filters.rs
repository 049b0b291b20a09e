//! Cheap candidate filters applied before the full similarity is measured.

use crate::corpus::WeightedTokenSet;
use crate::{eps, Real, Similarity};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterDecision {
    Keep,
    Prune,
}

/// Insertion/substitution lower-bound filter, FuzzyED only. `m[i]` is the
/// best eds of entity token `i` against any window token, 0 when
/// unmatched. The bound never counts deletion cost, since the cheapest
/// sub-string may drop the unmatched window tokens for free.
pub fn fed_lower_bound_filter<F: Real>(
    entity: &WeightedTokenSet<F>,
    m: &[F],
    delta: F,
) -> FilterDecision {
    debug_assert_eq!(m.len(), entity.len());
    let c: F = m
        .iter()
        .zip(&entity.weights)
        .map(|(&mi, &w)| (F::one() - mi) * w)
        .sum();
    if c > F::one() - delta + eps::<F>() {
        FilterDecision::Prune
    } else {
        FilterDecision::Keep
    }
}

/// Weight a window's matched entity tokens must carry for the window to
/// possibly reach `delta`: `delta` itself under FuzzyED; under Fuzzy
/// Jaccard the candidate side of the matched mass can contribute up to the
/// same amount again, which relaxes the requirement to
/// `(3*delta - 1) / (1 + delta)`.
pub fn overlap_weight_threshold<F: Real>(delta: F, mode: Similarity) -> F {
    crate::candidates_enum::weight_threshold(delta, mode)
}

/// Overlap-weight filter, both modes: prune when the entity-side weight of
/// the matched entity tokens falls strictly below the threshold.
pub fn overlap_weight_filter<F: Real>(
    entity: &WeightedTokenSet<F>,
    matched_entity_tokens: &[usize],
    delta: F,
    mode: Similarity,
) -> FilterDecision {
    let w: F = matched_entity_tokens
        .iter()
        .map(|&i| entity.weights[i])
        .sum();
    if w < overlap_weight_threshold(delta, mode) - eps::<F>() {
        FilterDecision::Prune
    } else {
        FilterDecision::Keep
    }
}
