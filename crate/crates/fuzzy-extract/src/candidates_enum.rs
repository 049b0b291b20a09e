//! Enumeration-based candidate production with valid matching-length
//! bounds.
//!
//! A window can only reach entity similarity `delta` if the number of its
//! matched tokens lies in a range `[l, u]` computable from the entity's
//! weights alone: too few matched tokens cannot carry enough weight, and
//! too many extra copies dilute the total IDF below the threshold. The
//! producer then enumerates exactly the windows whose boundaries are
//! matched positions and whose matched count is in range.

use crate::matcher::MatchGrid;
use crate::corpus::WeightedTokenSet;
use crate::{eps, real, Real, Similarity};

/// Matched-token count range a window must fall in to be worth scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchingLengthBounds {
    pub lower: usize,
    /// `None` means unbounded (the derivation is vacuous, e.g. Fuzzy
    /// Jaccard with delta <= 1/3, or a zero-IDF entity token that can be
    /// repeated for free).
    pub upper: Option<usize>,
}

impl MatchingLengthBounds {
    pub fn contains(&self, count: usize) -> bool {
        count >= self.lower && self.upper.is_none_or(|u| count <= u)
    }

    /// Upper bound clamped to the total matched position count `k`.
    pub fn capped_upper(&self, k: usize) -> usize {
        self.upper.map_or(k, |u| u.min(k))
    }
}

/// Weight threshold the matched part of a window must reach: `delta`
/// itself for FuzzyED, `(3*delta - 1) / (1 + delta)` for Fuzzy Jaccard.
pub fn weight_threshold<F: Real>(delta: F, mode: Similarity) -> F {
    match mode {
        Similarity::FuzzyEd => delta,
        Similarity::FuzzyJaccard => {
            (real::<F>(3.0) * delta - F::one()) / (F::one() + delta)
        }
    }
}

pub fn matching_length_bounds<F: Real>(
    entity: &WeightedTokenSet<F>,
    delta: F,
    mode: Similarity,
) -> MatchingLengthBounds {
    let m = entity.len();
    let theta = weight_threshold(delta, mode);
    if theta <= F::zero() {
        return MatchingLengthBounds {
            lower: 1,
            upper: None,
        };
    }

    // l: fewest largest-weight entity tokens whose total weight reaches
    // theta
    let mut weights = entity.weights.clone();
    weights.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut lower = m;
    let mut acc = F::zero();
    for (count, w) in weights.iter().enumerate() {
        acc = acc + *w;
        if acc >= theta - eps::<F>() {
            lower = count + 1;
            break;
        }
    }

    // u: keep adding copies of the smallest-IDF entity token while the
    // entity's total IDF still covers theta of the inflated window
    let idf_min = entity
        .idf_values
        .iter()
        .copied()
        .fold(F::infinity(), F::min);
    let upper = if idf_min <= F::zero() {
        None
    } else {
        let t = entity.total_idf;
        // largest r with t / (t + r * idf_min) >= theta
        let r = (t * (F::one() - theta) / (theta * idf_min) + eps::<F>())
            .to_f64()
            .unwrap()
            .floor() as usize;
        Some(m + r)
    };
    MatchingLengthBounds { lower, upper }
}

/// A document token window whose boundaries are matched positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CandidateWindow {
    /// First and last token position, inclusive.
    pub start_pos: usize,
    pub end_pos: usize,
    /// Range into the grid's occurrence list covered by the window.
    pub occ_start: usize,
    pub occ_end: usize,
}

impl CandidateWindow {
    pub fn token_len(&self) -> usize {
        self.end_pos - self.start_pos + 1
    }
}

/// All windows starting and ending on matched positions with a matched
/// count in `bounds`. Output size is at most `(u - l + 1) * k` for `k`
/// matched positions.
pub fn enumerate_candidates(grid: &MatchGrid, bounds: &MatchingLengthBounds) -> Vec<CandidateWindow> {
    let positions = grid.matched_positions();
    let k = positions.len();
    // occurrence index range per landmark: occurrences are sorted by
    // position, so each landmark owns a contiguous run
    let mut occ_starts = Vec::with_capacity(k + 1);
    {
        let mut oi = 0;
        for &p in &positions {
            while grid.occurrences[oi].doc_pos < p {
                oi += 1;
            }
            occ_starts.push(oi);
        }
        occ_starts.push(grid.occurrences.len());
    }

    let upper = bounds.capped_upper(k);
    let mut out = Vec::new();
    if bounds.lower > k {
        return out;
    }
    for i in 0..k {
        let lo = i + bounds.lower - 1;
        let hi = (i + upper - 1).min(k - 1);
        for j in lo..=hi {
            out.push(CandidateWindow {
                start_pos: positions[i],
                end_pos: positions[j],
                occ_start: occ_starts[i],
                occ_end: occ_starts[j + 1],
            });
        }
    }
    out
}
