//! Token-level weighted edit distance and the similarity derived from it.
//!
//! The cost of transforming a candidate token window into an entity is the
//! sum of weighted deletions (candidate tokens dropped), insertions (entity
//! tokens missing) and substitutions (matched pairs, charged by how far the
//! pair is from an exact match). Two variants of the window cost exist:
//!
//! * [`fuzzy_ed_cost`] leaves the candidate's prefix and suffix free, i.e.
//!   it finds the cheapest contiguous sub-string of the candidate;
//! * [`fuzzy_ed_cost_anchored`] charges every candidate token, which is the
//!   right semantics when the caller has already fixed the window
//!   boundaries (the pipeline scores each window it enumerates this way, so
//!   widening a window can only add cost for the extra tokens).
//!
//! Candidate token weights are normalized over the full window before the
//! DP runs; they are not renormalized when the free-ends variant skips a
//! prefix or suffix.

use crate::corpus::WeightedTokenSet;
use crate::simcore::edit_similarity;
use crate::Real;

/// `(1 - eds(e, s)) * (w(e) + w(s))`, the cost of substituting a matched
/// candidate token for an entity token. Callers only substitute pairs with
/// `eds >= tau`.
pub fn substitution_cost<F: Real>(eds: F, w_e: F, w_s: F) -> F {
    (F::one() - eds) * (w_e + w_s)
}

/// Cost breakdown of one transformation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformCost<F> {
    pub deletion: F,
    pub insertion: F,
    pub substitution: F,
}

impl<F: Real> TransformCost<F> {
    pub fn total(&self) -> F {
        self.deletion + self.insertion + self.substitution
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Step {
    Start,
    Insert,
    Delete,
    Substitute,
}

/// Row-major `m x n` table of pair similarities; `None` below tau.
pub fn pair_sims<F: Real>(
    entity: &WeightedTokenSet<F>,
    candidate: &WeightedTokenSet<F>,
    tau: F,
) -> Vec<Option<F>> {
    let n = candidate.len();
    let mut sims = vec![None; entity.len() * n];
    for i in 0..entity.len() {
        for j in 0..n {
            let s: F = edit_similarity(&entity.tokens[i], &candidate.tokens[j]);
            if s >= tau {
                sims[i * n + j] = Some(s);
            }
        }
    }
    sims
}

fn dp_cost<F: Real>(
    entity: &WeightedTokenSet<F>,
    candidate: &WeightedTokenSet<F>,
    sims: &[Option<F>],
    free_ends: bool,
) -> TransformCost<F> {
    let m = entity.len();
    let n = candidate.len();
    debug_assert!(m > 0);
    debug_assert_eq!(sims.len(), m * n);

    let inf = F::infinity();
    let mut dp = vec![inf; (m + 1) * (n + 1)];
    let mut step = vec![Step::Start; (m + 1) * (n + 1)];
    let at = |i: usize, j: usize| i * (n + 1) + j;
    dp[at(0, 0)] = F::zero();
    for j in 1..=n {
        dp[at(0, j)] = if free_ends {
            F::zero()
        } else {
            dp[at(0, j - 1)] + candidate.weights[j - 1]
        };
        step[at(0, j)] = if free_ends { Step::Start } else { Step::Delete };
    }
    for i in 1..=m {
        dp[at(i, 0)] = dp[at(i - 1, 0)] + entity.weights[i - 1];
        step[at(i, 0)] = Step::Insert;
    }
    for i in 1..=m {
        for j in 1..=n {
            let mut best = dp[at(i - 1, j)] + entity.weights[i - 1];
            let mut how = Step::Insert;
            let del = dp[at(i, j - 1)] + candidate.weights[j - 1];
            if del < best {
                best = del;
                how = Step::Delete;
            }
            if let Some(eds) = sims[(i - 1) * n + (j - 1)] {
                let sub = dp[at(i - 1, j - 1)]
                    + substitution_cost(eds, entity.weights[i - 1], candidate.weights[j - 1]);
                // prefer the substitution on ties for a stable backtrace
                if sub <= best {
                    best = sub;
                    how = Step::Substitute;
                }
            }
            dp[at(i, j)] = best;
            step[at(i, j)] = how;
        }
    }

    // answer cell: free suffix takes the min over the last row
    let mut end_j = n;
    if free_ends {
        for j in 0..=n {
            if dp[at(m, j)] < dp[at(m, end_j)] {
                end_j = j;
            }
        }
    }

    // backtrace to split the total into components
    let mut cost = TransformCost {
        deletion: F::zero(),
        insertion: F::zero(),
        substitution: F::zero(),
    };
    let (mut i, mut j) = (m, end_j);
    while i > 0 || j > 0 {
        match step[at(i, j)] {
            Step::Start => break,
            Step::Insert => {
                cost.insertion = cost.insertion + entity.weights[i - 1];
                i -= 1;
            }
            Step::Delete => {
                cost.deletion = cost.deletion + candidate.weights[j - 1];
                j -= 1;
            }
            Step::Substitute => {
                let eds = sims[(i - 1) * n + (j - 1)].unwrap();
                cost.substitution = cost.substitution
                    + substitution_cost(eds, entity.weights[i - 1], candidate.weights[j - 1]);
                i -= 1;
                j -= 1;
            }
        }
    }
    cost
}

/// Minimum transformation cost over all contiguous sub-strings of the
/// candidate (free prefix and suffix). An empty candidate costs the full
/// entity insertion, i.e. 1 when the entity weights are normalized.
pub fn fuzzy_ed_cost<F: Real>(
    entity: &WeightedTokenSet<F>,
    candidate: &WeightedTokenSet<F>,
    tau: F,
) -> TransformCost<F> {
    dp_cost(entity, candidate, &pair_sims(entity, candidate, tau), true)
}

/// Transformation cost of the whole candidate window: boundary tokens that
/// do not align pay their deletion weight like any interior token.
pub fn fuzzy_ed_cost_anchored<F: Real>(
    entity: &WeightedTokenSet<F>,
    candidate: &WeightedTokenSet<F>,
    tau: F,
) -> TransformCost<F> {
    dp_cost(entity, candidate, &pair_sims(entity, candidate, tau), false)
}

/// Anchored cost with the pair similarities supplied by the caller (e.g.
/// already computed by the token matcher); must follow the [`pair_sims`]
/// layout and tau convention.
pub fn fuzzy_ed_cost_anchored_with<F: Real>(
    entity: &WeightedTokenSet<F>,
    candidate: &WeightedTokenSet<F>,
    sims: &[Option<F>],
) -> TransformCost<F> {
    dp_cost(entity, candidate, sims, false)
}

fn cost_to_similarity<F: Real>(total: F) -> F {
    if total > F::one() {
        F::zero()
    } else {
        F::one() - total
    }
}

/// `0` when the cost exceeds 1, otherwise `1 - cost`; free-ends cost.
pub fn fuzzy_ed_similarity<F: Real>(
    entity: &WeightedTokenSet<F>,
    candidate: &WeightedTokenSet<F>,
    tau: F,
) -> F {
    cost_to_similarity(fuzzy_ed_cost(entity, candidate, tau).total())
}

/// Similarity from the anchored cost; the pipeline's window scorer.
pub fn fuzzy_ed_similarity_anchored<F: Real>(
    entity: &WeightedTokenSet<F>,
    candidate: &WeightedTokenSet<F>,
    tau: F,
) -> F {
    cost_to_similarity(fuzzy_ed_cost_anchored(entity, candidate, tau).total())
}

/// Anchored similarity with caller-supplied pair similarities.
pub fn fuzzy_ed_similarity_anchored_with<F: Real>(
    entity: &WeightedTokenSet<F>,
    candidate: &WeightedTokenSet<F>,
    sims: &[Option<F>],
) -> F {
    cost_to_similarity(fuzzy_ed_cost_anchored_with(entity, candidate, sims).total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Token;
    use proptest::prelude::*;

    fn wts(words: &[&str], idfs: &[f64]) -> WeightedTokenSet<f64> {
        WeightedTokenSet::from_idfs(
            words.iter().map(|w| Token::new(*w).unwrap()).collect(),
            idfs.to_vec(),
        )
    }

    fn uniform(words: &[&str]) -> WeightedTokenSet<f64> {
        wts(words, &vec![1.0; words.len()])
    }

    /// Exhaustive minimum alignment cost between the full entity and the
    /// full candidate window (all candidate tokens charged).
    fn oracle_anchored(e: &WeightedTokenSet<f64>, s: &WeightedTokenSet<f64>, tau: f64) -> f64 {
        fn go(
            e: &WeightedTokenSet<f64>,
            s: &WeightedTokenSet<f64>,
            tau: f64,
            i: usize,
            j: usize,
        ) -> f64 {
            if i == e.len() {
                return s.weights[j..].iter().sum();
            }
            if j == s.len() {
                return e.weights[i..].iter().sum();
            }
            let mut best = (e.weights[i] + go(e, s, tau, i + 1, j))
                .min(s.weights[j] + go(e, s, tau, i, j + 1));
            let eds: f64 = edit_similarity(&e.tokens[i], &s.tokens[j]);
            if eds >= tau {
                best = best
                    .min(substitution_cost(eds, e.weights[i], s.weights[j]) + go(e, s, tau, i + 1, j + 1));
            }
            best
        }
        go(e, s, tau, 0, 0)
    }

    /// Free-ends oracle: cheapest anchored cost over every contiguous
    /// sub-string of the candidate, keeping the precomputed window weights.
    fn oracle_free(e: &WeightedTokenSet<f64>, s: &WeightedTokenSet<f64>, tau: f64) -> f64 {
        let mut best = 1.0f64; // empty sub-string: insert the whole entity
        for a in 0..s.len() {
            for b in a + 1..=s.len() {
                let sub = WeightedTokenSet {
                    tokens: s.tokens[a..b].to_vec(),
                    idf_values: s.idf_values[a..b].to_vec(),
                    total_idf: s.total_idf,
                    weights: s.weights[a..b].to_vec(),
                };
                best = best.min(oracle_anchored(e, &sub, tau));
            }
        }
        best
    }

    #[test]
    fn substitution_cost_values() {
        assert_eq!(substitution_cost(1.0f64, 0.3, 0.4), 0.0);
        assert!((substitution_cost(0.8f64, 0.3, 0.25) - 0.11).abs() < 1e-12);
        // low tau lets the substitution cost exceed a deletion
        assert!((substitution_cost(0.4f64, 0.5, 0.5) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn exact_candidate_costs_zero() {
        let e = wts(&["the", "university", "of", "oxford"], &[1.0, 4.0, 1.0, 4.0]);
        let c = fuzzy_ed_cost(&e, &e, 0.8);
        assert_eq!(c.total(), 0.0);
        assert_eq!(fuzzy_ed_similarity(&e, &e, 0.8), 1.0);
    }

    #[test]
    fn missing_token_pays_insertion() {
        let e = uniform(&["a", "b"]);
        let c = uniform(&["a"]);
        let cost = fuzzy_ed_cost(&e, &c, 0.8);
        assert!((cost.total() - 0.5).abs() < 1e-12);
        assert!((cost.insertion - 0.5).abs() < 1e-12);
        assert_eq!(cost.deletion, 0.0);
    }

    #[test]
    fn empty_candidate_costs_one() {
        let e = wts(&["a", "b", "c"], &[3.0, 2.0, 1.0]);
        let empty = WeightedTokenSet::<f64>::from_idfs(vec![], vec![]);
        let cost = fuzzy_ed_cost(&e, &empty, 0.8);
        assert!((cost.total() - 1.0).abs() < 1e-12);
        assert!((cost.insertion - 1.0).abs() < 1e-12);
    }

    #[test]
    fn typo_pairs_cost_matches_oracle() {
        let e = wts(&["the", "university", "of", "oxford"], &[0.5, 3.0, 0.5, 3.0]);
        let s = wts(&["the", "univercity", "of", "oxfort"], &[0.5, 3.0, 0.5, 3.0]);
        let got = fuzzy_ed_cost(&e, &s, 0.8).total();
        let want = oracle_free(&e, &s, 0.8);
        assert!((got - want).abs() < 1e-12);
        // and it is exactly the sum of the two substitution costs
        let eds_u: f64 = edit_similarity(
            &Token::new("university").unwrap(),
            &Token::new("univercity").unwrap(),
        );
        let eds_o: f64 =
            edit_similarity(&Token::new("oxford").unwrap(), &Token::new("oxfort").unwrap());
        let w = 3.0 / 7.0;
        let want_direct =
            substitution_cost(eds_u, w, w) + substitution_cost(eds_o, w, w);
        assert!((got - want_direct).abs() < 1e-12);
    }

    #[test]
    fn free_ends_skip_noise() {
        let e = uniform(&["oxford", "press"]);
        // candidate weights fixed over the whole window
        let s = uniform(&["visit", "oxford", "press", "today"]);
        let free = fuzzy_ed_cost(&e, &s, 0.8).total();
        assert_eq!(free, 0.0);
        let anchored = fuzzy_ed_cost_anchored(&e, &s, 0.8).total();
        assert!((anchored - 0.5).abs() < 1e-12); // delete the two noise tokens
    }

    #[test]
    fn supplied_sims_equal_recomputed() {
        let e = wts(&["alpha", "beta", "gamma"], &[2.0, 1.0, 3.0]);
        let s = wts(&["alpha", "betaa", "delta", "gamma"], &[2.0, 1.0, 0.5, 3.0]);
        for tau in [0.6, 0.8] {
            let sims = pair_sims(&e, &s, tau);
            let direct = fuzzy_ed_similarity_anchored(&e, &s, tau);
            let cached = fuzzy_ed_similarity_anchored_with(&e, &s, &sims);
            assert!((direct - cached).abs() < 1e-12);
        }
    }

    #[test]
    fn similarity_clamp() {
        assert_eq!(cost_to_similarity(0.0f64), 1.0);
        assert_eq!(cost_to_similarity(1.3f64), 0.0);
        assert!((cost_to_similarity(0.08f64) - 0.92).abs() < 1e-12);
    }

    #[test]
    fn component_sum_equals_total() {
        let e = wts(&["alpha", "beta", "gamma"], &[2.0, 1.0, 3.0]);
        let s = wts(&["alpha", "betaa", "delta", "gamma"], &[2.0, 1.0, 0.5, 3.0]);
        for tau in [0.6, 0.8, 1.0] {
            for cost in [fuzzy_ed_cost(&e, &s, tau), fuzzy_ed_cost_anchored(&e, &s, tau)] {
                let sum = cost.deletion + cost.insertion + cost.substitution;
                assert!((sum - cost.total()).abs() < 1e-9);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]
        #[test]
        fn dp_matches_exhaustive_oracle(
            e_words in prop::collection::vec("[a-c]{1,4}", 1..5),
            s_words in prop::collection::vec("[a-c]{1,4}", 0..5),
            e_idfs in prop::collection::vec(0.1f64..4.0, 5),
            s_idfs in prop::collection::vec(0.1f64..4.0, 5),
            tau in prop::sample::select(vec![0.5, 0.8, 1.0]),
        ) {
            let e = wts(
                &e_words.iter().map(String::as_str).collect::<Vec<_>>(),
                &e_idfs[..e_words.len()],
            );
            let s = wts(
                &s_words.iter().map(String::as_str).collect::<Vec<_>>(),
                &s_idfs[..s_words.len()],
            );
            let free = fuzzy_ed_cost(&e, &s, tau).total();
            prop_assert!((free - oracle_free(&e, &s, tau)).abs() < 1e-9);
            let anchored = fuzzy_ed_cost_anchored(&e, &s, tau).total();
            prop_assert!((anchored - oracle_anchored(&e, &s, tau)).abs() < 1e-9);
            // anchored can only be costlier than the best sub-string
            prop_assert!(anchored >= free - 1e-9);
        }

        #[test]
        fn raising_tau_never_lowers_cost(
            e_words in prop::collection::vec("[a-c]{1,4}", 1..4),
            s_words in prop::collection::vec("[a-c]{1,4}", 1..4),
        ) {
            let e = uniform(&e_words.iter().map(String::as_str).collect::<Vec<_>>());
            let s = uniform(&s_words.iter().map(String::as_str).collect::<Vec<_>>());
            let mut last = 0.0f64;
            for tau in [0.4, 0.6, 0.8, 1.0] {
                let c = fuzzy_ed_cost(&e, &s, tau).total();
                prop_assert!(c >= last - 1e-9);
                last = c;
            }
        }

        #[test]
        fn similarity_in_range(
            e_words in prop::collection::vec("[a-c]{1,4}", 1..4),
            s_words in prop::collection::vec("[a-c]{1,4}", 0..5),
        ) {
            let e = uniform(&e_words.iter().map(String::as_str).collect::<Vec<_>>());
            let s = uniform(&s_words.iter().map(String::as_str).collect::<Vec<_>>());
            let v = fuzzy_ed_similarity(&e, &s, 0.8);
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
