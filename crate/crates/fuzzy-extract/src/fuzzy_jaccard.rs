//! Fuzzy Jaccard similarity: Jaccard over fuzzily matched token pairs after
//! redundant matches are removed by a maximum-weight bipartite matching.

use crate::corpus::WeightedTokenSet;
use crate::simcore::edit_similarity;
use crate::{eps, Real};

/// Bipartite match graph between entity tokens (left) and candidate tokens
/// (right); every edge carries an edit similarity >= tau.
#[derive(Debug, Clone)]
pub struct MatchBipartite<F> {
    pub left_count: usize,
    pub right_count: usize,
    /// (entity token idx, candidate token idx, eds), no duplicate pairs.
    pub edges: Vec<(usize, usize, F)>,
}

impl<F: Real> MatchBipartite<F> {
    pub fn from_token_sets(
        entity: &WeightedTokenSet<F>,
        candidate: &WeightedTokenSet<F>,
        tau: F,
    ) -> Self {
        let mut edges = Vec::new();
        for (i, et) in entity.tokens.iter().enumerate() {
            for (j, st) in candidate.tokens.iter().enumerate() {
                let eds: F = edit_similarity(et, st);
                if eds >= tau {
                    edges.push((i, j, eds));
                }
            }
        }
        MatchBipartite {
            left_count: entity.len(),
            right_count: candidate.len(),
            edges,
        }
    }

    /// Graph from a row-major `left x right` pair-similarity table (the
    /// [`crate::fuzzy_ed::pair_sims`] layout).
    pub fn from_sims(left_count: usize, right_count: usize, sims: &[Option<F>]) -> Self {
        debug_assert_eq!(sims.len(), left_count * right_count);
        let mut edges = Vec::new();
        for i in 0..left_count {
            for j in 0..right_count {
                if let Some(eds) = sims[i * right_count + j] {
                    edges.push((i, j, eds));
                }
            }
        }
        MatchBipartite {
            left_count,
            right_count,
            edges,
        }
    }
}

/// A vertex-disjoint edge set of maximum total eds.
#[derive(Debug, Clone)]
pub struct Matching<F> {
    pub pairs: Vec<(usize, usize, F)>,
    pub weight: F,
}

/// Minimum-cost perfect assignment on a square cost matrix (Hungarian
/// algorithm with potentials, O(n^3)).
fn assignment_min<F: Real>(n: usize, cost: &[F]) -> Vec<usize> {
    // 1-based potentials/links, 0 is a virtual column
    let inf = F::infinity();
    let mut u = vec![F::zero(); n + 1];
    let mut v = vec![F::zero(); n + 1];
    let mut p = vec![0usize; n + 1]; // p[j] = row assigned to column j
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] = u[p[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Max total-eds matching weight over a graph with some vertices excluded.
fn best_weight<F: Real>(g: &MatchBipartite<F>, skip_l: &[bool], skip_r: &[bool]) -> F {
    // vertices without any edge stay unmatched at zero cost, so only the
    // edge-incident ones need seats in the assignment matrix
    let mut has_l = vec![false; g.left_count];
    let mut has_r = vec![false; g.right_count];
    for &(i, j, _) in &g.edges {
        has_l[i] = true;
        has_r[j] = true;
    }
    let left: Vec<usize> = (0..g.left_count)
        .filter(|&i| !skip_l[i] && has_l[i])
        .collect();
    let right: Vec<usize> = (0..g.right_count)
        .filter(|&j| !skip_r[j] && has_r[j])
        .collect();
    let n = left.len().max(right.len());
    if n == 0 {
        return F::zero();
    }
    let lpos: std::collections::HashMap<usize, usize> =
        left.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let rpos: std::collections::HashMap<usize, usize> =
        right.iter().enumerate().map(|(k, &j)| (j, k)).collect();
    // pad to square; non-edges and padding cost 0 (i.e. staying unmatched)
    let mut cost = vec![F::zero(); n * n];
    for &(i, j, w) in &g.edges {
        if let (Some(&a), Some(&b)) = (lpos.get(&i), rpos.get(&j)) {
            cost[a * n + b] = -w;
        }
    }
    let row_to_col = assignment_min(n, &cost);
    let mut total = F::zero();
    for (a, &b) in row_to_col.iter().enumerate() {
        total = total - cost[a * n + b];
    }
    total
}

/// Maximum-weight matching with a deterministic tie-break: among all
/// optimal matchings, edges are admitted greedily in lexicographic (i, j)
/// order whenever forcing the edge keeps the optimum attainable.
pub fn max_weight_matching<F: Real>(g: &MatchBipartite<F>) -> Matching<F> {
    let mut skip_l = vec![false; g.left_count];
    let mut skip_r = vec![false; g.right_count];
    let mut edges = g.edges.clone();
    edges.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

    let mut pairs = Vec::new();
    let mut taken = F::zero();
    let total = best_weight(g, &skip_l, &skip_r);
    for &(i, j, w) in &edges {
        if skip_l[i] || skip_r[j] {
            continue;
        }
        skip_l[i] = true;
        skip_r[j] = true;
        let with_edge = taken + w + best_weight(g, &skip_l, &skip_r);
        if with_edge >= total - eps::<F>() {
            pairs.push((i, j, w));
            taken = taken + w;
        } else {
            skip_l[i] = false;
            skip_r[j] = false;
        }
    }
    Matching {
        pairs,
        weight: taken,
    }
}

/// `Q / (2 - Q)` with `Q = 1/2 * sum eds * (w(e) + w(s))` over the
/// maximum-weight matching.
pub fn fuzzy_jaccard_similarity<F: Real>(
    entity: &WeightedTokenSet<F>,
    candidate: &WeightedTokenSet<F>,
    tau: F,
) -> F {
    if candidate.is_empty() {
        return F::zero();
    }
    let g = MatchBipartite::from_token_sets(entity, candidate, tau);
    score_from_graph(entity, candidate, &g)
}

/// As [`fuzzy_jaccard_similarity`] but with caller-supplied pair
/// similarities (the [`crate::fuzzy_ed::pair_sims`] layout).
pub fn fuzzy_jaccard_similarity_with<F: Real>(
    entity: &WeightedTokenSet<F>,
    candidate: &WeightedTokenSet<F>,
    sims: &[Option<F>],
) -> F {
    if candidate.is_empty() {
        return F::zero();
    }
    let g = MatchBipartite::from_sims(entity.len(), candidate.len(), sims);
    score_from_graph(entity, candidate, &g)
}

fn score_from_graph<F: Real>(
    entity: &WeightedTokenSet<F>,
    candidate: &WeightedTokenSet<F>,
    g: &MatchBipartite<F>,
) -> F {
    let matching = max_weight_matching(g);
    let half = F::one() / (F::one() + F::one());
    let q: F = matching
        .pairs
        .iter()
        .map(|&(i, j, eds)| half * eds * (entity.weights[i] + candidate.weights[j]))
        .sum();
    let q = q.min(F::one());
    q / ((F::one() + F::one()) - q)
}
