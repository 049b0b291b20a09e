//! Spanning-based candidate production.
//!
//! Instead of enumerating all landmark pairs, windows are grown outwards
//! from matches of a few high-weight "core" entity tokens, guided by a
//! cheap lower bound on the dissimilarity of any extension of the current
//! window. When the bound exceeds `1 - delta` the spanning stops; dropping
//! the leftmost landmark then reuses the accumulated state to seed the next
//! candidate, so at most one maximal window per landmark is produced.
//!
//! Bookkeeping conventions, chosen so that all state updates are
//! order-independent and the bounds stay sound:
//!
//! * a matched position is reduced to its best occurrence (highest eds,
//!   ties to the lowest entity token index) and is charged the *matched
//!   entity token's* IDF in `V_T`; unmatched positions are charged the
//!   document token's dictionary IDF — the same charging the window scorer
//!   uses, so the bounds are exact statements about it;
//! * `V_R` holds the IDF of unmatched tokens plus one entity-token IDF per
//!   repeated match of the same entity token; `V_REP` is the repeat part
//!   alone;
//! * the reported bound is the running maximum of the per-window values
//!   along a trajectory (a superset window constrains fewer extensions, so
//!   the maximum over sub-windows is still a valid bound); shrinking resets
//!   the running maximum.

use std::collections::BTreeMap;

use crate::candidates_enum::CandidateWindow;
use crate::corpus::WeightedTokenSet;
use crate::matcher::MatchGrid;
use crate::{eps, real, Real, Similarity};

/// Minimum-cardinality set of largest-weight entity tokens whose combined
/// weight strictly exceeds the mode's core threshold; a window containing
/// no match of any core token can never reach similarity `delta`.
#[derive(Debug, Clone)]
pub struct CoreTokenSet {
    /// Entity token indices in the core, ascending.
    pub core: Vec<usize>,
    /// The remaining (optional) entity token indices, ascending.
    pub optional: Vec<usize>,
}

impl CoreTokenSet {
    /// Degenerate set treating every entity token as core (the ablation
    /// mode that seeds spanning from all matched tokens).
    pub fn all(entity_len: usize) -> Self {
        CoreTokenSet {
            core: (0..entity_len).collect(),
            optional: Vec::new(),
        }
    }

    pub fn is_core(&self, entity_token_idx: usize) -> bool {
        self.core.binary_search(&entity_token_idx).is_ok()
    }
}

/// `1 - delta` for FuzzyED, `2 * (1 - delta) / (1 + delta)` for Fuzzy
/// Jaccard: the weight the core set must strictly exceed.
pub fn core_weight_threshold<F: Real>(delta: F, mode: Similarity) -> F {
    match mode {
        Similarity::FuzzyEd => F::one() - delta,
        Similarity::FuzzyJaccard => {
            real::<F>(2.0) * (F::one() - delta) / (F::one() + delta)
        }
    }
}

pub fn select_core_tokens<F: Real>(
    entity: &WeightedTokenSet<F>,
    delta: F,
    mode: Similarity,
) -> CoreTokenSet {
    let threshold = core_weight_threshold(delta, mode);
    let mut order: Vec<usize> = (0..entity.len()).collect();
    order.sort_by(|&a, &b| {
        entity.weights[b]
            .partial_cmp(&entity.weights[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut core = Vec::new();
    let mut acc = F::zero();
    for &i in &order {
        core.push(i);
        acc = acc + entity.weights[i];
        if acc > threshold + eps::<F>() {
            break;
        }
    }
    core.sort_unstable();
    let optional = (0..entity.len()).filter(|i| !core.contains(i)).collect();
    CoreTokenSet { core, optional }
}

/// Everything spanning needs to know about one document position.
#[derive(Debug, Clone, Copy)]
pub struct PositionInfo<F> {
    /// IDF charged when this position enters a window: the matched entity
    /// token's IDF for landmarks, the document token's own IDF otherwise.
    pub idf: F,
    /// Best occurrence: (entity token index, eds). `None` for unmatched.
    pub occ: Option<(usize, F)>,
    /// Whether any occurrence at this position hits a core token.
    pub is_core: bool,
}

impl<F: Real> PositionInfo<F> {
    pub fn is_landmark(&self) -> bool {
        self.occ.is_some()
    }
}

/// Per-position spanning input for one (document, entity) pair.
/// `doc_idfs` are the dictionary IDF values of the document tokens.
pub fn build_position_infos<F: Real>(
    doc_idfs: &[F],
    grid: &MatchGrid,
    entity_idfs: &[F],
    core: &CoreTokenSet,
) -> Vec<PositionInfo<F>> {
    let mut infos: Vec<PositionInfo<F>> = doc_idfs
        .iter()
        .map(|&idf| PositionInfo {
            idf,
            occ: None,
            is_core: false,
        })
        .collect();
    for o in &grid.occurrences {
        let info = &mut infos[o.doc_pos];
        let sim = real::<F>(o.sim);
        let better = match info.occ {
            None => true,
            Some((j, best)) => sim > best || (sim == best && o.entity_token_idx < j),
        };
        if better {
            info.occ = Some((o.entity_token_idx, sim));
            info.idf = entity_idfs[o.entity_token_idx];
        }
        info.is_core = info.is_core || core.is_core(o.entity_token_idx);
    }
    infos
}

/// Mutable spanning context for one trajectory.
#[derive(Debug, Clone)]
pub struct SpanState<F> {
    /// Current window, inclusive token positions.
    pub left: usize,
    pub right: usize,
    /// Total IDF of the window tokens (under the charging convention).
    pub v_t: F,
    /// Total IDF charged as deletions.
    pub v_r: F,
    /// The part of `v_r` charged for repeated matches of an entity token.
    pub v_rep: F,
    /// Best eds per entity token over the window, `None` when unmatched.
    pub m: Vec<Option<F>>,
    /// `sum of M_i * idf(E_i)` over the present entries.
    pub v_m: F,
    // per entity token: (position, eds) of window landmarks matched to it
    matches: Vec<Vec<(usize, F)>>,
    bound: F,
}

/// Snapshot of the scalar parts of a [`SpanState`] taken just before a
/// trial extension; `absorb` touches at most one `m` entry and pushes at
/// most one match, so this is all `revert` needs.
#[derive(Debug, Clone, Copy)]
pub struct ExtendUndo<F> {
    left: usize,
    right: usize,
    v_t: F,
    v_r: F,
    v_rep: F,
    v_m: F,
    bound: F,
    m_change: Option<(usize, Option<F>)>,
}

impl<F: Real> SpanState<F> {
    pub fn init(pos: usize, info: &PositionInfo<F>, entity_idfs: &[F]) -> Self {
        let mut state = SpanState {
            left: pos,
            right: pos,
            v_t: F::zero(),
            v_r: F::zero(),
            v_rep: F::zero(),
            m: vec![None; entity_idfs.len()],
            v_m: F::zero(),
            matches: vec![Vec::new(); entity_idfs.len()],
            bound: F::zero(),
        };
        state.absorb(pos, info, entity_idfs);
        state
    }

    /// Builds the state for an arbitrary window from scratch; the oracle
    /// for shrink consistency.
    pub fn rebuild(
        left: usize,
        right: usize,
        positions: &[PositionInfo<F>],
        entity_idfs: &[F],
    ) -> Self {
        let mut state = Self::init(left, &positions[left], entity_idfs);
        for pos in left + 1..=right {
            state.extend(pos, &positions[pos], entity_idfs);
        }
        state
    }

    fn absorb(&mut self, pos: usize, info: &PositionInfo<F>, entity_idfs: &[F]) {
        match info.occ {
            None => {
                self.v_t = self.v_t + info.idf;
                self.v_r = self.v_r + info.idf;
            }
            Some((j, eds)) => {
                let idf_j = entity_idfs[j];
                self.v_t = self.v_t + idf_j;
                match self.m[j] {
                    None => {
                        self.m[j] = Some(eds);
                        self.v_m = self.v_m + eds * idf_j;
                    }
                    Some(old) => {
                        self.v_r = self.v_r + idf_j;
                        self.v_rep = self.v_rep + idf_j;
                        if eds > old {
                            self.m[j] = Some(eds);
                            self.v_m = self.v_m + (eds - old) * idf_j;
                        }
                    }
                }
                self.matches[j].push((pos, eds));
            }
        }
    }

    /// Grows the window by one adjacent token on either side.
    pub fn extend(&mut self, pos: usize, info: &PositionInfo<F>, entity_idfs: &[F]) {
        debug_assert!(pos + 1 == self.left || pos == self.right + 1);
        if pos < self.left {
            self.left = pos;
        } else {
            self.right = pos;
        }
        self.absorb(pos, info, entity_idfs);
    }

    /// [`extend`](Self::extend) with an undo token, so a rejected trial
    /// extension can be rolled back in place instead of cloning the state.
    pub fn extend_trial(
        &mut self,
        pos: usize,
        info: &PositionInfo<F>,
        entity_idfs: &[F],
    ) -> ExtendUndo<F> {
        let undo = ExtendUndo {
            left: self.left,
            right: self.right,
            v_t: self.v_t,
            v_r: self.v_r,
            v_rep: self.v_rep,
            v_m: self.v_m,
            bound: self.bound,
            m_change: info.occ.map(|(j, _)| (j, self.m[j])),
        };
        self.extend(pos, info, entity_idfs);
        undo
    }

    /// Restores the state to the snapshot taken by the matching
    /// [`extend_trial`](Self::extend_trial) call.
    pub fn revert(&mut self, undo: ExtendUndo<F>) {
        if let Some((j, old)) = undo.m_change {
            self.matches[j].pop();
            self.m[j] = old;
        }
        self.left = undo.left;
        self.right = undo.right;
        self.v_t = undo.v_t;
        self.v_r = undo.v_r;
        self.v_rep = undo.v_rep;
        self.v_m = undo.v_m;
        self.bound = undo.bound;
    }

    /// Drops the leftmost landmark (and any unmatched tokens before the
    /// next landmark), moving the left boundary to the second landmark.
    /// Returns false when there is no second landmark to shrink to. The
    /// running-maximum bound is reset: the new trajectory starts here.
    pub fn shrink(&mut self, positions: &[PositionInfo<F>], entity_idfs: &[F]) -> bool {
        let Some(l1) = (self.left..=self.right).find(|&p| positions[p].is_landmark()) else {
            return false;
        };
        let Some(l2) = (l1 + 1..=self.right).find(|&p| positions[p].is_landmark()) else {
            return false;
        };
        for pos in self.left..l2 {
            let info = &positions[pos];
            match info.occ {
                None => {
                    self.v_t = self.v_t - info.idf;
                    self.v_r = self.v_r - info.idf;
                }
                Some((j, _)) => {
                    let idf_j = entity_idfs[j];
                    self.v_t = self.v_t - idf_j;
                    let list = &mut self.matches[j];
                    let at = list.iter().position(|&(q, _)| q == pos).unwrap();
                    list.remove(at);
                    if !list.is_empty() {
                        // one repeat charge goes away
                        self.v_r = self.v_r - idf_j;
                        self.v_rep = self.v_rep - idf_j;
                    }
                    let old = self.m[j].unwrap();
                    let new = list
                        .iter()
                        .map(|&(_, e)| e)
                        .fold(None, |acc: Option<F>, e| {
                            Some(acc.map_or(e, |a| a.max(e)))
                        });
                    self.v_m = self.v_m - (old - new.unwrap_or(F::zero())) * idf_j;
                    self.m[j] = new;
                }
            }
        }
        self.left = l2;
        self.bound = F::zero();
        true
    }

    /// Recomputes the bound for the current window and folds it into the
    /// trajectory's running maximum.
    pub fn update_bound(&mut self, entity_idfs: &[F], mode: Similarity) -> F {
        let raw = lower_bound(self, entity_idfs, mode);
        if raw > self.bound {
            self.bound = raw;
        }
        self.bound
    }
}

/// Lower bound on the dissimilarity of every window reachable by extending
/// the current one; `1 - bound` caps the similarity of all extensions.
pub fn lower_bound<F: Real>(state: &SpanState<F>, entity_idfs: &[F], mode: Similarity) -> F {
    match mode {
        Similarity::FuzzyEd => fed_lower_bound(state, entity_idfs),
        Similarity::FuzzyJaccard => fj_lower_bound(state, entity_idfs),
    }
}

/// Largest window-side matched mass any extension of the current window
/// can reach. A scoring alignment substitutes at most one window token per
/// entity token; every other window token is deleted in full. Tokens
/// already inside the window therefore save at most their best eds times
/// their charge (`v_m` plus the repeat charges), and tokens added by an
/// extension save at most their own charge, which is capped by the largest
/// entity-token IDF and by one substitution slot per entity token. The
/// ratio grows monotonically as those future savings are added, so the
/// maximum sits at the full future mass `y`.
fn extension_score_cap<F: Real>(state: &SpanState<F>, entity_idfs: &[F]) -> F {
    let idf_max = entity_idfs.iter().copied().fold(F::zero(), F::max);
    let y = real::<F>(entity_idfs.len() as f64) * idf_max;
    let den = state.v_t + y;
    if den <= F::zero() {
        return F::one();
    }
    ((state.v_m + state.v_rep + y) / den).min(F::one())
}

fn fed_lower_bound<F: Real>(state: &SpanState<F>, entity_idfs: &[F]) -> F {
    F::one() - extension_score_cap(state, entity_idfs)
}

/// Whether adding a prospective match for entity token `r` (current best
/// `m_r`, 0 when unmatched) can increase the maximum-similarity term of a
/// window with totals `v_m` / `v_t`.
pub fn gain_admissible<F: Real>(m_r: F, v_m: F, v_t: F) -> bool {
    if v_t <= F::zero() {
        return true;
    }
    (F::one() - m_r) * v_t >= v_m
}

/// The entity-side half of the intersection weight is at most 1, the
/// window-side half at most the extension cap, so `Q <= (1 + t) / 2` and
/// the Fuzzy Jaccard score is at most `Q / (2 - Q)`.
fn fj_lower_bound<F: Real>(state: &SpanState<F>, entity_idfs: &[F]) -> F {
    let t = extension_score_cap(state, entity_idfs);
    let q = real::<F>(0.5) * (F::one() + t);
    let sc_max = q / (real::<F>(2.0) - q);
    F::one() - sc_max
}

/// Spanning producer: one maximal window per left landmark, each covering
/// every window with that left boundary that could still reach `delta`.
pub fn produce_candidates_spanning<F: Real>(
    grid: &MatchGrid,
    positions: &[PositionInfo<F>],
    entity: &WeightedTokenSet<F>,
    delta: F,
    mode: Similarity,
) -> Vec<CandidateWindow> {
    let entity_idfs = &entity.idf_values;
    let limit = F::one() - delta + eps::<F>();
    // left landmark -> furthest right landmark over all trajectories
    let mut emitted: BTreeMap<usize, usize> = BTreeMap::new();

    let landmark_in = |a: usize, b: usize, rev: bool| -> Option<usize> {
        if rev {
            (a..=b).rev().find(|&p| positions[p].is_landmark())
        } else {
            (a..=b).find(|&p| positions[p].is_landmark())
        }
    };

    for seed in 0..positions.len() {
        if !positions[seed].is_core {
            continue;
        }
        let mut state = SpanState::init(seed, &positions[seed], entity_idfs);
        state.update_bound(entity_idfs, mode);
        // left spanning
        while state.left > 0 {
            let undo =
                state.extend_trial(state.left - 1, &positions[state.left - 1], entity_idfs);
            if state.update_bound(entity_idfs, mode) > limit {
                state.revert(undo);
                break;
            }
        }
        loop {
            // right spanning
            while state.right + 1 < positions.len() {
                let undo =
                    state.extend_trial(state.right + 1, &positions[state.right + 1], entity_idfs);
                if state.update_bound(entity_idfs, mode) > limit {
                    state.revert(undo);
                    break;
                }
            }
            // emit the window trimmed to its landmarks
            if let (Some(a), Some(b)) = (
                landmark_in(state.left, state.right, false),
                landmark_in(state.left, state.right, true),
            ) {
                emitted
                    .entry(a)
                    .and_modify(|r| *r = (*r).max(b))
                    .or_insert(b);
            }
            if !state.shrink(positions, entity_idfs) {
                break;
            }
            state.update_bound(entity_idfs, mode);
            if !(state.left..=state.right).any(|p| positions[p].is_core) {
                break;
            }
        }
    }

    emitted
        .into_iter()
        .map(|(start_pos, end_pos)| {
            let occ_start = grid
                .occurrences
                .partition_point(|o| o.doc_pos < start_pos);
            let occ_end = grid.occurrences.partition_point(|o| o.doc_pos <= end_pos);
            CandidateWindow {
                start_pos,
                end_pos,
                occ_start,
                occ_end,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_idf_model, Document, Entity, EntityId, Token, weigh};
    use crate::matcher::{build_token_index, find_matched_tokens};
    use crate::Score;

    fn wts(idfs: &[f64]) -> WeightedTokenSet<f64> {
        let tokens = (0..idfs.len())
            .map(|i| Token::new(format!("t{i}")).unwrap())
            .collect();
        WeightedTokenSet::from_idfs(tokens, idfs.to_vec())
    }

    #[test]
    fn core_selection_largest_weight() {
        let e = wts(&[4.0, 3.0, 2.0, 1.0]); // weights 0.4/0.3/0.2/0.1
        let c = select_core_tokens(&e, 0.9, Similarity::FuzzyEd);
        assert_eq!(c.core, vec![0]); // 0.4 > 0.1
        assert_eq!(c.optional, vec![1, 2, 3]);
        let c = select_core_tokens(&e, 0.9, Similarity::FuzzyJaccard);
        assert_eq!(c.core, vec![0]); // 0.4 > 2*0.1/1.9
    }

    #[test]
    fn core_selection_grows_with_lower_delta() {
        let e = wts(&[4.0, 3.0, 2.0, 1.0]);
        // FED threshold 1 - 0.5 = 0.5: need 0.4 + 0.3
        let c = select_core_tokens(&e, 0.5, Similarity::FuzzyEd);
        assert_eq!(c.core, vec![0, 1]);
    }

    #[test]
    fn core_threshold_values() {
        let t: f64 = core_weight_threshold(0.9, Similarity::FuzzyEd);
        assert!((t - 0.1).abs() < 1e-12);
        let t: f64 = core_weight_threshold(0.9, Similarity::FuzzyJaccard);
        assert!((t - 0.2 / 1.9).abs() < 1e-12);
    }

    fn unmatched(idf: f64) -> PositionInfo<f64> {
        PositionInfo {
            idf,
            occ: None,
            is_core: false,
        }
    }

    fn matched(j: usize, eds: f64, idf: f64, is_core: bool) -> PositionInfo<f64> {
        PositionInfo {
            idf,
            occ: Some((j, eds)),
            is_core,
        }
    }

    #[test]
    fn init_state_examples() {
        let idfs = [3.0, 2.0];
        let s = SpanState::init(4, &matched(0, 1.0, 3.0, true), &idfs);
        assert_eq!((s.left, s.right), (4, 4));
        assert_eq!(s.v_t, 3.0);
        assert_eq!(s.v_r, 0.0);
        assert_eq!(s.m[0], Some(1.0));
        let s = SpanState::init(4, &matched(1, 0.85, 2.0, true), &idfs);
        assert_eq!(s.m[1], Some(0.85));
        assert_eq!(s.v_t, 2.0);
    }

    #[test]
    fn extend_cases() {
        let idfs = [3.0, 2.0];
        let mut s = SpanState::init(5, &matched(0, 1.0, 3.0, true), &idfs);
        // unmatched token: both totals grow by its idf
        s.extend(4, &unmatched(2.0), &idfs);
        assert_eq!(s.v_t, 5.0);
        assert_eq!(s.v_r, 2.0);
        // first match of entity token 1: no deletion charged
        s.extend(6, &matched(1, 0.9, 2.0, false), &idfs);
        assert_eq!(s.v_t, 7.0);
        assert_eq!(s.v_r, 2.0);
        assert_eq!(s.m[1], Some(0.9));
        // repeat match of token 1 with higher eds: deletion charged, best kept
        s.extend(7, &matched(1, 0.95, 2.0, false), &idfs);
        assert_eq!(s.v_t, 9.0);
        assert_eq!(s.v_r, 4.0);
        assert_eq!(s.v_rep, 2.0);
        assert_eq!(s.m[1], Some(0.95));
    }

    #[test]
    fn trial_extension_reverts_exactly() {
        let idfs = [3.0, 2.0];
        let cases = [
            unmatched(1.5),
            matched(0, 0.9, 3.0, true),  // repeat of token 0
            matched(1, 0.85, 2.0, false), // first match of token 1
        ];
        for info in cases {
            let mut s = SpanState::init(5, &matched(0, 1.0, 3.0, true), &idfs);
            s.extend(6, &matched(0, 0.95, 3.0, true), &idfs);
            s.update_bound(&idfs, Similarity::FuzzyEd);
            let before = s.clone();
            let undo = s.extend_trial(7, &info, &idfs);
            s.update_bound(&idfs, Similarity::FuzzyEd);
            s.revert(undo);
            assert_eq!((s.left, s.right), (before.left, before.right));
            assert_eq!(s.v_t, before.v_t);
            assert_eq!(s.v_r, before.v_r);
            assert_eq!(s.v_rep, before.v_rep);
            assert_eq!(s.v_m, before.v_m);
            assert_eq!(s.m, before.m);
            assert_eq!(s.matches, before.matches);
            assert_eq!(s.bound, before.bound);
        }
    }

    #[test]
    fn fed_bound_hand_example() {
        // entity idfs {3, 2}: token 0 exactly matched, two junk tokens of
        // idf 1 -> V_M = 3, V_T = 5, future mass y = 2 * 3 = 6, so the
        // cap is 9/11 and the bound 2/11
        let idfs = [3.0, 2.0];
        let mut s = SpanState::init(0, &matched(0, 1.0, 3.0, true), &idfs);
        s.extend(1, &unmatched(1.0), &idfs);
        s.extend(2, &unmatched(1.0), &idfs);
        assert_eq!(s.v_t, 5.0);
        assert_eq!(s.v_r, 2.0);
        assert_eq!(s.v_rep, 0.0);
        let b = fed_lower_bound(&s, &idfs);
        assert!((b - 2.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn bounds_zero_on_perfect_window() {
        let idfs = [3.0, 2.0];
        let mut s = SpanState::init(0, &matched(0, 1.0, 3.0, true), &idfs);
        s.extend(1, &matched(1, 1.0, 2.0, false), &idfs);
        assert_eq!(fed_lower_bound(&s, &idfs), 0.0);
        let b = fj_lower_bound(&s, &idfs);
        assert!(b.abs() < 1e-12);
    }

    #[test]
    fn fj_cap_at_one_gives_zero_bound() {
        let idfs = [1.0];
        let s = SpanState::init(0, &matched(0, 1.0, 1.0, true), &idfs);
        assert!((extension_score_cap(&s, &idfs) - 1.0).abs() < 1e-12);
        assert!(fj_lower_bound(&s, &idfs).abs() < 1e-12);
    }

    #[test]
    fn admission_threshold() {
        // admitting exactly at the ratio is allowed
        assert!(gain_admissible(0.5, 2.0, 4.0));
        assert!(gain_admissible(0.4, 2.0, 4.0));
        assert!(!gain_admissible(0.6, 2.0, 4.0));
    }

    #[test]
    fn shrink_matches_rebuild() {
        let idfs = [3.0, 2.0, 1.5];
        let positions = vec![
            matched(0, 0.9, 3.0, true),
            unmatched(0.7),
            matched(1, 1.0, 2.0, false),
            unmatched(0.4),
            matched(0, 0.95, 3.0, true),
            matched(2, 0.85, 1.5, false),
        ];
        let mut s = SpanState::rebuild(0, 5, &positions, &idfs);
        assert!(s.shrink(&positions, &idfs));
        let fresh = SpanState::rebuild(2, 5, &positions, &idfs);
        assert_eq!((s.left, s.right), (2, 5));
        assert!((s.v_t - fresh.v_t).abs() < 1e-9);
        assert!((s.v_r - fresh.v_r).abs() < 1e-9);
        assert!((s.v_m - fresh.v_m).abs() < 1e-9);
        assert_eq!(s.m, fresh.m);
    }

    fn spanning_setup(
        dict: &[&str],
        doc_text: &str,
        delta: Score,
        tau: Score,
        mode: Similarity,
    ) -> (Vec<CandidateWindow>, usize) {
        let entities: Vec<Entity> = dict
            .iter()
            .enumerate()
            .map(|(i, line)| Entity {
                id: EntityId(i as u32 + 1),
                tokens: crate::corpus::tokenize(line).0,
            })
            .collect();
        let model = build_idf_model(&entities).unwrap();
        let index = build_token_index(&entities, tau);
        let doc = Document::from_text("d", doc_text);
        let entity = &entities[0];
        let weighted = weigh::<Score>(&entity.tokens, &model);
        let core = select_core_tokens(&weighted, delta, mode);
        let grid = find_matched_tokens(&doc, entity, &index, tau, None);
        let doc_idfs: Vec<Score> = doc.tokens.iter().map(|t| model.idf(t)).collect();
        let infos = build_position_infos(&doc_idfs, &grid, &weighted.idf_values, &core);
        let k = grid.matched_positions().len();
        let windows = produce_candidates_spanning(&grid, &infos, &weighted, delta, mode);
        (windows, k)
    }

    #[test]
    fn single_exact_occurrence_yields_covering_window() {
        let (windows, _) = spanning_setup(
            &[
                "summer palace garden",
                "river walk",
                "quiet lane",
                "stone bridge",
            ],
            "we strolled to the summer palace garden before dusk",
            0.9,
            0.8,
            Similarity::FuzzyEd,
        );
        assert_eq!(windows.len(), 1);
        let w = windows[0];
        // the planted entity sits at token positions 4..=6
        assert!(w.start_pos <= 4 && w.end_pos >= 6);
    }

    #[test]
    fn emitted_windows_at_most_k() {
        for mode in [Similarity::FuzzyEd, Similarity::FuzzyJaccard] {
            let (windows, k) = spanning_setup(
                &["summer palace", "palace lane", "stone bridge"],
                "summer palace near palace lane by the summer palace again",
                0.8,
                0.8,
                mode,
            );
            assert!(windows.len() <= k, "{} > {k}", windows.len());
            assert!(!windows.is_empty());
        }
    }

    #[test]
    fn no_core_match_no_windows() {
        let (windows, _) = spanning_setup(
            &["summer palace", "stone bridge", "river walk"],
            "nothing here relates at all",
            0.9,
            0.8,
            Similarity::FuzzyEd,
        );
        assert!(windows.is_empty());
    }

    #[test]
    fn window_boundaries_are_landmarks() {
        let (windows, _) = spanning_setup(
            &["summer palace garden", "stone bridge", "river walk"],
            "a summer palace garden and a stone summer palace garden end",
            0.85,
            0.8,
            Similarity::FuzzyEd,
        );
        for w in &windows {
            assert!(w.occ_start < w.occ_end);
        }
    }
}
