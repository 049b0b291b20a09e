//! Finding matched tokens: every document position whose token is within
//! edit similarity `tau` of some entity token.
//!
//! Entity tokens are deduplicated into a bigram inverted index with
//! token-length buckets. A query token collects candidate entity tokens by
//! shared-bigram counting (a pair with edit distance `d` shares at least
//! `max_len - 1 - 2d` bigrams), falls back to scanning a length bucket when
//! that count filter is vacuous, and always verifies with the exact edit
//! similarity, so the result is identical to brute force over all pairs.

use std::collections::HashMap;

use crate::corpus::{Document, Entity, Token};
use crate::simcore::edit_similarity_at_least;
use crate::Score;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchOccurrence {
    /// Token index into the document.
    pub doc_pos: usize,
    /// Index of the matched token within the entity.
    pub entity_token_idx: usize,
    /// Edit similarity of the pair, always >= tau.
    pub sim: Score,
}

/// All matched positions of one entity in one document, sorted by document
/// position. One position may carry several occurrences when the text token
/// matches more than one entity token.
#[derive(Debug, Clone, Default)]
pub struct MatchGrid {
    pub occurrences: Vec<MatchOccurrence>,
}

impl MatchGrid {
    pub fn is_empty(&self) -> bool {
        self.occurrences.is_empty()
    }

    /// Distinct matched document positions, ascending.
    pub fn matched_positions(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.occurrences.iter().map(|o| o.doc_pos).collect();
        v.dedup();
        v
    }
}

struct IndexedToken {
    text: String,
    len: usize,
}

pub struct TokenIndex {
    tau: Score,
    tokens: Vec<IndexedToken>,
    exact: HashMap<String, u32>,
    by_len: HashMap<usize, Vec<u32>>,
    // bigram -> postings of (token id, multiplicity of the bigram in it)
    grams: HashMap<(char, char), Vec<(u32, u32)>>,
}

fn bigram_counts(chars: &[char]) -> HashMap<(char, char), u32> {
    let mut m = HashMap::new();
    for w in chars.windows(2) {
        *m.entry((w[0], w[1])).or_insert(0) += 1;
    }
    m
}

pub fn build_token_index(dictionary: &[Entity], tau: Score) -> TokenIndex {
    assert!(tau > 0.0 && tau <= 1.0, "tau must be in (0, 1]");
    let mut index = TokenIndex {
        tau,
        tokens: Vec::new(),
        exact: HashMap::new(),
        by_len: HashMap::new(),
        grams: HashMap::new(),
    };
    for entity in dictionary {
        for tok in &entity.tokens {
            if index.exact.contains_key(tok.as_str()) {
                continue;
            }
            let id = index.tokens.len() as u32;
            let chars: Vec<char> = tok.as_str().chars().collect();
            index.exact.insert(tok.as_str().to_owned(), id);
            index.by_len.entry(chars.len()).or_default().push(id);
            for (gram, count) in bigram_counts(&chars) {
                index.grams.entry(gram).or_default().push((id, count));
            }
            index.tokens.push(IndexedToken {
                text: tok.as_str().to_owned(),
                len: chars.len(),
            });
        }
    }
    index
}

impl TokenIndex {
    pub fn token_id(&self, tok: &Token) -> Option<u32> {
        self.exact.get(tok.as_str()).copied()
    }

    pub fn build_tau(&self) -> Score {
        self.tau
    }

    /// Entity-token ids within edit similarity `tau` of `query`, with their
    /// similarities. `tau` must be at least the index's build threshold.
    pub fn lookup(&self, query: &str, tau: Score) -> Vec<(u32, Score)> {
        debug_assert!(tau >= self.tau);
        let qc: Vec<char> = query.chars().collect();
        let n = qc.len();
        let mut out = Vec::new();
        if tau >= 1.0 {
            if let Some(&id) = self.exact.get(query) {
                out.push((id, 1.0));
            }
            return out;
        }
        let q_grams = bigram_counts(&qc);
        // dense scratch counters: postings touch a small part of the
        // dictionary, so only touched ids are walked afterwards
        let mut shared = vec![0u32; self.tokens.len()];
        let mut touched: Vec<u32> = Vec::new();
        for (gram, &qcount) in &q_grams {
            if let Some(postings) = self.grams.get(gram) {
                for &(id, tcount) in postings {
                    if shared[id as usize] == 0 {
                        touched.push(id);
                    }
                    shared[id as usize] += qcount.min(tcount);
                }
            }
        }
        // nudge before flooring: (1 - 0.8) * 5 lands at 0.999.. and must
        // still admit distance 1; the verify step keeps the result exact
        let d_max_for = |len: usize| {
            let max_len = len.max(n);
            ((1.0 - tau) * max_len as Score + 1e-9).floor() as usize
        };
        // shared-bigram threshold; below 1 (or for single-char tokens) the
        // count filter is vacuous and the whole length bucket is scanned
        let threshold_for = |len: usize| {
            let max_len = len.max(n);
            (max_len as i64 - 1) - 2 * d_max_for(len) as i64
        };
        let mut checked = vec![false; self.tokens.len()];
        let mut verify = |id: u32, out: &mut Vec<(u32, Score)>| {
            if checked[id as usize] {
                return;
            }
            checked[id as usize] = true;
            let t = &self.tokens[id as usize];
            if let Some(sim) = edit_similarity_at_least::<Score>(query, &t.text, tau) {
                out.push((id, sim));
            }
        };
        for (&len, bucket) in &self.by_len {
            if len.abs_diff(n) > d_max_for(len) {
                continue;
            }
            if n >= 2 && len >= 2 && threshold_for(len) >= 1 {
                continue; // covered by the shared-count walk below
            }
            for &id in bucket {
                verify(id, &mut out);
            }
        }
        for &id in &touched {
            let len = self.tokens[id as usize].len;
            if len < 2 || n < 2 || len.abs_diff(n) > d_max_for(len) {
                continue;
            }
            let threshold = threshold_for(len);
            if threshold >= 1 && shared[id as usize] as i64 >= threshold {
                verify(id, &mut out);
            }
        }
        out.sort_by_key(|&(id, _)| id);
        out
    }
}

/// Matches of every unique entity token against one document, computed once
/// per document and shared across the entities.
pub struct DocMatches {
    // token id -> sorted (doc position, sim)
    per_token: HashMap<u32, Vec<(usize, Score)>>,
}

impl DocMatches {
    pub fn build(doc: &Document, index: &TokenIndex, tau: Score) -> Self {
        let mut per_token: HashMap<u32, Vec<(usize, Score)>> = HashMap::new();
        let mut memo: HashMap<&str, Vec<(u32, Score)>> = HashMap::new();
        for (pos, tok) in doc.tokens.iter().enumerate() {
            let hits = memo
                .entry(tok.as_str())
                .or_insert_with(|| index.lookup(tok.as_str(), tau));
            for &(id, sim) in hits.iter() {
                per_token.entry(id).or_default().push((pos, sim));
            }
        }
        DocMatches { per_token }
    }

    pub fn positions_of(&self, token_id: u32) -> &[(usize, Score)] {
        self.per_token
            .get(&token_id)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

/// The match grid for one (document, entity) pair. `restrict_to` limits the
/// queried entity tokens to the given indices (the core-token path).
pub fn find_matched_tokens(
    doc: &Document,
    entity: &Entity,
    index: &TokenIndex,
    tau: Score,
    restrict_to: Option<&[usize]>,
) -> MatchGrid {
    let matches = DocMatches::build(doc, index, tau);
    find_matched_tokens_cached(&matches, doc, entity, index, tau, restrict_to)
}

pub fn find_matched_tokens_cached(
    matches: &DocMatches,
    doc: &Document,
    entity: &Entity,
    index: &TokenIndex,
    tau: Score,
    restrict_to: Option<&[usize]>,
) -> MatchGrid {
    let mut occurrences = Vec::new();
    let queried: Vec<usize> = match restrict_to {
        Some(set) => set.to_vec(),
        None => (0..entity.tokens.len()).collect(),
    };
    for j in queried {
        let tok = &entity.tokens[j];
        match index.token_id(tok) {
            Some(id) => {
                for &(pos, sim) in matches.positions_of(id) {
                    occurrences.push(MatchOccurrence {
                        doc_pos: pos,
                        entity_token_idx: j,
                        sim,
                    });
                }
            }
            // entity not drawn from the indexed dictionary; scan directly
            None => {
                for (pos, dt) in doc.tokens.iter().enumerate() {
                    if let Some(sim) =
                        edit_similarity_at_least::<Score>(dt.as_str(), tok.as_str(), tau)
                    {
                        occurrences.push(MatchOccurrence {
                            doc_pos: pos,
                            entity_token_idx: j,
                            sim,
                        });
                    }
                }
            }
        }
    }
    occurrences.sort_by_key(|o| (o.doc_pos, o.entity_token_idx));
    MatchGrid { occurrences }
}
