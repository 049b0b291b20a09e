//! Precision/recall/F1 scoring against labeled ground truth, and a
//! deterministic synthetic corpus generator for end-to-end effectiveness
//! checks.
//!
//! The generator plants dictionary entities between filler tokens and
//! corrupts them under a feasibility gate: a corruption (single-character
//! substitution, or dropping/duplicating the lightest token of an
//! occurrence) is kept only if the corrupted occurrence still scores at
//! least [`CORRUPTION_SCORE_FLOOR`] against its entity. Corruption *flags*
//! are drawn independently per planted token with probability `typo_rate`
//! (so flag counts are binomially testable from the reported stats), while
//! the applied subset is whatever the gate admits.

use std::collections::HashSet;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{weigh, Document, Entity, EntityId, IdfModel, Token, WeightedTokenSet};
use crate::fuzzy_ed::fuzzy_ed_similarity_anchored;
use crate::matcher::{build_token_index, TokenIndex};
use crate::simcore::edit_similarity_at_least;
use crate::pipeline::Extraction;
use crate::Score;

/// One labeled entity occurrence; char offsets into the raw document text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TruthRecord {
    pub doc_id: String,
    pub start_char: usize,
    pub end_char: usize,
    pub entity_id: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalScores {
    pub precision: Score,
    pub recall: Score,
    pub f1: Score,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

/// Exact-span scoring: a prediction is a true positive iff its
/// (doc, char span, entity) triple appears in the truth.
pub fn score_predictions(predictions: &[Extraction], truth: &[TruthRecord]) -> EvalScores {
    let truth_set: HashSet<&TruthRecord> = truth.iter().collect();
    let mut matched: HashSet<&TruthRecord> = HashSet::new();
    let mut tp = 0usize;
    let mut fp = 0usize;
    for p in predictions {
        let key = TruthRecord {
            doc_id: p.doc_id.clone(),
            start_char: p.start_char,
            end_char: p.end_char,
            entity_id: p.entity_id,
        };
        match truth_set.get(&key) {
            Some(&t) => {
                tp += 1;
                matched.insert(t);
            }
            None => fp += 1,
        }
    }
    let fn_ = truth.iter().filter(|t| !matched.contains(t)).count();
    let precision = if tp + fp == 0 {
        0.0
    } else {
        tp as Score / (tp + fp) as Score
    };
    let recall = if tp + fn_ == 0 {
        0.0
    } else {
        tp as Score / (tp + fn_) as Score
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    EvalScores {
        precision,
        recall,
        f1,
        tp,
        fp,
        fn_,
    }
}

/// A corruption survives only if the corrupted occurrence still reaches
/// this anchored FuzzyED score against its entity, keeping every planted
/// span recoverable at delta = 0.95.
pub const CORRUPTION_SCORE_FLOOR: Score = 0.952;

const GEN_TAU: Score = 0.8;

#[derive(Debug, Clone, Copy, Default)]
pub struct GenStats {
    pub planted: usize,
    pub planted_tokens: usize,
    /// Tokens independently flagged for corruption at `typo_rate`.
    pub tokens_flagged: usize,
    pub subs_applied: usize,
    pub drops_applied: usize,
    pub dups_applied: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct GenConfig {
    pub n_docs: usize,
    pub typo_rate: Score,
    pub seed: u64,
    /// Planted occurrences per document, inclusive range.
    pub plants_per_doc: (usize, usize),
    /// Filler tokens between plants, inclusive range.
    pub filler_run: (usize, usize),
}

impl GenConfig {
    pub fn new(n_docs: usize, typo_rate: Score, seed: u64) -> Self {
        GenConfig {
            n_docs,
            typo_rate,
            seed,
            plants_per_doc: (3, 6),
            filler_run: (2, 8),
        }
    }
}

/// A dictionary whose entities are built from long globally-unique "rare"
/// tokens plus, for most entities, one interior token shared by roughly a
/// third of the dictionary. The weight skew makes core-token selection
/// meaningful and keeps single-token corruptions cheap relative to the
/// entity similarity threshold.
pub fn synthesize_dictionary(n_entities: usize, seed: u64) -> Vec<Entity> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x_d1c7_10ba_5eed);
    let glue_pool: Vec<String> = (0..2).map(|_| random_word(&mut rng, 8, 8)).collect();
    let mut seen: HashSet<String> = glue_pool.iter().cloned().collect();
    let mut entities = Vec::with_capacity(n_entities);
    for i in 0..n_entities {
        let n_rare = rng.gen_range(4..=5);
        let mut words: Vec<String> = (0..n_rare)
            .map(|_| loop {
                let w = random_word(&mut rng, 12, 15);
                if seen.insert(w.clone()) {
                    break w;
                }
            })
            .collect();
        if rng.gen_bool(0.7) {
            let glue = glue_pool.choose(&mut rng).unwrap().clone();
            words.insert(words.len() / 2, glue);
        }
        entities.push(Entity {
            id: EntityId(i as u32 + 1),
            tokens: words
                .into_iter()
                .map(|w| Token::new(w).unwrap())
                .collect(),
        });
    }
    entities
}

fn random_word(rng: &mut ChaCha8Rng, min_len: usize, max_len: usize) -> String {
    let len = rng.gen_range(min_len..=max_len);
    (0..len)
        .map(|_| char::from(b'a' + rng.gen_range(0..26u8)))
        .collect()
}

pub fn generate_synthetic_corpus(
    dictionary: &[Entity],
    model: &IdfModel,
    cfg: GenConfig,
) -> (Vec<Document>, Vec<TruthRecord>, GenStats) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let index = build_token_index(dictionary, GEN_TAU);
    let mut stats = GenStats::default();
    let mut docs = Vec::with_capacity(cfg.n_docs);
    let mut truth = Vec::new();

    // character distribution of the dictionary tokens, for realistic filler
    let charset: Vec<char> = dictionary
        .iter()
        .flat_map(|e| e.tokens.iter().flat_map(|t| t.as_str().chars()))
        .collect();

    for d in 0..cfg.n_docs {
        let doc_id = format!("doc{d:05}");
        let mut tokens: Vec<String> = Vec::new();
        // (token range, entity id) of each plant, resolved to chars later
        let mut plants: Vec<(usize, usize, u32)> = Vec::new();

        let n_plants = rng.gen_range(cfg.plants_per_doc.0..=cfg.plants_per_doc.1);
        for p in 0..=n_plants {
            let run = rng.gen_range(cfg.filler_run.0..=cfg.filler_run.1);
            for _ in 0..run {
                tokens.push(filler_token(&mut rng, &charset, &index));
            }
            if p == n_plants {
                break;
            }
            let entity = dictionary.choose(&mut rng).unwrap();
            let planted = corrupt_occurrence(entity, model, cfg.typo_rate, &mut rng, &mut stats);
            let start = tokens.len();
            tokens.extend(planted);
            plants.push((start, tokens.len() - 1, entity.id.0));
            stats.planted += 1;
        }

        // join with single spaces; offsets are char positions (all ASCII)
        let mut offsets = Vec::with_capacity(tokens.len());
        let mut at = 0usize;
        for t in &tokens {
            offsets.push((at, at + t.len()));
            at += t.len() + 1;
        }
        let text = tokens.join(" ");
        for &(s, e, entity_id) in &plants {
            truth.push(TruthRecord {
                doc_id: doc_id.clone(),
                start_char: offsets[s].0,
                end_char: offsets[e].1,
                entity_id,
            });
        }
        docs.push(Document::from_text(doc_id, &text));
    }
    (docs, truth, stats)
}

/// A filler token that matches no dictionary token at the generator's tau,
/// so it can never become a landmark.
fn filler_token(rng: &mut ChaCha8Rng, charset: &[char], index: &TokenIndex) -> String {
    loop {
        let len = rng.gen_range(6..=12);
        let w: String = (0..len).map(|_| *charset.choose(rng).unwrap()).collect();
        if index.lookup(&w, GEN_TAU).is_empty() {
            return w;
        }
    }
}

/// One planted occurrence of `entity`, corrupted as far as the score gate
/// allows. Corruption flags are drawn first (one per token at `typo_rate`,
/// plus one occurrence-level flag at `typo_rate / 2`), then applied in
/// order while the occurrence still scores above the floor.
fn corrupt_occurrence(
    entity: &Entity,
    model: &IdfModel,
    typo_rate: Score,
    rng: &mut ChaCha8Rng,
    stats: &mut GenStats,
) -> Vec<String> {
    let entity_w = weigh::<Score>(&entity.tokens, model);
    let mut tokens: Vec<String> = entity.tokens.iter().map(|t| t.as_str().to_owned()).collect();

    let flags: Vec<bool> = (0..tokens.len())
        .map(|_| rng.gen_bool(typo_rate))
        .collect();
    stats.planted_tokens += tokens.len();
    stats.tokens_flagged += flags.iter().filter(|&&f| f).count();
    let variant_flag = rng.gen_bool(typo_rate / 2.0);
    let variant_is_drop = rng.gen_bool(0.5);

    let score_of = |tokens: &[String]| -> Score {
        let toks: Vec<Token> = tokens
            .iter()
            .map(|w| Token::new(w.clone()).unwrap())
            .collect();
        // charge each token like the extractor: the idf of its
        // best-matching entity token, its own dictionary idf otherwise
        let idfs: Vec<Score> = toks
            .iter()
            .map(|w| {
                let mut best: Option<(Score, usize)> = None;
                for (j, et) in entity.tokens.iter().enumerate() {
                    if let Some(sim) =
                        edit_similarity_at_least::<Score>(w.as_str(), et.as_str(), GEN_TAU)
                    {
                        if best.is_none_or(|(bs, _)| sim > bs) {
                            best = Some((sim, j));
                        }
                    }
                }
                match best {
                    Some((_, j)) => entity_w.idf_values[j],
                    None => model.idf(w),
                }
            })
            .collect();
        let window = WeightedTokenSet::from_idfs(toks, idfs);
        fuzzy_ed_similarity_anchored(&entity_w, &window, GEN_TAU)
    };

    for (i, &flag) in flags.iter().enumerate() {
        if !flag {
            continue;
        }
        let orig = tokens[i].clone();
        let chars: Vec<char> = orig.chars().collect();
        let at = rng.gen_range(0..chars.len());
        let mut replacement = chars[at];
        while replacement == chars[at] {
            replacement = char::from(b'a' + rng.gen_range(0..26u8));
        }
        let mut mutated = chars;
        mutated[at] = replacement;
        tokens[i] = mutated.into_iter().collect();
        if score_of(&tokens) >= CORRUPTION_SCORE_FLOOR {
            stats.subs_applied += 1;
        } else {
            tokens[i] = orig;
        }
    }

    if variant_flag && tokens.len() > 1 {
        // drop or duplicate the lightest token of the occurrence
        let lightest = (0..tokens.len())
            .min_by(|&a, &b| {
                entity_w.weights[a]
                    .partial_cmp(&entity_w.weights[b])
                    .unwrap()
                    .then(a.cmp(&b))
            })
            .unwrap();
        let mut trial = tokens.clone();
        if variant_is_drop {
            trial.remove(lightest);
        } else {
            trial.insert(lightest + 1, trial[lightest].clone());
        }
        // never move a corrupted boundary: the span must keep starting and
        // ending on tokens that match the entity
        let boundary_safe = lightest != 0 && lightest != tokens.len() - 1;
        if boundary_safe && score_of(&trial) >= CORRUPTION_SCORE_FLOOR {
            if variant_is_drop {
                stats.drops_applied += 1;
            } else {
                stats.dups_applied += 1;
            }
            tokens = trial;
        }
    }
    tokens
}
