//! The extraction loop: match tokens, produce candidate windows, filter,
//! measure, and assemble the output records.
//!
//! Window scoring is anchored: every token of a candidate window is part
//! of the scored sub-string, with weights normalized over that window.
//! A matched window position is charged the IDF of its best-matching
//! entity token, every other position its own dictionary IDF — the same
//! convention the spanning bounds are derived under. Both candidate
//! producers feed the same scorer, so they yield identical extraction
//! sets; the spanning producer emits one maximal window per left landmark
//! and the measuring stage expands it into the left-anchored sub-windows
//! ending at each inner landmark.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::candidates_enum::{
    enumerate_candidates, matching_length_bounds, CandidateWindow, MatchingLengthBounds,
};
use crate::candidates_span::{
    build_position_infos, produce_candidates_spanning, select_core_tokens, CoreTokenSet,
};
use crate::corpus::{build_idf_model, weigh, CorpusError, Document, Entity, IdfModel, WeightedTokenSet};
use crate::filters::{fed_lower_bound_filter, overlap_weight_filter, FilterDecision};
use crate::fuzzy_ed::fuzzy_ed_similarity_anchored_with;
use crate::fuzzy_jaccard::fuzzy_jaccard_similarity_with;
use crate::matcher::{build_token_index, find_matched_tokens_cached, DocMatches, MatchGrid, TokenIndex};
use crate::{Score, Similarity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExtractMode {
    FedEnum,
    FedSpan,
    FjEnum,
    FjSpan,
    /// Spanning without core tokens: seeds from every matched position.
    FedAll,
}

impl ExtractMode {
    pub fn similarity(self) -> Similarity {
        match self {
            ExtractMode::FedEnum | ExtractMode::FedSpan | ExtractMode::FedAll => Similarity::FuzzyEd,
            ExtractMode::FjEnum | ExtractMode::FjSpan => Similarity::FuzzyJaccard,
        }
    }

    pub fn uses_spanning(self) -> bool {
        matches!(
            self,
            ExtractMode::FedSpan | ExtractMode::FjSpan | ExtractMode::FedAll
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ExtractMode::FedEnum => "fed-e",
            ExtractMode::FedSpan => "fed-s",
            ExtractMode::FjEnum => "fj-e",
            ExtractMode::FjSpan => "fj-s",
            ExtractMode::FedAll => "fed-a",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "fed-e" => ExtractMode::FedEnum,
            "fed-s" => ExtractMode::FedSpan,
            "fj-e" => ExtractMode::FjEnum,
            "fj-s" => ExtractMode::FjSpan,
            "fed-a" => ExtractMode::FedAll,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverlapPolicy {
    All,
    BestPerSpan,
}

#[derive(Debug, Clone, Copy)]
pub struct Config {
    pub delta: Score,
    pub tau: Score,
    pub mode: ExtractMode,
    pub core_tokens: bool,
    pub overlap: OverlapPolicy,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            delta: 0.9,
            tau: 0.8,
            mode: ExtractMode::FedSpan,
            core_tokens: true,
            overlap: OverlapPolicy::All,
        }
    }
}

/// One output record; spans are inclusive token positions and half-open
/// character positions into the raw document text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub doc_id: String,
    pub entity_id: u32,
    pub start_char: usize,
    pub end_char: usize,
    pub start_token: usize,
    pub end_token: usize,
    pub score: Score,
    pub mode: String,
}

impl Extraction {
    /// Identity of the extraction for set comparisons (score excluded).
    pub fn key(&self) -> (String, u32, usize, usize) {
        (
            self.doc_id.clone(),
            self.entity_id,
            self.start_token,
            self.end_token,
        )
    }

    pub fn to_json_line(&self) -> String {
        let rounded = (self.score * 1e6).round() / 1e6;
        serde_json::json!({
            "doc_id": self.doc_id,
            "entity_id": self.entity_id,
            "start_char": self.start_char,
            "end_char": self.end_char,
            "start_token": self.start_token,
            "end_token": self.end_token,
            "score": rounded,
            "mode": self.mode,
        })
        .to_string()
    }
}

/// Per-position window charges for one (document, entity) pair: a matched
/// position carries the IDF of its best-matching entity token (ties to
/// the lowest token index), every other position the document token's own
/// dictionary IDF.
pub fn charged_idfs(doc_idfs: &[Score], grid: &MatchGrid, entity_idfs: &[Score]) -> Vec<Score> {
    let mut out = doc_idfs.to_vec();
    let mut best = vec![0.0; doc_idfs.len()];
    for o in &grid.occurrences {
        // occurrences are sorted by token index within a position, so a
        // strict comparison keeps the lowest index on ties
        if o.sim > best[o.doc_pos] {
            best[o.doc_pos] = o.sim;
            out[o.doc_pos] = entity_idfs[o.entity_token_idx];
        }
    }
    out
}

/// Candidate accounting, summed across (document, entity) pairs.
#[derive(Debug, Clone, Copy, Default)]
pub struct Stats {
    /// Windows emitted by the candidate producer.
    pub candidates_produced: u64,
    /// Windows that reached the similarity measurement.
    pub windows_scored: u64,
    pub pruned_overlap: u64,
    pub pruned_fed_bound: u64,
    pub extractions: u64,
}

impl Stats {
    pub fn merge(&mut self, other: &Stats) {
        self.candidates_produced += other.candidates_produced;
        self.windows_scored += other.windows_scored;
        self.pruned_overlap += other.pruned_overlap;
        self.pruned_fed_bound += other.pruned_fed_bound;
        self.extractions += other.extractions;
    }
}

/// Precomputed per-entity artifacts for one configuration.
pub struct EntityArtifacts {
    pub entity: Entity,
    pub weighted: WeightedTokenSet<Score>,
    pub bounds: MatchingLengthBounds,
    pub core: CoreTokenSet,
}

/// Immutable extraction engine shared across worker threads.
pub struct Engine {
    pub cfg: Config,
    pub model: IdfModel,
    pub index: TokenIndex,
    pub entities: Vec<EntityArtifacts>,
}

impl Engine {
    pub fn build(dictionary: Vec<Entity>, cfg: Config) -> Result<Engine, CorpusError> {
        assert!(cfg.delta > 0.0 && cfg.delta <= 1.0, "delta must be in (0, 1]");
        assert!(cfg.tau > 0.0 && cfg.tau <= 1.0, "tau must be in (0, 1]");
        let model = build_idf_model(&dictionary)?;
        let index = build_token_index(&dictionary, cfg.tau);
        let sim = cfg.mode.similarity();
        let use_core = cfg.core_tokens && cfg.mode != ExtractMode::FedAll;
        let entities = dictionary
            .into_iter()
            .map(|entity| {
                let weighted = weigh::<Score>(&entity.tokens, &model);
                let bounds = matching_length_bounds(&weighted, cfg.delta, sim);
                let core = if use_core {
                    select_core_tokens(&weighted, cfg.delta, sim)
                } else {
                    CoreTokenSet::all(entity.tokens.len())
                };
                EntityArtifacts {
                    entity,
                    weighted,
                    bounds,
                    core,
                }
            })
            .collect();
        Ok(Engine {
            cfg,
            model,
            index,
            entities,
        })
    }

    pub fn extract_document(&self, doc: &Document) -> (Vec<Extraction>, Stats) {
        let mut out = Vec::new();
        let mut stats = Stats::default();
        if doc.tokens.is_empty() {
            return (out, stats);
        }
        let matches = DocMatches::build(doc, &self.index, self.cfg.tau);
        let doc_idfs: Vec<Score> = doc.tokens.iter().map(|t| self.model.idf(t)).collect();
        for art in &self.entities {
            let grid = find_matched_tokens_cached(
                &matches,
                doc,
                &art.entity,
                &self.index,
                self.cfg.tau,
                None,
            );
            if grid.is_empty() {
                continue;
            }
            self.extract_entity(doc, &doc_idfs, art, &grid, &mut out, &mut stats);
        }
        (out, stats)
    }

    fn extract_entity(
        &self,
        doc: &Document,
        doc_idfs: &[Score],
        art: &EntityArtifacts,
        grid: &MatchGrid,
        out: &mut Vec<Extraction>,
        stats: &mut Stats,
    ) {
        let sim_mode = self.cfg.mode.similarity();
        let candidates: Vec<CandidateWindow> = if self.cfg.mode.uses_spanning() {
            // no core match anywhere: spanning has no seed, skip the
            // per-position setup entirely
            if !grid
                .occurrences
                .iter()
                .any(|o| art.core.is_core(o.entity_token_idx))
            {
                return;
            }
            let infos = build_position_infos(doc_idfs, grid, &art.weighted.idf_values, &art.core);
            produce_candidates_spanning(grid, &infos, &art.weighted, self.cfg.delta, sim_mode)
        } else {
            enumerate_candidates(grid, &art.bounds)
        };
        stats.candidates_produced += candidates.len() as u64;
        if candidates.is_empty() {
            return;
        }
        let charged = charged_idfs(doc_idfs, grid, &art.weighted.idf_values);

        for cand in &candidates {
            if self.cfg.mode.uses_spanning() {
                // expand the maximal window into its left-anchored
                // sub-windows ending at each inner landmark
                let landmarks: Vec<usize> = {
                    let mut v: Vec<usize> = grid.occurrences[cand.occ_start..cand.occ_end]
                        .iter()
                        .map(|o| o.doc_pos)
                        .collect();
                    v.dedup();
                    v
                };
                for (i, &end) in landmarks.iter().enumerate() {
                    let count = i + 1;
                    if !art.bounds.contains(count) {
                        continue;
                    }
                    let occ_end = grid.occurrences.partition_point(|o| o.doc_pos <= end);
                    let sub = CandidateWindow {
                        start_pos: cand.start_pos,
                        end_pos: end,
                        occ_start: cand.occ_start,
                        occ_end,
                    };
                    self.measure_window(doc, &charged, art, grid, &sub, out, stats);
                }
            } else {
                self.measure_window(doc, &charged, art, grid, cand, out, stats);
            }
        }
    }

    fn measure_window(
        &self,
        doc: &Document,
        charged: &[Score],
        art: &EntityArtifacts,
        grid: &MatchGrid,
        cand: &CandidateWindow,
        out: &mut Vec<Extraction>,
        stats: &mut Stats,
    ) {
        let sim_mode = self.cfg.mode.similarity();
        // best eds per entity token over the window, for the filters
        let mut m = vec![0.0; art.entity.tokens.len()];
        for o in &grid.occurrences[cand.occ_start..cand.occ_end] {
            if o.sim > m[o.entity_token_idx] {
                m[o.entity_token_idx] = o.sim;
            }
        }
        let matched: Vec<usize> = (0..m.len()).filter(|&i| m[i] > 0.0).collect();
        if overlap_weight_filter(&art.weighted, &matched, self.cfg.delta, sim_mode)
            == FilterDecision::Prune
        {
            stats.pruned_overlap += 1;
            return;
        }
        if sim_mode == Similarity::FuzzyEd
            && fed_lower_bound_filter(&art.weighted, &m, self.cfg.delta) == FilterDecision::Prune
        {
            stats.pruned_fed_bound += 1;
            return;
        }

        stats.windows_scored += 1;
        let score =
            self.score_window(doc, charged, &art.weighted, grid, cand.start_pos, cand.end_pos);
        if score >= self.cfg.delta {
            stats.extractions += 1;
            out.push(Extraction {
                doc_id: doc.id.clone(),
                entity_id: art.entity.id.0,
                start_char: doc.offsets[cand.start_pos].0,
                end_char: doc.offsets[cand.end_pos].1,
                start_token: cand.start_pos,
                end_token: cand.end_pos,
                score,
                mode: self.cfg.mode.as_str().to_owned(),
            });
        }
    }

    /// Anchored two-level similarity of one window under the engine's
    /// similarity function, with window weights normalized in place.
    /// `charged` is the per-position charge from [`charged_idfs`] for the
    /// same entity; the pair similarities come from the match grid instead
    /// of being recomputed per window.
    pub fn score_window(
        &self,
        doc: &Document,
        charged: &[Score],
        entity: &WeightedTokenSet<Score>,
        grid: &MatchGrid,
        start: usize,
        end: usize,
    ) -> Score {
        let window = WeightedTokenSet::from_idfs(
            doc.tokens[start..=end].to_vec(),
            charged[start..=end].to_vec(),
        );
        let n = window.len();
        let mut sims: Vec<Option<Score>> = vec![None; entity.len() * n];
        let occ_start = grid.occurrences.partition_point(|o| o.doc_pos < start);
        let occ_end = grid.occurrences.partition_point(|o| o.doc_pos <= end);
        for o in &grid.occurrences[occ_start..occ_end] {
            sims[o.entity_token_idx * n + (o.doc_pos - start)] = Some(o.sim);
        }
        match self.cfg.mode.similarity() {
            Similarity::FuzzyEd => {
                fuzzy_ed_similarity_anchored_with(entity, &window, &sims)
            }
            Similarity::FuzzyJaccard => {
                fuzzy_jaccard_similarity_with(entity, &window, &sims)
            }
        }
    }

    /// Reference extractor: scores every window whose boundaries are
    /// matched positions, with no bounds or filters. The ground truth the
    /// candidate producers are checked against.
    pub fn exhaustive_document(&self, doc: &Document) -> Vec<Extraction> {
        let mut out = Vec::new();
        if doc.tokens.is_empty() {
            return out;
        }
        let matches = DocMatches::build(doc, &self.index, self.cfg.tau);
        let doc_idfs: Vec<Score> = doc.tokens.iter().map(|t| self.model.idf(t)).collect();
        for art in &self.entities {
            let grid = find_matched_tokens_cached(
                &matches,
                doc,
                &art.entity,
                &self.index,
                self.cfg.tau,
                None,
            );
            let charged = charged_idfs(&doc_idfs, &grid, &art.weighted.idf_values);
            let positions = grid.matched_positions();
            for (a_i, &a) in positions.iter().enumerate() {
                for &b in &positions[a_i..] {
                    let score = self.score_window(doc, &charged, &art.weighted, &grid, a, b);
                    if score >= self.cfg.delta {
                        out.push(Extraction {
                            doc_id: doc.id.clone(),
                            entity_id: art.entity.id.0,
                            start_char: doc.offsets[a].0,
                            end_char: doc.offsets[b].1,
                            start_token: a,
                            end_token: b,
                            score,
                            mode: self.cfg.mode.as_str().to_owned(),
                        });
                    }
                }
            }
        }
        sort_extractions(&mut out);
        out
    }

    pub fn extract_corpus(&self, docs: &[Document]) -> (Vec<Extraction>, Stats) {
        let results: Vec<(Vec<Extraction>, Stats)> = docs
            .par_iter()
            .map(|doc| self.extract_document(doc))
            .collect();
        let mut out = Vec::new();
        let mut stats = Stats::default();
        for (mut ex, st) in results {
            out.append(&mut ex);
            stats.merge(&st);
        }
        sort_extractions(&mut out);
        let out = resolve_overlaps(out, self.cfg.overlap);
        (out, stats)
    }
}

pub fn sort_extractions(extractions: &mut [Extraction]) {
    extractions.sort_by(|a, b| {
        (&a.doc_id, a.start_token, a.end_token, a.entity_id)
            .cmp(&(&b.doc_id, b.start_token, b.end_token, b.entity_id))
    });
}

/// `All` passes through; `BestPerSpan` keeps, among extractions with
/// overlapping token spans in the same document, the highest score, ties
/// broken by longer span then lower entity id.
pub fn resolve_overlaps(extractions: Vec<Extraction>, policy: OverlapPolicy) -> Vec<Extraction> {
    if policy == OverlapPolicy::All {
        return extractions;
    }
    let mut ranked: Vec<Extraction> = extractions;
    ranked.sort_by(|a, b| {
        a.doc_id
            .cmp(&b.doc_id)
            .then(b.score.partial_cmp(&a.score).unwrap())
            .then((b.end_token - b.start_token).cmp(&(a.end_token - a.start_token)))
            .then(a.entity_id.cmp(&b.entity_id))
            .then(a.start_token.cmp(&b.start_token))
    });
    let mut kept: Vec<Extraction> = Vec::new();
    for ex in ranked {
        let clashes = kept.iter().any(|k| {
            k.doc_id == ex.doc_id && k.start_token <= ex.end_token && ex.start_token <= k.end_token
        });
        if !clashes {
            kept.push(ex);
        }
    }
    sort_extractions(&mut kept);
    kept
}

/// Convenience wrapper used by the CLI and tests.
pub fn build_engine_from_lines(lines: &[&str], cfg: Config) -> Result<Engine, CorpusError> {
    let entities: Vec<Entity> = lines
        .iter()
        .enumerate()
        .filter_map(|(i, line)| {
            let (tokens, _) = crate::corpus::tokenize(line);
            (!tokens.is_empty()).then(|| Entity {
                id: crate::corpus::EntityId(i as u32 + 1),
                tokens,
            })
        })
        .collect();
    Engine::build(entities, cfg)
}
