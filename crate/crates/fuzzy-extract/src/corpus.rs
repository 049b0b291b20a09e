//! Tokenization, dictionary/document ingestion and the IDF weight model.
//!
//! The dictionary is the only corpus the weights are derived from: documents
//! are unknown ahead of time, so a token's "document frequency" is the number
//! of entities that contain it.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::{real, Real};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("empty dictionary")]
    EmptyDictionary,
    #[error("empty token")]
    EmptyToken,
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad document record on line {line}: {source}")]
    BadRecord {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// A normalized token: lowercased, non-empty, no whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token(String);

impl Token {
    pub fn new(text: impl Into<String>) -> Result<Self, CorpusError> {
        let text: String = text.into();
        if text.is_empty() || text.chars().any(char::is_whitespace) {
            return Err(CorpusError::EmptyToken);
        }
        Ok(Token(text.to_lowercase()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Number of characters, the unit the edit similarity is defined over.
    pub fn char_len(&self) -> usize {
        self.0.chars().count()
    }
}

impl std::fmt::Display for Token {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Dictionary entity id; the 1-based line number of the dictionary file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityId(pub u32);

impl std::fmt::Display for EntityId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// A dictionary record as an ordered token sequence.
#[derive(Debug, Clone)]
pub struct Entity {
    pub id: EntityId,
    pub tokens: Vec<Token>,
}

/// A document as an ordered token sequence plus per-token character offsets
/// `(start, end)` into the raw text (`end` exclusive).
#[derive(Debug, Clone)]
pub struct Document {
    pub id: String,
    pub tokens: Vec<Token>,
    pub offsets: Vec<(usize, usize)>,
}

impl Document {
    pub fn from_text(id: impl Into<String>, text: &str) -> Self {
        let (tokens, offsets) = tokenize(text);
        Document {
            id: id.into(),
            tokens,
            offsets,
        }
    }
}

/// Splits on runs of non-alphanumeric characters and lowercases. Offsets are
/// character positions into the raw text.
pub fn tokenize(raw: &str) -> (Vec<Token>, Vec<(usize, usize)>) {
    let mut tokens = Vec::new();
    let mut offsets = Vec::new();
    let mut cur = String::new();
    let mut start = 0usize;
    for (pos, ch) in raw.chars().enumerate() {
        if ch.is_alphanumeric() {
            if cur.is_empty() {
                start = pos;
            }
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            tokens.push(Token(std::mem::take(&mut cur)));
            offsets.push((start, pos));
        }
    }
    if !cur.is_empty() {
        let end = raw.chars().count();
        tokens.push(Token(cur));
        offsets.push((start, end));
    }
    (tokens, offsets)
}

/// Per-token document frequencies over the dictionary.
///
/// `idf(t) = ln(N / (N_t + 1))`, clamped at zero so that every weight
/// derived from it stays nonnegative. A token absent from the dictionary
/// gets `N_t = 0`, i.e. `idf = ln N`.
#[derive(Debug, Clone)]
pub struct IdfModel {
    entity_count: usize,
    doc_freq: HashMap<String, usize>,
}

impl IdfModel {
    pub fn entity_count(&self) -> usize {
        self.entity_count
    }

    pub fn doc_freq(&self, token: &Token) -> usize {
        self.doc_freq.get(token.as_str()).copied().unwrap_or(0)
    }

    pub fn idf<F: Real>(&self, token: &Token) -> F {
        let n = self.entity_count as f64;
        let nt = self.doc_freq(token) as f64;
        real::<F>((n / (nt + 1.0)).ln().max(0.0))
    }
}

/// Counts are per entity: an entity contributes once to a token's frequency
/// regardless of how many times the token repeats inside it.
pub fn build_idf_model(dictionary: &[Entity]) -> Result<IdfModel, CorpusError> {
    if dictionary.is_empty() {
        return Err(CorpusError::EmptyDictionary);
    }
    let mut doc_freq: HashMap<String, usize> = HashMap::new();
    let mut seen: Vec<&str> = Vec::new();
    for entity in dictionary {
        seen.clear();
        for tok in &entity.tokens {
            if !seen.contains(&tok.as_str()) {
                seen.push(tok.as_str());
                *doc_freq.entry(tok.as_str().to_owned()).or_insert(0) += 1;
            }
        }
    }
    Ok(IdfModel {
        entity_count: dictionary.len(),
        doc_freq,
    })
}

/// A token sequence with its IDF values and normalized weights.
///
/// Weights are `idf(t) / T_idf` and sum to one whenever the total IDF is
/// positive. If every IDF is zero the weights degenerate to uniform
/// `1/|tokens|` so downstream bound derivations keep a unit total weight.
/// Each occurrence of a repeated token carries its own IDF copy.
#[derive(Debug, Clone)]
pub struct WeightedTokenSet<F> {
    pub tokens: Vec<Token>,
    pub idf_values: Vec<F>,
    pub total_idf: F,
    pub weights: Vec<F>,
}

impl<F: Real> WeightedTokenSet<F> {
    pub fn from_idfs(tokens: Vec<Token>, idf_values: Vec<F>) -> Self {
        debug_assert_eq!(tokens.len(), idf_values.len());
        let total_idf: F = idf_values.iter().copied().sum();
        let weights = if total_idf > F::zero() {
            idf_values.iter().map(|&v| v / total_idf).collect()
        } else {
            let uniform = F::one() / real::<F>(tokens.len() as f64);
            vec![uniform; tokens.len()]
        };
        WeightedTokenSet {
            tokens,
            idf_values,
            total_idf,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Total weight of a subset of token positions.
    pub fn subset_weight(&self, positions: impl IntoIterator<Item = usize>) -> F {
        positions.into_iter().map(|i| self.weights[i]).sum()
    }
}

/// Builds the weighted view of a token sequence under a dictionary model.
pub fn weigh<F: Real>(tokens: &[Token], model: &IdfModel) -> WeightedTokenSet<F> {
    let idfs = tokens.iter().map(|t| model.idf(t)).collect();
    WeightedTokenSet::from_idfs(tokens.to_vec(), idfs)
}

/// One entity per line; the 1-based line number is the entity id. Blank
/// lines and lines with no alphanumeric content are skipped but still
/// consume an id so line numbers stay stable.
pub fn load_dictionary(path: &Path) -> Result<Vec<Entity>, CorpusError> {
    let file = fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut entities = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let (tokens, _) = tokenize(&line);
        if !tokens.is_empty() {
            entities.push(Entity {
                id: EntityId(lineno as u32 + 1),
                tokens,
            });
        }
    }
    if entities.is_empty() {
        return Err(CorpusError::EmptyDictionary);
    }
    Ok(entities)
}

#[derive(Deserialize)]
struct DocRecord {
    id: String,
    text: String,
}

/// Documents come either as a directory of `.txt` files (file stem is the
/// document id) or as a JSON-lines file of `{"id", "text"}` records.
pub fn load_documents(path: &Path) -> Result<Vec<Document>, CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut docs = Vec::new();
    if path.is_dir() {
        let mut paths: Vec<_> = fs::read_dir(path)
            .map_err(io_err)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "txt"))
            .collect();
        paths.sort();
        for p in paths {
            let text = fs::read_to_string(&p).map_err(|source| CorpusError::Io {
                path: p.display().to_string(),
                source,
            })?;
            let id = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            docs.push(Document::from_text(id, &text));
        }
    } else {
        let file = fs::File::open(path).map_err(io_err)?;
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| CorpusError::Io {
                path: path.display().to_string(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: DocRecord = serde_json::from_str(&line).map_err(|source| {
                CorpusError::BadRecord {
                    line: lineno + 1,
                    source,
                }
            })?;
            docs.push(Document::from_text(rec.id, &rec.text));
        }
    }
    Ok(docs)
}
