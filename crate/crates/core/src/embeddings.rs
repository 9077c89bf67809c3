//! Word-vector loading and tag featurization.
//!
//! A tag is decomposed into runs of alphabetic characters; its feature
//! vector is the mean of the word vectors found in the table. Words
//! missing from the vocabulary are skipped, and a tag with no known
//! words embeds as the zero vector (it stays selectable, its confidence
//! term is just zero).

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("empty embedding file")]
    Empty,
    #[error("dimension mismatch at line {line} (expected {expected}, found {found})")]
    DimensionMismatch { line: usize, expected: usize, found: usize },
    #[error("unparsable float {token:?} at line {line}")]
    BadFloat { line: usize, token: String },
    #[error("non-finite component at line {line}")]
    NonFinite { line: usize },
    #[error("line {line} has no vector components")]
    NoComponents { line: usize },
}

/// Immutable word -> vector map with a fixed dimension.
///
/// Keys are stored lowercased; lookups fold case the same way.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    entries: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    /// Loads the plain-text format: one record per line, the word first,
    /// then `d` space-separated decimal floats. `d` is inferred from the
    /// first line unless `expected_dim` pins it.
    pub fn load(path: impl AsRef<Path>, expected_dim: Option<usize>) -> Result<Self, EmbeddingError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| EmbeddingError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_reader(BufReader::new(file), expected_dim)
    }

    pub fn from_reader(reader: impl BufRead, expected_dim: Option<usize>) -> Result<Self, EmbeddingError> {
        let mut dim = expected_dim;
        let mut entries: HashMap<String, Vec<f64>> = HashMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|source| EmbeddingError::Io {
                path: format!("line {line_no}"),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let word = fields.next().expect("non-empty line has a first field");
            let mut vector = Vec::with_capacity(dim.unwrap_or(0));
            for token in fields {
                let value: f64 = token.parse().map_err(|_| EmbeddingError::BadFloat {
                    line: line_no,
                    token: token.to_string(),
                })?;
                if !value.is_finite() {
                    return Err(EmbeddingError::NonFinite { line: line_no });
                }
                vector.push(value);
            }
            if vector.is_empty() {
                return Err(EmbeddingError::NoComponents { line: line_no });
            }
            match dim {
                None => dim = Some(vector.len()),
                Some(d) if d != vector.len() => {
                    return Err(EmbeddingError::DimensionMismatch {
                        line: line_no,
                        expected: d,
                        found: vector.len(),
                    });
                }
                Some(_) => {}
            }
            // Duplicate words keep the first occurrence.
            entries.entry(word.to_lowercase()).or_insert(vector);
        }
        match dim {
            Some(dim) if !entries.is_empty() => Ok(Self { dim, entries }),
            _ => Err(EmbeddingError::Empty),
        }
    }

    /// Builds a table directly from `(word, vector)` pairs (synthetic
    /// environments). Vectors must all have length `dim`.
    pub fn from_entries(
        dim: usize,
        pairs: impl IntoIterator<Item = (String, Vec<f64>)>,
    ) -> Result<Self, EmbeddingError> {
        let mut entries = HashMap::new();
        for (idx, (word, vector)) in pairs.into_iter().enumerate() {
            if vector.len() != dim {
                return Err(EmbeddingError::DimensionMismatch {
                    line: idx + 1,
                    expected: dim,
                    found: vector.len(),
                });
            }
            if vector.iter().any(|v| !v.is_finite()) {
                return Err(EmbeddingError::NonFinite { line: idx + 1 });
            }
            entries.entry(word.to_lowercase()).or_insert(vector);
        }
        if entries.is_empty() {
            return Err(EmbeddingError::Empty);
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        if let Some(v) = self.entries.get(word) {
            return Some(v.as_slice());
        }
        self.entries.get(&word.to_lowercase()).map(Vec::as_slice)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.get(word).is_some()
    }
}

/// A featurized tag: the mean of its in-vocabulary word vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct TagEmbedding {
    pub tag: String,
    pub vector: Vec<f64>,
    /// Tokens not found in the table (counted with multiplicity).
    pub oov_count: usize,
    /// Tokens produced by `tokenize_tag`.
    pub word_count: usize,
}

impl TagEmbedding {
    pub fn is_zero(&self) -> bool {
        self.vector.iter().all(|v| *v == 0.0)
    }
}

/// Splits a tag into maximal runs of alphabetic characters, lowercased.
/// Digits, punctuation, and whitespace are separators and are dropped.
pub fn tokenize_tag(tag: &str) -> Vec<String> {
    tag.split(|c: char| !c.is_alphabetic())
        .filter(|run| !run.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Mean of the found-word vectors; all-OOV (or wordless) tags embed as the
/// zero vector. Found words are summed in sorted order so tags whose word
/// bags are permutations of each other embed bit-identically.
pub fn embed_tag(tag: &str, table: &EmbeddingTable) -> TagEmbedding {
    let tokens = tokenize_tag(tag);
    let word_count = tokens.len();
    let mut found: Vec<&str> = tokens
        .iter()
        .map(String::as_str)
        .filter(|w| table.contains(w))
        .collect();
    found.sort_unstable();
    let oov_count = word_count - found.len();
    let mut vector = vec![0.0; table.dim()];
    for word in &found {
        let wv = table.get(word).expect("filtered to in-vocabulary words");
        for (acc, component) in vector.iter_mut().zip(wv) {
            *acc += component;
        }
    }
    if !found.is_empty() {
        let n = found.len() as f64;
        for component in &mut vector {
            *component /= n;
        }
    }
    TagEmbedding { tag: tag.to_string(), vector, oov_count, word_count }
}

/// Fraction of tags with at least one in-vocabulary word (the embedding
/// coverage statistic reported by corpus validation).
pub fn tag_coverage<'a>(tags: impl Iterator<Item = &'a str>, table: &EmbeddingTable) -> f64 {
    let mut total = 0usize;
    let mut covered = 0usize;
    for tag in tags {
        total += 1;
        if tokenize_tag(tag).iter().any(|w| table.contains(w)) {
            covered += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        covered as f64 / total as f64
    }
}

/// Per-trial memoizing wrapper: the same tag recurs across iterations and
/// its feature vector never changes.
#[derive(Debug, Clone)]
pub struct TagEmbedder {
    table: Arc<EmbeddingTable>,
    cache: HashMap<String, Arc<TagEmbedding>>,
}

impl TagEmbedder {
    pub fn new(table: Arc<EmbeddingTable>) -> Self {
        Self { table, cache: HashMap::new() }
    }

    pub fn table(&self) -> &Arc<EmbeddingTable> {
        &self.table
    }

    pub fn dim(&self) -> usize {
        self.table.dim()
    }

    pub fn embed(&mut self, tag: &str) -> Arc<TagEmbedding> {
        if let Some(hit) = self.cache.get(tag) {
            return Arc::clone(hit);
        }
        let fresh = Arc::new(embed_tag(tag, &self.table));
        self.cache.insert(tag.to_string(), Arc::clone(&fresh));
        fresh
    }
}
