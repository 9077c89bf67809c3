//! Item corpora and the tag-search oracle abstraction.
//!
//! A corpus is a list of `(id, tags, features-or-score)` records plus the
//! inverted tag index; the oracle answers a tag query with one not-yet-seen
//! item for that tag together with the item's full tag set.

mod oracle;
mod scorer;
mod synth;

pub use oracle::{Oracle, OracleError, OracleSession, QueryOutcome, QueryResult};
pub use scorer::{read_vector_file, BlackBoxFn, EvalError, ScorerConfig, ScorerError, ScorerKind};
pub use synth::{make_synthetic_env, write_synth_files, SynthConfig, SynthError, SynthFiles, SyntheticEnv};

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate id: {id}")]
    DuplicateId { id: String },
    #[error("empty tag set: {id}")]
    EmptyTagSet { id: String },
    #[error("inconsistent feature length for {id} (expected {expected}, found {found})")]
    InconsistentFeatureLength { id: String, expected: usize, found: usize },
    #[error("record {id} must carry exactly one of `features` or `score`")]
    BadPayload { id: String },
    #[error("record {id} mixes payload kinds with the rest of the corpus")]
    MixedPayload { id: String },
    #[error("non-finite value in record {id}")]
    NonFinite { id: String },
    #[error("empty corpus")]
    Empty,
}

/// What a record carries for scoring: a feature vector for linear/kernel
/// black boxes, or a precomputed score for table-lookup environments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Payload {
    Features(Vec<f64>),
    Score(f64),
}

impl Payload {
    pub fn features(&self) -> Option<&[f64]> {
        match self {
            Payload::Features(v) => Some(v),
            Payload::Score(_) => None,
        }
    }

    pub fn score(&self) -> Option<f64> {
        match self {
            Payload::Features(_) => None,
            Payload::Score(s) => Some(*s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItemRecord {
    pub id: String,
    /// Deduplicated, in file order. Never empty.
    pub tags: Vec<String>,
    pub payload: Payload,
}

/// On-disk line shape: `{"id": ..., "tags": [...], "features": [...]}` or
/// `{"id": ..., "tags": [...], "score": ...}`.
#[derive(Serialize, Deserialize)]
struct RawRecord {
    id: String,
    tags: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    features: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    items: Vec<ItemRecord>,
    /// Inverted index: tag -> indices into `items`, ascending.
    tag_index: BTreeMap<String, Vec<usize>>,
    /// 0 for score-payload corpora.
    feature_dim: usize,
}

impl Corpus {
    /// Validates invariants and builds the inverted index. Item order is
    /// preserved.
    pub fn from_items(raw: Vec<ItemRecord>) -> Result<Self, CorpusError> {
        if raw.is_empty() {
            return Err(CorpusError::Empty);
        }
        let mut seen_ids: HashMap<String, ()> = HashMap::with_capacity(raw.len());
        let mut tag_index: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut feature_dim: Option<usize> = None;
        let mut score_payloads = false;
        let mut items = Vec::with_capacity(raw.len());
        for (idx, mut item) in raw.into_iter().enumerate() {
            if seen_ids.insert(item.id.clone(), ()).is_some() {
                return Err(CorpusError::DuplicateId { id: item.id });
            }
            dedup_preserving_order(&mut item.tags);
            if item.tags.is_empty() {
                return Err(CorpusError::EmptyTagSet { id: item.id });
            }
            match &item.payload {
                Payload::Features(v) => {
                    if score_payloads {
                        return Err(CorpusError::MixedPayload { id: item.id });
                    }
                    if v.iter().any(|x| !x.is_finite()) {
                        return Err(CorpusError::NonFinite { id: item.id });
                    }
                    match feature_dim {
                        None => feature_dim = Some(v.len()),
                        Some(d) if d != v.len() => {
                            return Err(CorpusError::InconsistentFeatureLength {
                                id: item.id,
                                expected: d,
                                found: v.len(),
                            });
                        }
                        Some(_) => {}
                    }
                }
                Payload::Score(s) => {
                    if feature_dim.is_some() {
                        return Err(CorpusError::MixedPayload { id: item.id });
                    }
                    score_payloads = true;
                    if !s.is_finite() {
                        return Err(CorpusError::NonFinite { id: item.id });
                    }
                }
            }
            for tag in &item.tags {
                match tag_index.entry(tag.clone()) {
                    Entry::Vacant(e) => {
                        e.insert(vec![idx]);
                    }
                    Entry::Occupied(mut e) => e.get_mut().push(idx),
                }
            }
            items.push(item);
        }
        Ok(Self { items, tag_index, feature_dim: feature_dim.unwrap_or(0) })
    }

    /// Loads line-delimited JSON records (UTF-8, one object per line).
    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_reader(BufReader::new(file))
    }

    pub fn from_reader(reader: impl BufRead) -> Result<Self, CorpusError> {
        let mut raw = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|source| CorpusError::Io {
                path: format!("line {line_no}"),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let record: RawRecord =
                serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
                    line: line_no,
                    message: e.to_string(),
                })?;
            let payload = match (record.features, record.score) {
                (Some(f), None) => Payload::Features(f),
                (None, Some(s)) => Payload::Score(s),
                _ => return Err(CorpusError::BadPayload { id: record.id }),
            };
            raw.push(ItemRecord { id: record.id, tags: record.tags, payload });
        }
        Self::from_items(raw)
    }

    pub fn write_jsonl(&self, mut writer: impl Write) -> std::io::Result<()> {
        for item in &self.items {
            let (features, score) = match &item.payload {
                Payload::Features(f) => (Some(f.clone()), None),
                Payload::Score(s) => (None, Some(*s)),
            };
            let raw = RawRecord { id: item.id.clone(), tags: item.tags.clone(), features, score };
            serde_json::to_writer(&mut writer, &raw)?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn items(&self) -> &[ItemRecord] {
        &self.items
    }

    pub fn item(&self, idx: usize) -> &ItemRecord {
        &self.items[idx]
    }

    pub fn item_by_id(&self, id: &str) -> Option<&ItemRecord> {
        self.items.iter().find(|item| item.id == id)
    }

    pub fn tag_index(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.tag_index
    }

    /// The tag universe, sorted.
    pub fn tags(&self) -> impl Iterator<Item = &str> {
        self.tag_index.keys().map(String::as_str)
    }

    pub fn tag_count(&self) -> usize {
        self.tag_index.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    /// Maximum number of tags on any single item.
    pub fn t_max(&self) -> usize {
        self.items.iter().map(|item| item.tags.len()).max().unwrap_or(0)
    }

    /// Total `(tag, item)` pairs, i.e. the sum of inverted-index list lengths.
    pub fn tag_occurrences(&self) -> usize {
        self.tag_index.values().map(Vec::len).sum()
    }
}

fn dedup_preserving_order(tags: &mut Vec<String>) {
    let mut seen = HashMap::with_capacity(tags.len());
    tags.retain(|tag| seen.insert(tag.clone(), ()).is_none());
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn items(spec: &[(&str, &[&str])]) -> Vec<ItemRecord> {
        spec.iter()
            .map(|(id, tags)| ItemRecord {
                id: id.to_string(),
                tags: tags.iter().map(|t| t.to_string()).collect(),
                payload: Payload::Score(1.0),
            })
            .collect()
    }

    #[test]
    fn builds_inverted_index() {
        let corpus = Corpus::from_items(items(&[("a", &["cat"]), ("b", &["cat", "dog"])])).unwrap();
        assert_eq!(corpus.tag_index()["cat"], vec![0, 1]);
        assert_eq!(corpus.tag_index()["dog"], vec![1]);
        assert_eq!(corpus.tag_count(), 2);
        assert_eq!(corpus.tag_occurrences(), 3);
        assert_eq!(corpus.t_max(), 2);
    }

    #[test]
    fn rejects_empty_tag_set() {
        let err = Corpus::from_items(items(&[("a", &[])])).unwrap_err();
        assert_eq!(err.to_string(), "empty tag set: a");
    }

    #[test]
    fn rejects_duplicate_ids() {
        let err = Corpus::from_items(items(&[("a", &["x"]), ("a", &["y"])])).unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateId { .. }));
    }

    #[test]
    fn rejects_inconsistent_feature_lengths() {
        let raw = vec![
            ItemRecord { id: "a".into(), tags: vec!["x".into()], payload: Payload::Features(vec![1.0, 2.0]) },
            ItemRecord { id: "b".into(), tags: vec!["x".into()], payload: Payload::Features(vec![1.0]) },
        ];
        let err = Corpus::from_items(raw).unwrap_err();
        assert!(matches!(err, CorpusError::InconsistentFeatureLength { expected: 2, found: 1, .. }));
    }

    #[test]
    fn rejects_mixed_payload_kinds() {
        let raw = vec![
            ItemRecord { id: "a".into(), tags: vec!["x".into()], payload: Payload::Features(vec![1.0]) },
            ItemRecord { id: "b".into(), tags: vec!["x".into()], payload: Payload::Score(0.5) },
        ];
        assert!(matches!(Corpus::from_items(raw), Err(CorpusError::MixedPayload { .. })));
    }

    #[test]
    fn loads_jsonl_and_reports_parse_lines() {
        let good = r#"{"id":"a","tags":["cat"],"score":1.5}
{"id":"b","tags":["cat","dog"],"score":0.5}"#;
        let corpus = Corpus::from_reader(Cursor::new(good)).unwrap();
        assert_eq!(corpus.items().len(), 2);
        assert_eq!(corpus.feature_dim(), 0);

        let bad = "{\"id\":\"a\",\"tags\":[\"cat\"],\"score\":1.5}\nnot json";
        let err = Corpus::from_reader(Cursor::new(bad)).unwrap_err();
        assert!(err.to_string().starts_with("line 2:"));
    }

    #[test]
    fn duplicate_tags_within_record_are_deduplicated() {
        let corpus = Corpus::from_items(items(&[("a", &["cat", "cat", "dog"])])).unwrap();
        assert_eq!(corpus.item(0).tags, vec!["cat", "dog"]);
        assert_eq!(corpus.tag_index()["cat"], vec![0]);
    }

    #[test]
    fn jsonl_round_trips() {
        let src = r#"{"id":"a","tags":["cat"],"features":[1.0,2.0]}
{"id":"b","tags":["dog"],"features":[0.5,-1.0]}"#;
        let corpus = Corpus::from_reader(Cursor::new(src)).unwrap();
        let mut buf = Vec::new();
        corpus.write_jsonl(&mut buf).unwrap();
        let again = Corpus::from_reader(Cursor::new(buf)).unwrap();
        assert_eq!(again.items(), corpus.items());
    }
}
