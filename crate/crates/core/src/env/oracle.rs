//! The tag-search oracle: query a tag, get back one item (uniformly at
//! random, without replacement per tag) plus its full tag set.

use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{Corpus, Payload};

/// Session RNG stream id; keeps oracle draws decoupled from policy draws
/// that share the same trial seed.
const ORACLE_STREAM: u64 = 0xA1;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("oracle transport failure: {0}")]
    Transport(String),
    #[error("oracle protocol violation: {0}")]
    Protocol(String),
}

/// One oracle reply: the item and its unmodified corpus tag set.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub item_id: String,
    pub tags: Vec<String>,
    pub payload: Payload,
}

#[derive(Debug, Clone, PartialEq)]
pub enum QueryOutcome {
    Result(QueryResult),
    /// Unknown tag, or every item for the tag has already been returned in
    /// this session. The call still counts.
    Exhausted,
}

/// The oracle contract shared by the in-process simulator and the HTTP
/// client: policies and the harness never know which one they drive.
pub trait Oracle: Send {
    fn query(&mut self, tag: &str) -> Result<QueryOutcome, OracleError>;
    /// Granted calls so far, exhausted replies included.
    fn call_count(&self) -> u64;
}

/// In-process oracle over a corpus. Each session samples without replacement
/// per tag; the same item may still be returned via a different tag.
#[derive(Debug, Clone)]
pub struct OracleSession {
    corpus: Arc<Corpus>,
    /// Lazily materialized remaining-item pools, keyed by tag.
    remaining: HashMap<String, Vec<usize>>,
    rng: ChaCha8Rng,
    call_count: u64,
}

impl OracleSession {
    pub fn new(corpus: Arc<Corpus>, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(ORACLE_STREAM);
        Self { corpus, remaining: HashMap::new(), rng, call_count: 0 }
    }

    pub fn corpus(&self) -> &Arc<Corpus> {
        &self.corpus
    }
}

impl Oracle for OracleSession {
    fn query(&mut self, tag: &str) -> Result<QueryOutcome, OracleError> {
        self.call_count += 1;
        let pool = self
            .remaining
            .entry(tag.to_string())
            .or_insert_with(|| self.corpus.tag_index().get(tag).cloned().unwrap_or_default());
        if pool.is_empty() {
            return Ok(QueryOutcome::Exhausted);
        }
        let pick = self.rng.gen_range(0..pool.len());
        let idx = pool.swap_remove(pick);
        let item = self.corpus.item(idx);
        Ok(QueryOutcome::Result(QueryResult {
            item_id: item.id.clone(),
            tags: item.tags.clone(),
            payload: item.payload.clone(),
        }))
    }

    fn call_count(&self) -> u64 {
        self.call_count
    }
}
