//! Versioned JSON wire shapes for the oracle protocol.
//!
//! A query reply either carries an item (id, full tag set, and the item's
//! features or precomputed score, so the caller evaluates its own black box
//! locally) or `exhausted: true`. Every body carries `v` (current: 1).

use serde::{Deserialize, Serialize};
use tagseek_core::env::{OracleError, Payload, QueryOutcome, QueryResult};

pub const WIRE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireSessionRequest {
    pub v: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireSessionReply {
    pub v: u32,
    pub session_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireHealth {
    pub v: u32,
    pub items: usize,
    pub tags: usize,
    pub feature_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireError {
    pub v: u32,
    pub error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub retry_after_ms: Option<u64>,
}

/// Query reply: an item (`item_id` + `tags` + exactly one of `features` /
/// `score`) or `exhausted: true`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireReply {
    pub v: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub item_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tags: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exhausted: Option<bool>,
}

impl WireReply {
    pub fn from_outcome(outcome: &QueryOutcome) -> Self {
        match outcome {
            QueryOutcome::Exhausted => WireReply {
                v: WIRE_VERSION,
                item_id: None,
                tags: None,
                features: None,
                score: None,
                exhausted: Some(true),
            },
            QueryOutcome::Result(result) => {
                let (features, score) = match &result.payload {
                    Payload::Features(f) => (Some(f.clone()), None),
                    Payload::Score(s) => (None, Some(*s)),
                };
                WireReply {
                    v: WIRE_VERSION,
                    item_id: Some(result.item_id.clone()),
                    tags: Some(result.tags.clone()),
                    features,
                    score,
                    exhausted: None,
                }
            }
        }
    }

    /// Client-side validation: the reply must be well-formed and, when it
    /// carries an item, its tag list must be non-empty and contain the
    /// queried tag.
    pub fn into_outcome(self, queried_tag: &str) -> Result<QueryOutcome, OracleError> {
        if self.v != WIRE_VERSION {
            return Err(OracleError::Protocol(format!("unsupported wire version {}", self.v)));
        }
        if self.exhausted == Some(true) {
            if self.item_id.is_some() || self.tags.is_some() {
                return Err(OracleError::Protocol("exhausted reply carries an item".into()));
            }
            return Ok(QueryOutcome::Exhausted);
        }
        let item_id =
            self.item_id.ok_or_else(|| OracleError::Protocol("reply missing item_id".into()))?;
        let tags = self.tags.ok_or_else(|| OracleError::Protocol("reply missing tags".into()))?;
        if tags.is_empty() {
            return Err(OracleError::Protocol("reply tag list is empty".into()));
        }
        if !tags.iter().any(|t| t == queried_tag) {
            return Err(OracleError::Protocol(format!(
                "reply for tag {queried_tag:?} does not contain it"
            )));
        }
        let payload = match (self.features, self.score) {
            (Some(f), None) => Payload::Features(f),
            (None, Some(s)) => Payload::Score(s),
            _ => {
                return Err(OracleError::Protocol(
                    "reply must carry exactly one of features or score".into(),
                ))
            }
        };
        Ok(QueryOutcome::Result(QueryResult { item_id, tags, payload }))
    }
}
