//! LinUCB over tag embeddings with an incrementally maintained inverse
//! design matrix.
//!
//! The score of a tag with embedding `v` is
//!
//! ```text
//! s = v^T A^-1 b + alpha * sqrt(v^T A^-1 v)
//! ```
//!
//! where `A` starts as `lambda * I` and accumulates one rank-one update
//! `v_t v_t^T` per training pair, and `b` accumulates `reward * v_t`.
//! The multi-tag variant trains on every tag of the returned item (the
//! returned tags share the item's reward); the single-tag variant trains
//! only on the queried tag. Both grow the candidate pool with every tag
//! the oracle reveals.

use std::collections::HashSet;
use std::sync::Arc;

use indexmap::IndexMap;

use super::{argmax_tag, Feedback, Policy, PolicyDecision, PolicyError};
use crate::embeddings::{EmbeddingTable, TagEmbedder, TagEmbedding};
use crate::linalg::SquareMatrix;

/// The linear-bandit state: maintained `A^-1`, response vector `b`, and the
/// ordered pool of known tags with their fixed embeddings.
#[derive(Debug, Clone)]
pub struct LinUcbState {
    a_inv: SquareMatrix,
    b: Vec<f64>,
    known: IndexMap<String, Arc<TagEmbedding>>,
    lambda: f64,
    alpha: f64,
    exhausted: HashSet<String>,
}

impl LinUcbState {
    pub fn new(dim: usize, lambda: f64, alpha: f64) -> Result<Self, PolicyError> {
        if !(lambda > 0.0) {
            return Err(PolicyError::InvalidParameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if !(alpha >= 0.0) {
            return Err(PolicyError::InvalidParameter(format!(
                "alpha must be non-negative, got {alpha}"
            )));
        }
        Ok(Self {
            a_inv: SquareMatrix::scaled_identity(dim, 1.0 / lambda),
            b: vec![0.0; dim],
            known: IndexMap::new(),
            lambda,
            alpha,
            exhausted: HashSet::new(),
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn a_inv(&self) -> &SquareMatrix {
        &self.a_inv
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn known_tags(&self) -> impl Iterator<Item = &str> {
        self.known.keys().map(String::as_str)
    }

    pub fn known_len(&self) -> usize {
        self.known.len()
    }

    pub fn is_exhausted(&self, tag: &str) -> bool {
        self.exhausted.contains(tag)
    }

    pub fn insert_tag(&mut self, tag: &str, embedding: Arc<TagEmbedding>) {
        self.known.entry(tag.to_string()).or_insert(embedding);
    }

    pub fn mark_exhausted(&mut self, tag: &str) {
        self.exhausted.insert(tag.to_string());
    }

    /// `v^T A^-1 b + alpha * sqrt(v^T A^-1 v)`. The quadratic form of a
    /// positive definite matrix is non-negative; tiny negatives from
    /// accumulated rounding are clamped to zero.
    pub fn linucb_score(&self, v: &[f64]) -> Result<f64, PolicyError> {
        let theta_term = crate::linalg::dot(v, &self.a_inv.matvec(&self.b)?);
        let quad = self.a_inv.quad_form(v)?;
        Ok(theta_term + self.alpha * quad.max(0.0).sqrt())
    }

    /// One training pair: rank-one update of `A^-1` and `b += reward * v`.
    pub fn apply_update(&mut self, v: &[f64], reward: f64) -> Result<(), PolicyError> {
        self.a_inv.sherman_morrison_update(v)?;
        for (acc, component) in self.b.iter_mut().zip(v) {
            *acc += reward * component;
        }
        Ok(())
    }

    /// Scores every known tag. `A^-1 b` is computed once; each tag then
    /// costs one mat-vec for its confidence term. Exhausted tags are
    /// included when `include_exhausted` (score snapshots) and skipped for
    /// selection.
    fn score_pool(&self, include_exhausted: bool) -> Result<Vec<(String, f64)>, PolicyError> {
        let theta = self.a_inv.matvec(&self.b)?;
        let mut out = Vec::with_capacity(self.known.len());
        for (tag, embedding) in &self.known {
            if !include_exhausted && self.exhausted.contains(tag) {
                continue;
            }
            let v = &embedding.vector;
            let quad = self.a_inv.quad_form(v)?;
            let score = crate::linalg::dot(v, &theta) + self.alpha * quad.max(0.0).sqrt();
            out.push((tag.clone(), score));
        }
        Ok(out)
    }
}

pub struct LinUcbPolicy {
    state: LinUcbState,
    embedder: TagEmbedder,
    /// true: train on every returned tag; false: only on the queried tag.
    multi_tag: bool,
}

impl LinUcbPolicy {
    pub fn new(
        table: Arc<EmbeddingTable>,
        initial_tags: &[String],
        lambda: f64,
        alpha: f64,
        multi_tag: bool,
    ) -> Result<Self, PolicyError> {
        let mut state = LinUcbState::new(table.dim(), lambda, alpha)?;
        let mut embedder = TagEmbedder::new(table);
        for tag in initial_tags {
            let embedding = embedder.embed(tag);
            state.insert_tag(tag, embedding);
        }
        Ok(Self { state, embedder, multi_tag })
    }

    pub fn state(&self) -> &LinUcbState {
        &self.state
    }
}

impl Policy for LinUcbPolicy {
    fn select(&mut self) -> Result<PolicyDecision, PolicyError> {
        let scores = self.state.score_pool(false)?;
        let (tag, _) = argmax_tag(scores.iter().map(|(t, s)| (t.as_str(), *s)))
            .ok_or(PolicyError::AllExhausted)?;
        Ok(PolicyDecision { tag, scores })
    }

    fn observe(&mut self, chosen: &str, feedback: Feedback<'_>) -> Result<(), PolicyError> {
        match feedback {
            Feedback::Observation { result, reward } => {
                if self.multi_tag {
                    // Every returned tag becomes a training pair sharing the
                    // item's reward, in the item's stored tag order.
                    let mut seen = HashSet::new();
                    for tag in &result.tags {
                        if !seen.insert(tag.as_str()) {
                            continue;
                        }
                        let embedding = self.embedder.embed(tag);
                        self.state.apply_update(&embedding.vector, reward)?;
                        self.state.insert_tag(tag, embedding);
                    }
                } else {
                    let embedding = self.embedder.embed(chosen);
                    self.state.apply_update(&embedding.vector, reward)?;
                    // Revealed tags still grow the candidate pool.
                    for tag in &result.tags {
                        let embedding = self.embedder.embed(tag);
                        self.state.insert_tag(tag, embedding);
                    }
                }
                Ok(())
            }
            Feedback::Exhausted => {
                self.state.mark_exhausted(chosen);
                Ok(())
            }
        }
    }

    fn scores(&self) -> Vec<(String, f64)> {
        self.state.score_pool(true).unwrap_or_default()
    }

    fn pool_len(&self) -> usize {
        self.state.known_len()
    }
}
