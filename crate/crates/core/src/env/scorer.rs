//! Black-box scoring functions over item feature vectors.
//!
//! Three kinds: a linear form `w . v`, a Gaussian kernel
//! `exp(-||v_s - v||^2 / sigma^2)` around a source vector, and a direct
//! id -> score table. Evaluations are pure; the eval counter tracks how
//! many distinct evaluations were spent.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Corpus, Payload};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("feature dimension mismatch: scorer expects {expected}, item has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("id {0} not present in score table")]
    MissingId(String),
    #[error("scorer requires feature vectors but item {id} carries a score payload")]
    NeedsFeatures { id: String },
}

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid scorer config: {0}")]
    Invalid(String),
    #[error("unparsable float {token:?} in {path}")]
    BadFloat { path: String, token: String },
}

#[derive(Debug, Clone)]
pub enum ScorerKind {
    Linear { weights: Vec<f64> },
    GaussianKernel { source: Vec<f64>, sigma: f64 },
    TableLookup { scores: HashMap<String, f64> },
}

#[derive(Debug, Clone)]
pub struct BlackBoxFn {
    kind: ScorerKind,
    eval_count: u64,
}

impl BlackBoxFn {
    pub fn linear(weights: Vec<f64>) -> Self {
        Self { kind: ScorerKind::Linear { weights }, eval_count: 0 }
    }

    pub fn gaussian_kernel(source: Vec<f64>, sigma: f64) -> Self {
        assert!(sigma > 0.0, "kernel bandwidth must be positive");
        Self { kind: ScorerKind::GaussianKernel { source, sigma }, eval_count: 0 }
    }

    pub fn table_lookup(scores: HashMap<String, f64>) -> Self {
        Self { kind: ScorerKind::TableLookup { scores }, eval_count: 0 }
    }

    /// Builds a table-lookup scorer from a score-payload corpus.
    pub fn table_from_corpus(corpus: &Corpus) -> Result<Self, ScorerError> {
        let mut scores = HashMap::with_capacity(corpus.items().len());
        for item in corpus.items() {
            match item.payload.score() {
                Some(s) => {
                    scores.insert(item.id.clone(), s);
                }
                None => {
                    return Err(ScorerError::Invalid(format!(
                        "table_lookup needs score payloads; item {} has features",
                        item.id
                    )))
                }
            }
        }
        Ok(Self::table_lookup(scores))
    }

    pub fn kind(&self) -> &ScorerKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            ScorerKind::Linear { .. } => "linear",
            ScorerKind::GaussianKernel { .. } => "gaussian_kernel",
            ScorerKind::TableLookup { .. } => "table_lookup",
        }
    }

    /// Evaluations spent so far (the harness caches by item id, so this
    /// counts distinct items).
    pub fn eval_count(&self) -> u64 {
        self.eval_count
    }

    /// Resets the counter; used when one scorer template is cloned per trial.
    pub fn fresh(&self) -> Self {
        Self { kind: self.kind.clone(), eval_count: 0 }
    }

    pub fn eval(&mut self, item_id: &str, payload: &Payload) -> Result<f64, EvalError> {
        let score = match &self.kind {
            ScorerKind::Linear { weights } => {
                let features = payload
                    .features()
                    .ok_or_else(|| EvalError::NeedsFeatures { id: item_id.to_string() })?;
                if features.len() != weights.len() {
                    return Err(EvalError::DimensionMismatch {
                        expected: weights.len(),
                        got: features.len(),
                    });
                }
                crate::linalg::dot(weights, features)
            }
            ScorerKind::GaussianKernel { source, sigma } => {
                let features = payload
                    .features()
                    .ok_or_else(|| EvalError::NeedsFeatures { id: item_id.to_string() })?;
                if features.len() != source.len() {
                    return Err(EvalError::DimensionMismatch {
                        expected: source.len(),
                        got: features.len(),
                    });
                }
                let dist_sq: f64 =
                    source.iter().zip(features).map(|(a, b)| (a - b) * (a - b)).sum();
                (-dist_sq / (sigma * sigma)).exp()
            }
            ScorerKind::TableLookup { scores } => *scores
                .get(item_id)
                .ok_or_else(|| EvalError::MissingId(item_id.to_string()))?,
        };
        self.eval_count += 1;
        Ok(score)
    }
}

/// Scorer selection as read from the structured config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScorerConfig {
    pub kind: String,
    /// linear: path to a whitespace-separated weight-vector file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<PathBuf>,
    /// gaussian_kernel: bandwidth.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// gaussian_kernel: take the source vector from this corpus item.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source_item: Option<String>,
    /// gaussian_kernel: or read the source vector from a file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source_file: Option<PathBuf>,
}

impl ScorerConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScorerError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ScorerError::Io {
            path: path.display().to_string(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| ScorerError::Invalid(e.to_string()))
    }

    /// Resolves paths relative to `base_dir` and builds the scorer.
    pub fn build(&self, corpus: &Corpus, base_dir: &Path) -> Result<BlackBoxFn, ScorerError> {
        match self.kind.as_str() {
            "linear" => {
                let rel = self.weights.as_ref().ok_or_else(|| {
                    ScorerError::Invalid("linear scorer needs `weights`".into())
                })?;
                let weights = read_vector_file(&base_dir.join(rel))?;
                Ok(BlackBoxFn::linear(weights))
            }
            "gaussian_kernel" => {
                let sigma = self.sigma.ok_or_else(|| {
                    ScorerError::Invalid("gaussian_kernel scorer needs `sigma`".into())
                })?;
                if !(sigma > 0.0) {
                    return Err(ScorerError::Invalid("sigma must be positive".into()));
                }
                let source = match (&self.source_item, &self.source_file) {
                    (Some(id), None) => {
                        let item = corpus.item_by_id(id).ok_or_else(|| {
                            ScorerError::Invalid(format!("source_item {id} not in corpus"))
                        })?;
                        item.payload
                            .features()
                            .ok_or_else(|| {
                                ScorerError::Invalid(format!("source_item {id} has no features"))
                            })?
                            .to_vec()
                    }
                    (None, Some(rel)) => read_vector_file(&base_dir.join(rel))?,
                    _ => {
                        return Err(ScorerError::Invalid(
                            "gaussian_kernel needs exactly one of `source_item` or `source_file`"
                                .into(),
                        ))
                    }
                };
                Ok(BlackBoxFn::gaussian_kernel(source, sigma))
            }
            "table_lookup" => BlackBoxFn::table_from_corpus(corpus),
            other => Err(ScorerError::Invalid(format!(
                "unknown scorer kind {other:?} (valid: linear, gaussian_kernel, table_lookup)"
            ))),
        }
    }
}

/// Reads a whitespace-separated vector of floats (weight and source files).
pub fn read_vector_file(path: &Path) -> Result<Vec<f64>, ScorerError> {
    let text = fs::read_to_string(path).map_err(|source| ScorerError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut out = Vec::new();
    for token in text.split_whitespace() {
        let value: f64 = token.parse().map_err(|_| ScorerError::BadFloat {
            path: path.display().to_string(),
            token: token.to_string(),
        })?;
        out.push(value);
    }
    if out.is_empty() {
        return Err(ScorerError::Invalid(format!("{} holds no values", path.display())));
    }
    Ok(out)
}
