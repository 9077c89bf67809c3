//! The retrieval policies.
//!
//! Every policy speaks the same protocol: it is constructed with the
//! initially known tags, repeatedly asked to `select` a tag to query, and
//! then shown the oracle's feedback (the returned item's score and full
//! tag set, or an exhausted signal) via `observe`.
//!
//! Seven policies: `tiara` and `tiara-s` (LinUCB over tag embeddings, with
//! multi-tag and single-tag training respectively), `random`,
//! `epsilon-greedy` and `ucb` (candidate pool fixed to the initial tags),
//! and their pool-growing variants `ada-epsilon-greedy` and `ada-ucb`.

mod linucb;
mod mean_reward;

pub use linucb::{LinUcbPolicy, LinUcbState};
pub use mean_reward::{ExplorationRule, MeanRewardPolicy};

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embeddings::EmbeddingTable;
use crate::env::QueryResult;
use crate::linalg::LinalgError;

/// Policy RNG stream id (decoupled from the oracle stream under one seed).
pub const POLICY_STREAM: u64 = 0xB2;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("all candidates exhausted")]
    AllExhausted,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("policy {policy} requires an embedding table")]
    NeedsEmbeddings { policy: String },
    #[error("invalid policy parameter: {0}")]
    InvalidParameter(String),
}

/// A selection: the chosen tag and the per-tag scores at decision time.
///
/// For score-based policies the chosen tag is the argmax of the map over
/// non-exhausted candidates (ties to the lexicographically smallest tag).
/// `random` selections and epsilon-greedy exploration steps are drawn from
/// the seeded RNG instead; `random` reports an empty map.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDecision {
    pub tag: String,
    pub scores: Vec<(String, f64)>,
}

/// Oracle feedback for the most recent selection.
#[derive(Debug, Clone, Copy)]
pub enum Feedback<'a> {
    Observation { result: &'a QueryResult, reward: f64 },
    Exhausted,
}

pub trait Policy: Send {
    fn select(&mut self) -> Result<PolicyDecision, PolicyError>;
    fn observe(&mut self, chosen: &str, feedback: Feedback<'_>) -> Result<(), PolicyError>;
    /// Current per-tag score snapshot over the whole candidate pool
    /// (exhausted tags included); unsorted.
    fn scores(&self) -> Vec<(String, f64)>;
    /// Candidate-pool size (known tags for the adaptive policies).
    fn pool_len(&self) -> usize;
}

/// Policy selection plus parameters, as read from the run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PolicySpec {
    Random,
    EpsilonGreedy {
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
    Ucb {
        #[serde(default = "default_ucb_alpha")]
        alpha: f64,
    },
    AdaEpsilonGreedy {
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
    AdaUcb {
        #[serde(default = "default_ucb_alpha")]
        alpha: f64,
    },
    Tiara {
        #[serde(default = "default_linucb_alpha")]
        alpha: f64,
        #[serde(default = "default_lambda")]
        lambda: f64,
    },
    TiaraS {
        #[serde(default = "default_linucb_alpha")]
        alpha: f64,
        #[serde(default = "default_lambda")]
        lambda: f64,
    },
}

fn default_epsilon() -> f64 {
    0.1
}

fn default_ucb_alpha() -> f64 {
    1.0
}

fn default_linucb_alpha() -> f64 {
    0.01
}

fn default_lambda() -> f64 {
    1.0
}

pub const POLICY_NAMES: &[&str] =
    &["random", "epsilon-greedy", "ucb", "ada-epsilon-greedy", "ada-ucb", "tiara", "tiara-s"];

impl PolicySpec {
    pub fn name(&self) -> &'static str {
        match self {
            PolicySpec::Random => "random",
            PolicySpec::EpsilonGreedy { .. } => "epsilon-greedy",
            PolicySpec::Ucb { .. } => "ucb",
            PolicySpec::AdaEpsilonGreedy { .. } => "ada-epsilon-greedy",
            PolicySpec::AdaUcb { .. } => "ada-ucb",
            PolicySpec::Tiara { .. } => "tiara",
            PolicySpec::TiaraS { .. } => "tiara-s",
        }
    }

    /// Parses a bare policy name into a spec with default parameters.
    pub fn from_name(name: &str) -> Result<Self, PolicyError> {
        match name {
            "random" => Ok(PolicySpec::Random),
            "epsilon-greedy" => Ok(PolicySpec::EpsilonGreedy { epsilon: default_epsilon() }),
            "ucb" => Ok(PolicySpec::Ucb { alpha: default_ucb_alpha() }),
            "ada-epsilon-greedy" => {
                Ok(PolicySpec::AdaEpsilonGreedy { epsilon: default_epsilon() })
            }
            "ada-ucb" => Ok(PolicySpec::AdaUcb { alpha: default_ucb_alpha() }),
            "tiara" => {
                Ok(PolicySpec::Tiara { alpha: default_linucb_alpha(), lambda: default_lambda() })
            }
            "tiara-s" => {
                Ok(PolicySpec::TiaraS { alpha: default_linucb_alpha(), lambda: default_lambda() })
            }
            other => Err(PolicyError::InvalidParameter(format!(
                "unknown policy {other:?}; valid names: {}",
                POLICY_NAMES.join(", ")
            ))),
        }
    }

    pub fn needs_embeddings(&self) -> bool {
        matches!(self, PolicySpec::Tiara { .. } | PolicySpec::TiaraS { .. })
    }

    /// Returns a copy with one named parameter replaced (sweeps).
    pub fn with_param(&self, param: &str, value: f64) -> Result<Self, PolicyError> {
        let mut spec = self.clone();
        let slot = match (&mut spec, param) {
            (PolicySpec::EpsilonGreedy { epsilon }, "epsilon") => epsilon,
            (PolicySpec::AdaEpsilonGreedy { epsilon }, "epsilon") => epsilon,
            (PolicySpec::Ucb { alpha }, "alpha") => alpha,
            (PolicySpec::AdaUcb { alpha }, "alpha") => alpha,
            (PolicySpec::Tiara { alpha, .. }, "alpha") => alpha,
            (PolicySpec::Tiara { lambda, .. }, "lambda") => lambda,
            (PolicySpec::TiaraS { alpha, .. }, "alpha") => alpha,
            (PolicySpec::TiaraS { lambda, .. }, "lambda") => lambda,
            _ => {
                return Err(PolicyError::InvalidParameter(format!(
                    "policy {} has no parameter {param:?}",
                    self.name()
                )))
            }
        };
        *slot = value;
        Ok(spec)
    }

    /// Instantiates the policy over the initial tags. `table` is required
    /// for the LinUCB policies; `rng` feeds every random choice the policy
    /// makes.
    pub fn build(
        &self,
        initial_tags: &[String],
        table: Option<Arc<EmbeddingTable>>,
        rng: ChaCha8Rng,
    ) -> Result<Box<dyn Policy>, PolicyError> {
        match self {
            PolicySpec::Random => Ok(Box::new(MeanRewardPolicy::new(
                ExplorationRule::Random,
                initial_tags,
                false,
                rng,
            )?)),
            PolicySpec::EpsilonGreedy { epsilon } => Ok(Box::new(MeanRewardPolicy::new(
                ExplorationRule::EpsilonGreedy { epsilon: *epsilon },
                initial_tags,
                false,
                rng,
            )?)),
            PolicySpec::Ucb { alpha } => Ok(Box::new(MeanRewardPolicy::new(
                ExplorationRule::Ucb { alpha: *alpha },
                initial_tags,
                false,
                rng,
            )?)),
            PolicySpec::AdaEpsilonGreedy { epsilon } => Ok(Box::new(MeanRewardPolicy::new(
                ExplorationRule::EpsilonGreedy { epsilon: *epsilon },
                initial_tags,
                true,
                rng,
            )?)),
            PolicySpec::AdaUcb { alpha } => Ok(Box::new(MeanRewardPolicy::new(
                ExplorationRule::Ucb { alpha: *alpha },
                initial_tags,
                true,
                rng,
            )?)),
            PolicySpec::Tiara { alpha, lambda } => {
                let table = table
                    .ok_or_else(|| PolicyError::NeedsEmbeddings { policy: "tiara".into() })?;
                Ok(Box::new(LinUcbPolicy::new(table, initial_tags, *lambda, *alpha, true)?))
            }
            PolicySpec::TiaraS { alpha, lambda } => {
                let table = table
                    .ok_or_else(|| PolicyError::NeedsEmbeddings { policy: "tiara-s".into() })?;
                Ok(Box::new(LinUcbPolicy::new(table, initial_tags, *lambda, *alpha, false)?))
            }
        }
    }
}

/// Argmax with deterministic tie-breaking: on equal scores the
/// lexicographically smallest tag wins.
pub fn argmax_tag<'a>(
    candidates: impl Iterator<Item = (&'a str, f64)>,
) -> Option<(String, f64)> {
    let mut best: Option<(&str, f64)> = None;
    for (tag, score) in candidates {
        match &best {
            None => best = Some((tag, score)),
            Some((best_tag, best_score)) => {
                if score > *best_score || (score == *best_score && tag < *best_tag) {
                    best = Some((tag, score));
                }
            }
        }
    }
    best.map(|(tag, score)| (tag.to_string(), score))
}
