//! Budgeted black-box retrieval over tag-search oracles.
//!
//! Given an oracle that answers a tag query with one random matching item
//! (plus that item's full tag set) and a user-supplied scoring function
//! over items, the goal is to find the highest-scoring item in at most
//! `B` oracle calls. The flagship policy scores tags with LinUCB over
//! word-embedding features and trains on every tag the oracle reveals;
//! six baselines (random, epsilon-greedy, UCB, their pool-growing
//! variants, and the single-tag LinUCB ablation) share the same policy
//! interface.
//!
//! Crate layout:
//! - [`embeddings`]: word-vector tables and tag featurization
//! - [`env`]: corpora, the oracle simulator, black-box scorers, synthetic
//!   environments
//! - [`bandits`]: the seven policies
//! - [`harness`]: budgeted trials, multi-seed aggregation, sweeps, and
//!   run artifacts
//! - [`linalg`]: the small dense kernel behind the linear policies

pub mod bandits;
pub mod embeddings;
pub mod env;
pub mod harness;
pub mod linalg;

pub use bandits::{Feedback, LinUcbPolicy, LinUcbState, Policy, PolicyDecision, PolicyError, PolicySpec};
pub use embeddings::{embed_tag, tokenize_tag, EmbeddingTable, TagEmbedder, TagEmbedding};
pub use env::{
    make_synthetic_env, BlackBoxFn, Corpus, ItemRecord, Oracle, OracleError, OracleSession,
    Payload, QueryOutcome, QueryResult, ScorerConfig, SynthConfig,
};
pub use harness::{
    config::{PreparedEnv, RunConfig, SetupError},
    export_tag_scores, run_aggregate, run_sweep, run_trial, AggregateResult, CurvePoint,
    StepRecord, SweepPoint, TrialResult, TrialSetup,
};
