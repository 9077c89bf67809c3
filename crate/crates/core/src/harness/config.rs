//! The run configuration file and environment preparation.
//!
//! A run config is a TOML file naming the environment (a corpus file, a
//! synthetic spec, or either of those plus a remote oracle URL), the
//! scorer, the policy, the embedding source, and the trial parameters.
//! Paths inside the file resolve relative to the file's directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{TrialError, TrialSetup};
use crate::bandits::{PolicySpec, POLICY_STREAM};
use crate::embeddings::{EmbeddingError, EmbeddingTable};
use crate::env::{
    make_synthetic_env, BlackBoxFn, Corpus, CorpusError, OracleSession, ScorerConfig, ScorerError,
    SynthConfig, SynthError,
};

/// Initial-tag sampling RNG stream id.
pub const INIT_TAGS_STREAM: u64 = 0xC3;

#[derive(Debug, Error)]
pub enum SetupError {
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

impl From<SetupError> for TrialError {
    fn from(e: SetupError) -> Self {
        TrialError::Setup(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    /// Corpus file (line-delimited JSON records).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    /// Generate the environment instead of loading one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SynthConfig>,
    /// Route oracle queries to a remote server; the local corpus (or the
    /// synthetic one) still provides the tag universe and scorer inputs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingsConfig {
    pub path: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_dim: Option<usize>,
}

fn default_n_initial_tags() -> usize {
    100
}

fn default_n_seeds() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Oracle-call budget per trial.
    pub budget: u64,
    #[serde(default = "default_n_initial_tags")]
    pub n_initial_tags: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_n_seeds")]
    pub n_seeds: usize,
    /// Concurrent trials; 0 means one per core.
    #[serde(default)]
    pub jobs: usize,
    /// Explicit initial tags override seeded sampling.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_tags: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub env: EnvConfig,
    pub policy: PolicySpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scorer: Option<ScorerConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<EmbeddingsConfig>,
    /// Hyperparameter grid for the sweep command: parameter -> values.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<BTreeMap<String, Vec<f64>>>,
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SetupError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| SetupError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut config: RunConfig =
            toml::from_str(&text).map_err(|e| SetupError::Invalid(e.to_string()))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    /// Anchors every relative path to `base` so the echoed effective config
    /// reproduces the run from anywhere.
    pub fn resolve_paths(&mut self, base: &Path) {
        let anchor = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = &mut self.env.corpus {
            anchor(p);
        }
        if let Some(e) = &mut self.embeddings {
            anchor(&mut e.path);
        }
        if let Some(s) = &mut self.scorer {
            if let Some(p) = &mut s.weights {
                anchor(p);
            }
            if let Some(p) = &mut s.source_file {
                anchor(p);
            }
        }
        if let Some(p) = &mut self.out {
            anchor(p);
        }
    }

    pub fn validate(&self) -> Result<(), SetupError> {
        if self.budget == 0 {
            return Err(SetupError::Invalid("budget must be at least 1".into()));
        }
        if self.n_seeds == 0 {
            return Err(SetupError::Invalid("n_seeds must be at least 1".into()));
        }
        match (&self.env.corpus, &self.env.synthetic) {
            (Some(_), Some(_)) => {
                return Err(SetupError::Invalid(
                    "env takes either `corpus` or `synthetic`, not both".into(),
                ))
            }
            (None, None) => {
                return Err(SetupError::Invalid("env needs `corpus` or `synthetic`".into()))
            }
            _ => {}
        }
        if self.env.corpus.is_some() && self.scorer.is_none() {
            return Err(SetupError::Invalid(
                "a corpus environment needs a [scorer] section".into(),
            ));
        }
        match &self.initial_tags {
            Some(tags) if tags.is_empty() => {
                return Err(SetupError::Invalid("initial_tags must not be empty".into()))
            }
            None if self.n_initial_tags == 0 => {
                return Err(SetupError::Invalid("n_initial_tags must be at least 1".into()))
            }
            _ => {}
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// Loaded environment shared across the trials of one run.
pub struct PreparedEnv {
    pub corpus: Arc<Corpus>,
    pub scorer_template: BlackBoxFn,
    pub embeddings: Option<Arc<EmbeddingTable>>,
    pub remote_url: Option<String>,
}

pub fn prepare_env(config: &RunConfig) -> Result<PreparedEnv, SetupError> {
    let (corpus, synth_defaults) = match (&config.env.corpus, &config.env.synthetic) {
        (Some(path), None) => (Arc::new(Corpus::load(path)?), None),
        (None, Some(synth)) => {
            let env = make_synthetic_env(synth)?;
            (Arc::new(env.corpus), Some((env.scorer, env.embeddings)))
        }
        _ => unreachable!("validated"),
    };
    let scorer_template = match &config.scorer {
        Some(scorer_config) => {
            // Paths were resolved to absolute at load time.
            scorer_config.build(&corpus, Path::new(""))?
        }
        None => synth_defaults.as_ref().expect("validated").0.clone(),
    };
    let embeddings = match &config.embeddings {
        Some(e) => Some(Arc::new(EmbeddingTable::load(&e.path, e.expected_dim)?)),
        None => synth_defaults.map(|(_, table)| Arc::new(table)),
    };
    if config.policy.needs_embeddings() && embeddings.is_none() {
        return Err(SetupError::Invalid(format!(
            "policy {} requires an [embeddings] section",
            config.policy.name()
        )));
    }
    Ok(PreparedEnv {
        corpus,
        scorer_template,
        embeddings,
        remote_url: config.env.url.clone(),
    })
}

/// The initial tag set for one trial: the explicit list when given,
/// otherwise a seeded without-replacement sample from the tag universe.
pub fn initial_tags(config: &RunConfig, corpus: &Corpus, seed: u64) -> Result<Vec<String>, SetupError> {
    if let Some(explicit) = &config.initial_tags {
        let mut seen = std::collections::HashSet::new();
        return Ok(explicit.iter().filter(|t| seen.insert(t.as_str())).cloned().collect());
    }
    let universe: Vec<&str> = corpus.tags().collect();
    if config.n_initial_tags > universe.len() {
        return Err(SetupError::Invalid(format!(
            "n_initial_tags {} exceeds the tag universe ({} tags)",
            config.n_initial_tags,
            universe.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(INIT_TAGS_STREAM);
    let picks = rand::seq::index::sample(&mut rng, universe.len(), config.n_initial_tags);
    Ok(picks.iter().map(|i| universe[i].to_string()).collect())
}

pub fn policy_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(POLICY_STREAM);
    rng
}

/// Builds one trial against the in-process oracle. Remote runs build their
/// own setup with the same policy/scorer parts and a transport-backed
/// oracle.
pub fn make_local_setup(
    prep: &PreparedEnv,
    config: &RunConfig,
    spec: &PolicySpec,
    seed: u64,
) -> Result<TrialSetup, TrialError> {
    let tags = initial_tags(config, &prep.corpus, seed)?;
    let policy = spec.build(&tags, prep.embeddings.clone(), policy_rng(seed))?;
    Ok(TrialSetup {
        seed,
        budget: config.budget,
        policy,
        oracle: Box::new(OracleSession::new(Arc::clone(&prep.corpus), seed)),
        scorer: prep.scorer_template.fresh(),
    })
}
