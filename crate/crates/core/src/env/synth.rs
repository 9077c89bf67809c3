//! Deterministic synthetic environments with a planted linear reward.
//!
//! Tag "words" get random unit vectors, each item carries a handful of
//! tags, and item features are the mean of the item's tag vectors plus
//! Gaussian noise. The black box is linear in a hidden weight vector, so
//! a tag's expected reward is approximately linear in its embedding --
//! the regime the linear policies assume.
//!
//! Tag assignment is similarity-clustered: an item draws a primary tag
//! uniformly, then co-tags with probability proportional to
//! `exp(concentration * <v_primary, v_tag>)`. Items about one topic carry
//! related tags, so querying a good tag surfaces items whose other tags
//! are also good -- the structure tag-search databases actually have.
//! `tag_concentration = 0` degenerates to independent uniform tags.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::distributions::WeightedIndex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{BlackBoxFn, Corpus, CorpusError, ItemRecord, Payload, ScorerConfig};
use crate::embeddings::{EmbeddingError, EmbeddingTable};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic parameter: {0}")]
    Invalid(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_items: usize,
    pub n_tags: usize,
    pub dim: usize,
    pub seed: u64,
    /// Per-component feature noise.
    #[serde(default)]
    pub noise_sd: f64,
    #[serde(default = "default_min_tags")]
    pub min_tags_per_item: usize,
    #[serde(default = "default_max_tags")]
    pub max_tags_per_item: usize,
    /// Strength of similarity-clustered tag co-occurrence.
    #[serde(default = "default_concentration")]
    pub tag_concentration: f64,
}

fn default_min_tags() -> usize {
    2
}

fn default_max_tags() -> usize {
    8
}

fn default_concentration() -> f64 {
    4.0
}

impl SynthConfig {
    pub fn new(n_items: usize, n_tags: usize, dim: usize, seed: u64, noise_sd: f64) -> Self {
        Self {
            n_items,
            n_tags,
            dim,
            seed,
            noise_sd,
            min_tags_per_item: default_min_tags(),
            max_tags_per_item: default_max_tags(),
            tag_concentration: default_concentration(),
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        if self.n_items == 0 || self.n_tags == 0 || self.dim == 0 {
            return Err(SynthError::Invalid("counts and dimension must be positive".into()));
        }
        if self.min_tags_per_item == 0 || self.min_tags_per_item > self.max_tags_per_item {
            return Err(SynthError::Invalid("need 0 < min_tags_per_item <= max_tags_per_item".into()));
        }
        if self.min_tags_per_item > self.n_tags {
            return Err(SynthError::Invalid("min_tags_per_item exceeds n_tags".into()));
        }
        if !(self.noise_sd >= 0.0) {
            return Err(SynthError::Invalid("noise_sd must be non-negative".into()));
        }
        if !(self.tag_concentration >= 0.0) {
            return Err(SynthError::Invalid("tag_concentration must be non-negative".into()));
        }
        Ok(())
    }
}

pub struct SyntheticEnv {
    pub corpus: Corpus,
    pub scorer: BlackBoxFn,
    pub embeddings: EmbeddingTable,
    /// The hidden linear weights: the planted tag's embedding, so the
    /// reward direction is a topic that exists in the vocabulary.
    pub hidden_weights: Vec<f64>,
    pub planted_tag: String,
    /// Brute-force argmax of the hidden linear form over all items.
    pub best_item_id: String,
    pub best_score: f64,
}

/// Base-26 tag word, e.g. `taaa`, `taab`, ... Purely alphabetic so the
/// tokenizer keeps it whole.
fn synth_word(index: usize, width: usize) -> String {
    let mut chars = vec![b'a'; width];
    let mut rest = index;
    for slot in chars.iter_mut().rev() {
        *slot = b'a' + (rest % 26) as u8;
        rest /= 26;
    }
    let mut word = String::with_capacity(width + 1);
    word.push('t');
    word.push_str(std::str::from_utf8(&chars).expect("ascii"));
    word
}

fn unit_normal_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// A primary tag drawn uniformly plus `k - 1` co-tags drawn without
/// replacement with probability proportional to
/// `exp(concentration * <v_primary, v_tag>)`.
fn sample_clustered_tags(
    rng: &mut ChaCha8Rng,
    vectors: &[Vec<f64>],
    k: usize,
    concentration: f64,
) -> Vec<usize> {
    let n = vectors.len();
    let primary = rng.gen_range(0..n);
    let mut chosen = vec![primary];
    if k == 1 {
        return chosen;
    }
    let anchor = &vectors[primary];
    let mut weights: Vec<f64> = vectors
        .iter()
        .map(|v| (concentration * crate::linalg::dot(anchor, v)).exp())
        .collect();
    weights[primary] = 0.0;
    for _ in 1..k {
        let index = WeightedIndex::new(&weights).expect("some weight is positive");
        let pick = rng.sample(&index);
        chosen.push(pick);
        weights[pick] = 0.0;
    }
    chosen
}

pub fn make_synthetic_env(config: &SynthConfig) -> Result<SyntheticEnv, SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let word_width = {
        let mut width = 1;
        let mut capacity = 26usize;
        while capacity < config.n_tags {
            width += 1;
            capacity = capacity.saturating_mul(26);
        }
        width.max(3)
    };
    let words: Vec<String> = (0..config.n_tags).map(|i| synth_word(i, word_width)).collect();
    let vectors: Vec<Vec<f64>> =
        (0..config.n_tags).map(|_| unit_normal_vector(&mut rng, config.dim)).collect();
    let planted_index = rng.gen_range(0..config.n_tags);
    let hidden_weights = vectors[planted_index].clone();
    let planted_tag = words[planted_index].clone();

    let id_width = (config.n_items.saturating_sub(1)).to_string().len();
    let max_tags = config.max_tags_per_item.min(config.n_tags);
    let mut items = Vec::with_capacity(config.n_items);
    let mut best: Option<(usize, f64)> = None;
    for i in 0..config.n_items {
        let k = rng.gen_range(config.min_tags_per_item..=max_tags);
        let tag_ids = sample_clustered_tags(&mut rng, &vectors, k, config.tag_concentration);
        let tags: Vec<String> = tag_ids.iter().map(|&t| words[t].clone()).collect();
        let mut features = vec![0.0; config.dim];
        for &t in &tag_ids {
            for (acc, component) in features.iter_mut().zip(&vectors[t]) {
                *acc += component;
            }
        }
        for component in &mut features {
            *component /= k as f64;
        }
        if config.noise_sd > 0.0 {
            for component in &mut features {
                let noise: f64 = rng.sample(StandardNormal);
                *component += config.noise_sd * noise;
            }
        }
        let score = crate::linalg::dot(&hidden_weights, &features);
        if best.map_or(true, |(_, s)| score > s) {
            best = Some((i, score));
        }
        items.push(ItemRecord {
            id: format!("item{i:0id_width$}"),
            tags,
            payload: Payload::Features(features),
        });
    }
    let (best_idx, best_score) = best.expect("n_items >= 1");
    let best_item_id = items[best_idx].id.clone();

    let corpus = Corpus::from_items(items)?;
    let embeddings =
        EmbeddingTable::from_entries(config.dim, words.into_iter().zip(vectors))?;
    Ok(SyntheticEnv {
        corpus,
        scorer: BlackBoxFn::linear(hidden_weights.clone()),
        embeddings,
        hidden_weights,
        planted_tag,
        best_item_id,
        best_score,
    })
}

pub struct SynthFiles {
    pub corpus: PathBuf,
    pub embeddings: PathBuf,
    pub weights: PathBuf,
    pub scorer: PathBuf,
}

/// Materializes a synthetic environment as the standard on-disk artifacts:
/// `corpus.jsonl`, `embeddings.txt`, `weights.txt`, `scorer.toml`.
pub fn write_synth_files(env: &SyntheticEnv, dir: &Path) -> std::io::Result<SynthFiles> {
    fs::create_dir_all(dir)?;
    let paths = SynthFiles {
        corpus: dir.join("corpus.jsonl"),
        embeddings: dir.join("embeddings.txt"),
        weights: dir.join("weights.txt"),
        scorer: dir.join("scorer.toml"),
    };

    let mut corpus_out = Vec::new();
    env.corpus.write_jsonl(&mut corpus_out)?;
    fs::write(&paths.corpus, corpus_out)?;

    let mut emb_out = Vec::new();
    // Tag universe is sorted; write in that order for reproducible bytes.
    let mut words: Vec<&str> = env.corpus.tags().collect();
    words.sort_unstable();
    words.dedup();
    for word in words {
        if let Some(vector) = env.embeddings.get(word) {
            write!(emb_out, "{word}")?;
            for component in vector {
                write!(emb_out, " {component}")?;
            }
            writeln!(emb_out)?;
        }
    }
    fs::write(&paths.embeddings, emb_out)?;

    let weight_line = env
        .hidden_weights
        .iter()
        .map(f64::to_string)
        .collect::<Vec<_>>()
        .join(" ");
    fs::write(&paths.weights, format!("{weight_line}\n"))?;

    let scorer_config = ScorerConfig {
        kind: "linear".into(),
        weights: Some(PathBuf::from("weights.txt")),
        sigma: None,
        source_item: None,
        source_file: None,
    };
    let scorer_text = toml::to_string(&scorer_config).expect("static config serializes");
    fs::write(&paths.scorer, scorer_text)?;
    Ok(paths)
}
