//! Per-tag empirical-mean policies: random, epsilon-greedy, and UCB, each
//! with a fixed (initial tags only) or growing candidate pool.
//!
//! An unvisited tag scores positive infinity so every arm is tried before
//! any is revisited; ties fall to the lexicographically smallest tag.

use std::collections::HashSet;

use indexmap::IndexMap;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{argmax_tag, Feedback, Policy, PolicyDecision, PolicyError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExplorationRule {
    /// Uniform over the non-exhausted pool.
    Random,
    /// Argmax of empirical means with probability 1 - epsilon, uniform
    /// random otherwise.
    EpsilonGreedy { epsilon: f64 },
    /// Argmax of mean + alpha * sqrt(1 / n_t).
    Ucb { alpha: f64 },
}

#[derive(Debug, Clone, Copy, Default)]
struct ArmStats {
    count: u64,
    reward_sum: f64,
}

impl ArmStats {
    fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::INFINITY
        } else {
            self.reward_sum / self.count as f64
        }
    }
}

pub struct MeanRewardPolicy {
    rule: ExplorationRule,
    arms: IndexMap<String, ArmStats>,
    /// Insert newly revealed tags into the pool.
    adaptive: bool,
    exhausted: HashSet<String>,
    rng: ChaCha8Rng,
}

impl MeanRewardPolicy {
    pub fn new(
        rule: ExplorationRule,
        initial_tags: &[String],
        adaptive: bool,
        rng: ChaCha8Rng,
    ) -> Result<Self, PolicyError> {
        match rule {
            ExplorationRule::EpsilonGreedy { epsilon } if !(0.0..=1.0).contains(&epsilon) => {
                return Err(PolicyError::InvalidParameter(format!(
                    "epsilon must be in [0, 1], got {epsilon}"
                )));
            }
            ExplorationRule::Ucb { alpha } if !(alpha >= 0.0) => {
                return Err(PolicyError::InvalidParameter(format!(
                    "alpha must be non-negative, got {alpha}"
                )));
            }
            _ => {}
        }
        let mut arms = IndexMap::new();
        for tag in initial_tags {
            arms.entry(tag.clone()).or_insert_with(ArmStats::default);
        }
        Ok(Self { rule, arms, adaptive, exhausted: HashSet::new(), rng })
    }

    fn score_of(&self, stats: &ArmStats) -> f64 {
        match self.rule {
            // Never consulted: random selection bypasses scoring.
            ExplorationRule::Random => 0.0,
            ExplorationRule::EpsilonGreedy { .. } => stats.mean(),
            ExplorationRule::Ucb { alpha } => {
                if stats.count == 0 {
                    f64::INFINITY
                } else {
                    stats.mean() + alpha * (1.0 / stats.count as f64).sqrt()
                }
            }
        }
    }

    fn candidates(&self) -> impl Iterator<Item = (&str, &ArmStats)> {
        self.arms
            .iter()
            .filter(|(tag, _)| !self.exhausted.contains(tag.as_str()))
            .map(|(tag, stats)| (tag.as_str(), stats))
    }

    fn random_candidate(&mut self) -> Result<String, PolicyError> {
        let pool: Vec<&str> = self
            .arms
            .keys()
            .map(String::as_str)
            .filter(|t| !self.exhausted.contains(*t))
            .collect();
        if pool.is_empty() {
            return Err(PolicyError::AllExhausted);
        }
        Ok(pool[self.rng.gen_range(0..pool.len())].to_string())
    }
}

impl Policy for MeanRewardPolicy {
    fn select(&mut self) -> Result<PolicyDecision, PolicyError> {
        match self.rule {
            ExplorationRule::Random => {
                let tag = self.random_candidate()?;
                Ok(PolicyDecision { tag, scores: Vec::new() })
            }
            ExplorationRule::EpsilonGreedy { epsilon } => {
                let scores: Vec<(String, f64)> = self
                    .candidates()
                    .map(|(tag, stats)| (tag.to_string(), self.score_of(stats)))
                    .collect();
                if scores.is_empty() {
                    return Err(PolicyError::AllExhausted);
                }
                let explore = self.rng.gen::<f64>() < epsilon;
                let tag = if explore {
                    self.random_candidate()?
                } else {
                    argmax_tag(scores.iter().map(|(t, s)| (t.as_str(), *s)))
                        .expect("non-empty")
                        .0
                };
                Ok(PolicyDecision { tag, scores })
            }
            ExplorationRule::Ucb { .. } => {
                let scores: Vec<(String, f64)> = self
                    .candidates()
                    .map(|(tag, stats)| (tag.to_string(), self.score_of(stats)))
                    .collect();
                let (tag, _) = argmax_tag(scores.iter().map(|(t, s)| (t.as_str(), *s)))
                    .ok_or(PolicyError::AllExhausted)?;
                Ok(PolicyDecision { tag, scores })
            }
        }
    }

    fn observe(&mut self, chosen: &str, feedback: Feedback<'_>) -> Result<(), PolicyError> {
        match feedback {
            Feedback::Observation { result, reward } => {
                // Only the queried arm's statistics move; the reward came
                // from pulling it.
                let stats = self.arms.entry(chosen.to_string()).or_default();
                stats.count += 1;
                stats.reward_sum += reward;
                if self.adaptive {
                    for tag in &result.tags {
                        self.arms.entry(tag.clone()).or_default();
                    }
                }
                Ok(())
            }
            Feedback::Exhausted => {
                self.exhausted.insert(chosen.to_string());
                Ok(())
            }
        }
    }

    fn scores(&self) -> Vec<(String, f64)> {
        self.arms
            .iter()
            .map(|(tag, stats)| {
                let score = match self.rule {
                    // Export the empirical mean (0 when unvisited) so the
                    // snapshot stays finite for the random policy.
                    ExplorationRule::Random => {
                        if stats.count == 0 {
                            0.0
                        } else {
                            stats.mean()
                        }
                    }
                    _ => self.score_of(stats),
                };
                (tag.clone(), score)
            })
            .collect()
    }

    fn pool_len(&self) -> usize {
        self.arms.len()
    }
}
