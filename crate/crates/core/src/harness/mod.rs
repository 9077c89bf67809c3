//! Budgeted trial runner and multi-seed aggregation.
//!
//! One trial is exactly `B` select -> query -> evaluate -> update cycles
//! (exhausted queries consume budget too). Aggregates run the same
//! configuration under seeds `base, base+1, ..` and report the mean and
//! standard deviation of the final best score plus the mean learning
//! curve. Trials are independent, so aggregation parallelizes freely
//! without affecting any per-seed result.

pub mod config;
pub mod output;

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::bandits::{Feedback, Policy, PolicyError, PolicySpec};
use crate::env::{BlackBoxFn, EvalError, Oracle, OracleError, QueryOutcome};

#[derive(Debug, Error)]
pub enum TrialError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("trial setup failed: {0}")]
    Setup(String),
}

/// Everything one trial owns: its policy, oracle session, and scorer.
pub struct TrialSetup {
    pub seed: u64,
    pub budget: u64,
    pub policy: Box<dyn Policy>,
    pub oracle: Box<dyn Oracle>,
    pub scorer: BlackBoxFn,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: u64,
    pub tag: String,
    /// None when the query came back exhausted.
    pub item_id: Option<String>,
    pub reward: Option<f64>,
    /// Running max of rewards; None until the first reward arrives.
    pub best_so_far: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub seed: u64,
    pub steps: Vec<StepRecord>,
    /// True when the candidate pool emptied before the budget was spent.
    pub truncated: bool,
    pub best_item_id: Option<String>,
    pub best_score: Option<f64>,
    /// Final per-tag policy scores, descending (ties by tag); non-finite
    /// scores (unvisited arms under optimistic initialization) are omitted.
    pub final_scores: Vec<(String, f64)>,
    pub oracle_calls: u64,
    pub f_evals: u64,
    #[serde(skip)]
    pub wall: Duration,
}

/// Runs one budgeted trial to completion.
pub fn run_trial(mut setup: TrialSetup) -> Result<TrialResult, TrialError> {
    let start = Instant::now();
    let mut steps = Vec::with_capacity(setup.budget as usize);
    let mut truncated = false;
    let mut best: Option<(String, f64)> = None;
    // Reward memo by item id: an item returned again via another tag reuses
    // its score, so the scorer is spent on distinct items only.
    let mut reward_cache: HashMap<String, f64> = HashMap::new();
    for step in 1..=setup.budget {
        let decision = match setup.policy.select() {
            Ok(decision) => decision,
            Err(PolicyError::AllExhausted) => {
                truncated = true;
                break;
            }
            Err(e) => return Err(e.into()),
        };
        match setup.oracle.query(&decision.tag)? {
            QueryOutcome::Result(result) => {
                let reward = match reward_cache.get(&result.item_id) {
                    Some(cached) => *cached,
                    None => {
                        let fresh = setup.scorer.eval(&result.item_id, &result.payload)?;
                        reward_cache.insert(result.item_id.clone(), fresh);
                        fresh
                    }
                };
                if best.as_ref().map_or(true, |(_, b)| reward > *b) {
                    best = Some((result.item_id.clone(), reward));
                }
                setup
                    .policy
                    .observe(&decision.tag, Feedback::Observation { result: &result, reward })?;
                steps.push(StepRecord {
                    step,
                    tag: decision.tag,
                    item_id: Some(result.item_id),
                    reward: Some(reward),
                    best_so_far: best.as_ref().map(|(_, b)| *b),
                });
            }
            QueryOutcome::Exhausted => {
                setup.policy.observe(&decision.tag, Feedback::Exhausted)?;
                steps.push(StepRecord {
                    step,
                    tag: decision.tag,
                    item_id: None,
                    reward: None,
                    best_so_far: best.as_ref().map(|(_, b)| *b),
                });
            }
        }
    }
    let mut final_scores: Vec<(String, f64)> =
        setup.policy.scores().into_iter().filter(|(_, s)| s.is_finite()).collect();
    final_scores.sort_by(|a, b| {
        b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then_with(|| a.0.cmp(&b.0))
    });
    let (best_item_id, best_score) = match best {
        Some((id, score)) => (Some(id), Some(score)),
        None => (None, None),
    };
    Ok(TrialResult {
        seed: setup.seed,
        steps,
        truncated,
        best_item_id,
        best_score,
        final_scores,
        oracle_calls: setup.oracle.call_count(),
        f_evals: setup.scorer.eval_count(),
        wall: start.elapsed(),
    })
}

/// Top `top_k` tags by final policy score (the whole pool when `top_k`
/// exceeds it), descending.
pub fn export_tag_scores(trial: &TrialResult, top_k: usize) -> Vec<(String, f64)> {
    trial.final_scores.iter().take(top_k).cloned().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub step: u64,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct AggregateResult {
    pub label: String,
    pub base_seed: u64,
    pub budget: u64,
    /// Per-seed outcomes in seed order; failures carry the error text.
    pub trials: Vec<(u64, Result<TrialResult, String>)>,
    /// Mean/sd (population) of the final best score over successful trials.
    pub mean_best: Option<f64>,
    pub sd_best: Option<f64>,
    /// Per-step mean/sd of best-so-far. Truncated trials carry their last
    /// best forward; steps where no trial has seen a reward yet stay empty.
    pub curve: Vec<CurvePoint>,
}

impl AggregateResult {
    pub fn successes(&self) -> impl Iterator<Item = &TrialResult> {
        self.trials.iter().filter_map(|(_, r)| r.as_ref().ok())
    }

    pub fn failures(&self) -> impl Iterator<Item = (u64, &str)> {
        self.trials.iter().filter_map(|(seed, r)| match r {
            Ok(_) => None,
            Err(e) => Some((*seed, e.as_str())),
        })
    }
}

pub fn mean_sd(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

fn best_so_far_at(trial: &TrialResult, step: u64) -> Option<f64> {
    let idx = (step as usize).min(trial.steps.len());
    if idx == 0 {
        return None;
    }
    trial.steps[idx - 1].best_so_far
}

fn aggregate(
    label: String,
    base_seed: u64,
    budget: u64,
    trials: Vec<(u64, Result<TrialResult, String>)>,
) -> AggregateResult {
    let finals: Vec<f64> = trials
        .iter()
        .filter_map(|(_, r)| r.as_ref().ok())
        .filter_map(|t| t.best_score)
        .collect();
    let (mean_best, sd_best) = match mean_sd(&finals) {
        Some((m, s)) => (Some(m), Some(s)),
        None => (None, None),
    };
    let mut curve = Vec::with_capacity(budget as usize);
    for step in 1..=budget {
        let values: Vec<f64> = trials
            .iter()
            .filter_map(|(_, r)| r.as_ref().ok())
            .filter_map(|t| best_so_far_at(t, step))
            .collect();
        let (mean, sd) = match mean_sd(&values) {
            Some((m, s)) => (Some(m), Some(s)),
            None => (None, None),
        };
        curve.push(CurvePoint { step, mean, sd });
    }
    AggregateResult { label, base_seed, budget, trials, mean_best, sd_best, curve }
}

/// Runs seeds `base_seed..base_seed + n_seeds`, at most `jobs` at a time
/// (0 = one per available core). Per-seed results never depend on
/// execution order.
pub fn run_aggregate<F>(
    label: impl Into<String>,
    make_setup: F,
    base_seed: u64,
    n_seeds: usize,
    budget: u64,
    jobs: usize,
) -> AggregateResult
where
    F: Fn(u64) -> Result<TrialSetup, TrialError> + Sync,
{
    let seeds: Vec<u64> = (0..n_seeds as u64).map(|i| base_seed + i).collect();
    let run_one = |seed: &u64| -> (u64, Result<TrialResult, String>) {
        let outcome = make_setup(*seed).and_then(run_trial).map_err(|e| e.to_string());
        (*seed, outcome)
    };
    let trials: Vec<(u64, Result<TrialResult, String>)> = if n_seeds <= 1 || jobs == 1 {
        seeds.iter().map(run_one).collect()
    } else {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .expect("thread pool");
        pool.install(|| seeds.par_iter().map(run_one).collect())
    };
    aggregate(label.into(), base_seed, budget, trials)
}

/// One grid point of a hyperparameter sweep.
#[derive(Debug)]
pub struct SweepPoint {
    /// `(parameter, value)` pairs in grid-key order.
    pub params: Vec<(String, f64)>,
    pub result: Result<AggregateResult, String>,
}

impl SweepPoint {
    pub fn params_label(&self) -> String {
        self.params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Runs one aggregate per grid point (cartesian product over the grid's
/// parameter lists, parameters in key order). Every point shares the seed
/// schedule. A parameter the policy does not have yields a per-point error
/// marker instead of failing the sweep.
pub fn run_sweep<F>(
    base_policy: &PolicySpec,
    grid: &BTreeMap<String, Vec<f64>>,
    make_setup: F,
    base_seed: u64,
    n_seeds: usize,
    budget: u64,
    jobs: usize,
) -> Vec<SweepPoint>
where
    F: Fn(&PolicySpec, u64) -> Result<TrialSetup, TrialError> + Sync,
{
    let mut points: Vec<Vec<(String, f64)>> = vec![Vec::new()];
    for (param, values) in grid {
        let mut next = Vec::with_capacity(points.len() * values.len());
        for prefix in &points {
            for value in values {
                let mut point = prefix.clone();
                point.push((param.clone(), *value));
                next.push(point);
            }
        }
        points = next;
    }
    points
        .into_iter()
        .map(|params| {
            let mut spec = base_policy.clone();
            for (param, value) in &params {
                match spec.with_param(param, *value) {
                    Ok(next) => spec = next,
                    Err(e) => return SweepPoint { params, result: Err(e.to_string()) },
                }
            }
            let label = format!(
                "{}[{}]",
                spec.name(),
                params.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
            );
            let result = run_aggregate(
                label,
                |seed| make_setup(&spec, seed),
                base_seed,
                n_seeds,
                budget,
                jobs,
            );
            SweepPoint { params, result: Ok(result) }
        })
        .collect()
}
