//! Run artifacts: per-step trial logs (line-delimited JSON), learning
//! curves and summaries (CSV), tag-score tables (CSV), and the echoed
//! effective config (TOML). All writers are deterministic: re-running the
//! same config reproduces every file byte for byte.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::RunConfig;
use super::{AggregateResult, SweepPoint, TrialResult};

pub const WIRE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("failed writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad trial log {path}: {message}")]
    BadLog { path: String, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io { path: path.display().to_string(), source }
}

/// One line of a trial log.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TrialLogLine {
    Step {
        v: u32,
        step: u64,
        tag: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        item_id: Option<String>,
        #[serde(skip_serializing_if = "Option::is_none")]
        reward: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        best_so_far: Option<f64>,
    },
    Summary {
        v: u32,
        seed: u64,
        truncated: bool,
        #[serde(skip_serializing_if = "Option::is_none")]
        best_item_id: Option<String>,
        #[serde(skip_serializing_if = "Option::is_none")]
        best_score: Option<f64>,
        oracle_calls: u64,
        f_evals: u64,
        tag_scores: Vec<(String, f64)>,
    },
}

pub fn write_trial_jsonl(path: &Path, trial: &TrialResult) -> Result<(), OutputError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    for record in &trial.steps {
        let line = TrialLogLine::Step {
            v: WIRE_VERSION,
            step: record.step,
            tag: record.tag.clone(),
            item_id: record.item_id.clone(),
            reward: record.reward,
            best_so_far: record.best_so_far,
        };
        serde_json::to_writer(&mut out, &line).map_err(|e| OutputError::BadLog {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        out.write_all(b"\n").map_err(io_err(path))?;
    }
    let summary = TrialLogLine::Summary {
        v: WIRE_VERSION,
        seed: trial.seed,
        truncated: trial.truncated,
        best_item_id: trial.best_item_id.clone(),
        best_score: trial.best_score,
        oracle_calls: trial.oracle_calls,
        f_evals: trial.f_evals,
        tag_scores: trial.final_scores.clone(),
    };
    serde_json::to_writer(&mut out, &summary).map_err(|e| OutputError::BadLog {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    out.write_all(b"\n").map_err(io_err(path))?;
    out.flush().map_err(io_err(path))
}

/// Reads back the summary line of a trial log (for score export).
pub fn read_trial_summary(path: &Path) -> Result<TrialLogLine, OutputError> {
    let file = File::open(path).map_err(io_err(path))?;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: TrialLogLine =
            serde_json::from_str(&line).map_err(|e| OutputError::BadLog {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
        if matches!(parsed, TrialLogLine::Summary { .. }) {
            return Ok(parsed);
        }
    }
    Err(OutputError::BadLog {
        path: path.display().to_string(),
        message: "no summary line".into(),
    })
}

fn opt_float(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_curve_csv(path: &Path, agg: &AggregateResult) -> Result<(), OutputError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| OutputError::BadLog {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let emit = |writer: &mut csv::Writer<File>, record: &[String]| {
        writer.write_record(record).map_err(|e| OutputError::BadLog {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    };
    emit(&mut writer, &["step".into(), "mean_best".into(), "sd".into()])?;
    for point in &agg.curve {
        emit(
            &mut writer,
            &[point.step.to_string(), opt_float(point.mean), opt_float(point.sd)],
        )?;
    }
    writer.flush().map_err(io_err(path))
}

pub fn write_run_summary_csv(path: &Path, agg: &AggregateResult) -> Result<(), OutputError> {
    let mut out = String::from("policy,mean,sd\n");
    out.push_str(&format!(
        "{},{},{}\n",
        csv_field(&agg.label),
        opt_float(agg.mean_best),
        opt_float(agg.sd_best)
    ));
    fs::write(path, out).map_err(io_err(path))
}

pub fn write_tag_scores_csv(path: &Path, scores: &[(String, f64)]) -> Result<(), OutputError> {
    let mut out = String::from("tag,score\n");
    for (tag, score) in scores {
        out.push_str(&format!("{},{}\n", csv_field(tag), score));
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Minimal CSV quoting: tags are arbitrary strings.
fn csv_field(raw: &str) -> String {
    if raw.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw.to_string()
    }
}

pub fn write_effective_config(path: &Path, config: &RunConfig) -> Result<(), OutputError> {
    fs::write(path, config.to_toml()).map_err(io_err(path))
}

/// Artifacts of a `run`: effective config, per-trial logs, the mean curve,
/// the one-row summary, and the base-seed trial's tag scores.
pub fn write_run_outputs(
    dir: &Path,
    config: &RunConfig,
    agg: &AggregateResult,
) -> Result<Vec<PathBuf>, OutputError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    let config_path = dir.join("effective-config.toml");
    write_effective_config(&config_path, config)?;
    written.push(config_path);
    for trial in agg.successes() {
        let path = dir.join(format!("trial_{}.jsonl", trial.seed));
        write_trial_jsonl(&path, trial)?;
        written.push(path);
    }
    let curve_path = dir.join("curve.csv");
    write_curve_csv(&curve_path, agg)?;
    written.push(curve_path);
    let summary_path = dir.join("summary.csv");
    write_run_summary_csv(&summary_path, agg)?;
    written.push(summary_path);
    if let Some(first) = agg.successes().next() {
        let scores_path = dir.join("tag_scores.csv");
        write_tag_scores_csv(&scores_path, &first.final_scores)?;
        written.push(scores_path);
    }
    Ok(written)
}

/// Artifacts of a `sweep`: effective config, one summary row per grid
/// point, and per-point curves (`curve_000.csv`, ...).
pub fn write_sweep_outputs(
    dir: &Path,
    config: &RunConfig,
    points: &[SweepPoint],
) -> Result<Vec<PathBuf>, OutputError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    let config_path = dir.join("effective-config.toml");
    write_effective_config(&config_path, config)?;
    written.push(config_path);
    let mut summary = String::from("policy,params,mean,sd,curve,error\n");
    for (idx, point) in points.iter().enumerate() {
        match &point.result {
            Ok(agg) => {
                let curve_name = format!("curve_{idx:03}.csv");
                let curve_path = dir.join(&curve_name);
                write_curve_csv(&curve_path, agg)?;
                written.push(curve_path);
                summary.push_str(&format!(
                    "{},{},{},{},{},\n",
                    csv_field(config.policy.name()),
                    csv_field(&point.params_label()),
                    opt_float(agg.mean_best),
                    opt_float(agg.sd_best),
                    curve_name
                ));
            }
            Err(message) => {
                summary.push_str(&format!(
                    "{},{},,,,{}\n",
                    csv_field(config.policy.name()),
                    csv_field(&point.params_label()),
                    csv_field(message)
                ));
            }
        }
    }
    let summary_path = dir.join("summary.csv");
    fs::write(&summary_path, summary).map_err(io_err(&summary_path))?;
    written.push(summary_path);
    Ok(written)
}
