//! On-disk stage artifacts: JSON schemas, read/write helpers with schema
//! version checks, and the canonical strip-times transform used by
//! determinism comparisons.
//!
//! Every path stored inside an artifact is relative to the output directory
//! and no artifact carries timestamps, so two runs with the same config are
//! byte-identical outside the wall-clock fields.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use treeguard::train::TrainConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Train/validation/test folds per repetition. The test fold is shared by
/// all repetitions (it depends only on `test_seed`).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitsArtifact {
    pub schema_version: u32,
    pub dataset: String,
    pub n_samples: usize,
    pub n_features: usize,
    pub n_classes: usize,
    pub test_seed: u64,
    pub test: Vec<usize>,
    pub reps: Vec<RepSplit>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RepSplit {
    pub rep: usize,
    pub rep_seed: u64,
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
}

/// Stage-1 output: the per-cell calibration table plus the headline radius
/// the training stage consumes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchArtifact {
    pub schema_version: u32,
    pub dataset: String,
    pub eta_star: f64,
    pub band: f64,
    pub margin: f64,
    /// Calibrated radius for the dataset; absent when the headline search
    /// never finished.
    pub eps_hat: Option<f64>,
    pub headline: Option<HeadlineSearch>,
    pub grid: Vec<GridCell>,
    pub timed_out_cells: usize,
    pub total_seconds: f64,
}

/// Calibration on the tuned standard forest (accuracy-only tuning), which
/// defines the dataset's radius.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HeadlineSearch {
    pub config: TrainConfig,
    /// Tuning trace path, relative to the output directory.
    pub hpo_trace: String,
    pub eps_hat: f64,
    pub eta: f64,
    pub converged: bool,
    pub unreachable: bool,
    pub evaluations: usize,
    pub verifier_calls: usize,
    pub solve_seconds: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridCell {
    pub depth: usize,
    pub trees: usize,
    pub eps_hat: Option<f64>,
    pub eta: Option<f64>,
    pub converged: bool,
    pub timed_out: bool,
    pub verifier_calls: usize,
    /// Pure solver time summed over the cell's search.
    pub solve_seconds: f64,
}

/// Stage-2 output: tuned, retrained and test-evaluated models.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainArtifact {
    pub schema_version: u32,
    pub dataset: String,
    pub eps_hat: f64,
    pub rows: Vec<TrainRow>,
    pub excluded: Vec<Exclusion>,
    pub medians: Vec<MethodMedian>,
    pub total_seconds: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainRow {
    pub method: String,
    pub rep: usize,
    pub acc: f64,
    pub adv_acc: f64,
    /// Verifier timeouts among the test samples (counted non-robust).
    pub n_timeouts: usize,
    /// Winning candidate's position in the tuning trace.
    pub winner_index: usize,
    /// Final fit wall-clock.
    pub train_seconds: f64,
    /// Tuning wall-clock across all candidates.
    pub hpo_seconds: f64,
    /// Pure solve time of the test-set evaluation.
    pub verify_seconds: f64,
    /// Model path, relative to the output directory.
    pub model: String,
    /// Tuning trace path, relative to the output directory.
    pub hpo_trace: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Exclusion {
    pub method: String,
    pub rep: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MethodMedian {
    pub method: String,
    pub reps_completed: usize,
    pub acc: f64,
    pub adv_acc: f64,
    pub train_seconds: f64,
    pub verify_seconds: f64,
}

/// Stage-3 output: solve-time measurements over the stage-2 models.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyArtifact {
    pub schema_version: u32,
    pub dataset: String,
    pub eps_hat: f64,
    pub rows: Vec<VerifyRow>,
    pub total_seconds: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyRow {
    pub method: String,
    pub rep: usize,
    pub model: String,
    pub n_test: usize,
    pub acc: f64,
    pub adv_acc: f64,
    pub n_timeouts: usize,
    /// Total pure solve time over the test fold.
    pub solve_seconds: f64,
    pub sample_seconds: SecondsSummary,
}

/// Distribution summary of per-sample solve times.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SecondsSummary {
    pub min_seconds: f64,
    pub p50_seconds: f64,
    pub p90_seconds: f64,
    pub max_seconds: f64,
}

impl SecondsSummary {
    pub fn from_samples(mut xs: Vec<f64>) -> Self {
        if xs.is_empty() {
            return SecondsSummary {
                min_seconds: 0.0,
                p50_seconds: 0.0,
                p90_seconds: 0.0,
                max_seconds: 0.0,
            };
        }
        xs.sort_by(f64::total_cmp);
        let at = |q: f64| xs[((q * xs.len() as f64).ceil() as usize).clamp(1, xs.len()) - 1];
        SecondsSummary {
            min_seconds: xs[0],
            p50_seconds: at(0.5),
            p90_seconds: at(0.9),
            max_seconds: xs[xs.len() - 1],
        }
    }
}

/// Midpoint median: the middle value, or the mean of the two middle values
/// for even counts. Empty input is the caller's bug.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    let mut xs = values.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path, stage_hint: &str) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| {
        format!(
            "reading {} — run `{stage_hint}` first or point --out at its output directory",
            path.display()
        )
    })?;
    let value: T =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(value)
}

/// Rejects artifacts written by a different schema generation.
pub fn check_schema(found: u32, what: &str) -> Result<()> {
    if found != SCHEMA_VERSION {
        bail!("{what}: schema version {found}, this binary expects {SCHEMA_VERSION}");
    }
    Ok(())
}

/// Zeroes every numeric field whose key ends in "seconds", recursively.
/// Determinism checks compare these canonical bytes; all remaining fields
/// must be bit-identical across runs with the same config.
pub fn strip_times(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Object(map) => {
            for (k, val) in map.iter_mut() {
                if k.ends_with("seconds") && val.is_number() {
                    *val = serde_json::Value::from(0.0);
                } else {
                    strip_times(val);
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(strip_times),
        _ => {}
    }
}
