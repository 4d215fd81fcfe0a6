//! Dataset manifest: named sources (CSV files or synthetic generators) and
//! the shared preparation pipeline — ordinal encoding, capped subsampling,
//! min–max scaling onto the unit cube.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use treeguard::data::{
    encode_ordinal, load_csv, normalize_minmax, subsample_log_ratio, ColumnKind, Dataset,
};
use treeguard::rng::{derive_seed, stream_rng};

use crate::config::ExperimentConfig;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub datasets: Vec<DatasetSpec>,
}

/// One named dataset. Exactly one of `csv` and `synthetic` must be set.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<CsvSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSource>,
    /// Row cap; datasets above it are subsampled with log-ratio class
    /// rebalancing before scaling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSource {
    /// Resolved relative to the manifest file.
    pub path: PathBuf,
    /// Target column name.
    pub target: String,
    /// Names of categorical feature columns; everything else must parse as
    /// a finite float.
    #[serde(default)]
    pub categorical: Vec<String>,
}

/// Balanced class blobs: class `c` is a uniform scatter of half-width
/// `spread` around an evenly spaced centre, clamped to the unit cube.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSource {
    pub n: usize,
    pub features: usize,
    pub classes: usize,
    pub spread: f64,
    pub seed: u64,
}

impl Default for SyntheticSource {
    fn default() -> Self {
        SyntheticSource {
            n: 240,
            features: 4,
            classes: 2,
            spread: 0.3,
            seed: 7,
        }
    }
}

/// A dataset ready for the pipeline, with its derived seed base. The seed
/// comes from the dataset's manifest position, so filtering a run down to a
/// subset never reshuffles the survivors.
pub struct Prepared {
    pub name: String,
    pub d: Dataset,
    pub ds_seed: u64,
}

fn generate_blobs(s: &SyntheticSource) -> Result<Dataset> {
    if s.classes < 2 || s.features < 1 || s.n < 5 * s.classes {
        bail!("synthetic dataset needs >= 2 classes, >= 1 feature and >= 5 rows per class");
    }
    if !(s.spread > 0.0) {
        bail!("synthetic spread must be positive");
    }
    let mut rng = stream_rng(s.seed, 0);
    let mut x = Vec::with_capacity(s.n);
    let mut y = Vec::with_capacity(s.n);
    for i in 0..s.n {
        let c = i % s.classes;
        let centre = (c + 1) as f64 / (s.classes + 1) as f64;
        x.push(
            (0..s.features)
                .map(|_| (centre + rng.gen_range(-s.spread..=s.spread)).clamp(0.0, 1.0))
                .collect(),
        );
        y.push(c);
    }
    Ok(Dataset::from_parts(x, y, s.classes))
}

fn load_spec(spec: &DatasetSpec, manifest_dir: &std::path::Path) -> Result<Dataset> {
    match (&spec.csv, &spec.synthetic) {
        (Some(csv), None) => {
            let path = if csv.path.is_relative() {
                manifest_dir.join(&csv.path)
            } else {
                csv.path.clone()
            };
            let kinds: BTreeMap<String, ColumnKind> = csv
                .categorical
                .iter()
                .map(|c| (c.clone(), ColumnKind::Categorical))
                .collect();
            let table = load_csv(&path, &kinds, &csv.target)
                .with_context(|| format!("loading dataset '{}' from {}", spec.name, path.display()))?;
            Ok(encode_ordinal(&table)?)
        }
        (None, Some(synth)) => generate_blobs(synth)
            .with_context(|| format!("generating dataset '{}'", spec.name)),
        _ => bail!(
            "dataset '{}' must have exactly one of 'csv' and 'synthetic'",
            spec.name
        ),
    }
}

/// Loads the manifest, keeps the configured subset, and runs each dataset
/// through capping and unit-cube scaling. Scalers are fitted on all rows so
/// one perturbation radius means the same thing in every stage and
/// repetition.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Vec<Prepared>> {
    let text = std::fs::read_to_string(&cfg.manifest)
        .with_context(|| format!("reading manifest {}", cfg.manifest.display()))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .with_context(|| format!("parsing manifest {}", cfg.manifest.display()))?;
    if manifest.datasets.is_empty() {
        bail!("manifest lists no datasets");
    }
    for (i, a) in manifest.datasets.iter().enumerate() {
        if manifest.datasets[..i].iter().any(|b| b.name == a.name) {
            bail!("duplicate dataset name '{}' in manifest", a.name);
        }
    }
    for want in &cfg.datasets {
        if !manifest.datasets.iter().any(|s| &s.name == want) {
            bail!("dataset '{want}' is not in the manifest");
        }
    }

    let manifest_dir = cfg
        .manifest
        .parent()
        .map(|p| p.to_path_buf())
        .unwrap_or_default();
    let mut out = Vec::new();
    for (idx, spec) in manifest.datasets.iter().enumerate() {
        if !cfg.datasets.is_empty() && !cfg.datasets.contains(&spec.name) {
            continue;
        }
        let ds_seed = derive_seed(cfg.seed, idx as u64);
        let raw = load_spec(spec, &manifest_dir)?;
        let capped = match spec.cap {
            Some(cap) => subsample_log_ratio(&raw, cap, derive_seed(ds_seed, 0))?,
            None => raw,
        };
        let all: Vec<usize> = (0..capped.n_samples()).collect();
        let d = normalize_minmax(&capped, &all)?;
        out.push(Prepared {
            name: spec.name.clone(),
            d,
            ds_seed,
        });
    }
    if out.is_empty() {
        bail!("dataset filter matched nothing");
    }
    Ok(out)
}
