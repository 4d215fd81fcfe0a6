//! Experiment configuration: a JSON file merged with command-line overrides,
//! plus the output-directory resolution rules.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use treeguard::train::Method;
use treeguard::verify::DEFAULT_NODE_BUDGET;

/// Environment variable naming the artifact/report directory; beaten only by
/// an explicit `--out` flag.
pub const ENV_OUT_DIR: &str = "TREEGUARD_OUT_DIR";

/// Hyperparameter grid swept by the radius-calibration stage.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub depths: Vec<usize>,
    pub trees: Vec<usize>,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            depths: vec![3, 4, 5, 7, 9],
            trees: vec![5, 11, 25, 56, 125],
        }
    }
}

impl Grid {
    /// Cells in sweep order: depths ascending, tree counts fastest. The
    /// first cell is therefore the smallest model, whose calibrated radius
    /// seeds every later cell's search.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.depths.len() * self.trees.len());
        for &d in &self.depths {
            for &t in &self.trees {
                out.push((d, t));
            }
        }
        out
    }
}

/// Wall-clock budgets in seconds. Defaults are desk scale — ten minutes per
/// stage and dataset — so a full run finishes on a laptop; `--paper-scale`
/// switches to the 12 h calibration / 48 h total budgets used for benchmark
/// runs.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Caps {
    /// Radius-calibration budget per dataset.
    pub search_seconds: f64,
    /// Whole-experiment budget.
    pub total_seconds: f64,
    /// Budget per grid cell and per (method, repetition) training cell.
    pub cell_seconds: f64,
    /// Budget per hyperparameter candidate.
    pub config_seconds: f64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            search_seconds: 600.0,
            total_seconds: 3600.0,
            cell_seconds: 600.0,
            config_seconds: 600.0,
        }
    }
}

impl Caps {
    pub fn paper_scale() -> Self {
        Caps {
            search_seconds: 43_200.0,
            total_seconds: 172_800.0,
            cell_seconds: 43_200.0,
            config_seconds: 600.0,
        }
    }
}

/// Everything a run needs. Unknown JSON fields are rejected so config typos
/// fail loudly.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Dataset manifest; relative paths resolve against the config file's
    /// directory when the config came from a file.
    pub manifest: PathBuf,
    /// Manifest datasets to run; empty means all of them.
    pub datasets: Vec<String>,
    pub grid: Grid,
    pub methods: Vec<Method>,
    pub repetitions: usize,
    /// Target adversarial success rate for radius calibration.
    pub eta_star: f64,
    /// Acceptance half-width around `eta_star`.
    pub band: f64,
    /// Bracket width at which calibration settles for the nearest attainable
    /// rate.
    pub margin: f64,
    /// Master seed; every stage stream derives from it.
    pub seed: u64,
    /// Seed fixing the held-out test fold. Kept apart from `seed` so
    /// repetitions reshuffle only the train/validation cut.
    pub test_seed: u64,
    /// Hyperparameter candidates per (method, repetition) cell.
    pub hpo_budget: usize,
    /// Verifier node budget per robustness query.
    pub node_budget: u64,
    pub caps: Caps,
    /// Artifact/report directory; `--out` and TREEGUARD_OUT_DIR win over it.
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            manifest: PathBuf::from("data/manifest.json"),
            datasets: Vec::new(),
            grid: Grid::default(),
            methods: Method::ALL.to_vec(),
            repetitions: 7,
            eta_star: 0.1,
            band: 0.02,
            margin: 1e-6,
            seed: 0,
            test_seed: 0,
            hpo_budget: 50,
            node_budget: DEFAULT_NODE_BUDGET,
            caps: Caps::default(),
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&mut self) -> Result<()> {
        if self.repetitions < 1 {
            bail!("repetitions must be at least 1");
        }
        if self.grid.depths.is_empty() || self.grid.trees.is_empty() {
            bail!("the grid needs at least one depth and one tree count");
        }
        if self.grid.depths.iter().any(|&v| v == 0) || self.grid.trees.iter().any(|&v| v == 0) {
            bail!("grid values must be positive");
        }
        for (cap, name) in [
            (self.caps.search_seconds, "search"),
            (self.caps.total_seconds, "total"),
            (self.caps.cell_seconds, "cell"),
            (self.caps.config_seconds, "config"),
        ] {
            if !(cap > 0.0) {
                bail!("the {name} cap must be positive");
            }
        }
        if !(self.eta_star > 0.0 && self.eta_star < 1.0) {
            bail!("eta_star must lie strictly between 0 and 1");
        }
        if !(self.band > 0.0 && self.margin > 0.0) {
            bail!("band and margin must be positive");
        }
        if self.hpo_budget < 1 {
            bail!("hpo_budget must be at least 1");
        }
        if self.node_budget < 1 {
            bail!("node_budget must be at least 1");
        }
        if self.methods.is_empty() {
            bail!("at least one training method is required");
        }
        let mut seen = Vec::new();
        self.methods.retain(|m| {
            let new = !seen.contains(m);
            seen.push(*m);
            new
        });
        // Sweep order relies on ascending grids; duplicates would double
        // cells silently.
        self.grid.depths.sort_unstable();
        self.grid.depths.dedup();
        self.grid.trees.sort_unstable();
        self.grid.trees.dedup();
        Ok(())
    }
}

/// Command-line values layered over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub manifest: Option<PathBuf>,
    pub datasets: Option<Vec<String>>,
    pub depths: Option<Vec<usize>>,
    pub trees: Option<Vec<usize>>,
    pub methods: Option<Vec<String>>,
    pub repetitions: Option<usize>,
    pub eta_star: Option<f64>,
    pub band: Option<f64>,
    pub margin: Option<f64>,
    pub seed: Option<u64>,
    pub test_seed: Option<u64>,
    pub hpo_budget: Option<usize>,
    pub node_budget: Option<u64>,
    pub paper_scale: bool,
    pub cap_search: Option<f64>,
    pub cap_total: Option<f64>,
    pub cap_cell: Option<f64>,
    pub cap_config: Option<f64>,
}

/// Loads the config file (or defaults), applies overrides, validates.
pub fn load(config_path: Option<&Path>, ov: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = match config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            let mut cfg: ExperimentConfig = serde_json::from_str(&text)
                .with_context(|| format!("parsing config {}", path.display()))?;
            // A relative manifest path in a config file means "next to me".
            if cfg.manifest.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.manifest = dir.join(&cfg.manifest);
                }
            }
            cfg
        }
        None => ExperimentConfig::default(),
    };

    if let Some(m) = &ov.manifest {
        cfg.manifest = m.clone();
    }
    if let Some(d) = &ov.datasets {
        cfg.datasets = d.clone();
    }
    if let Some(d) = &ov.depths {
        cfg.grid.depths = d.clone();
    }
    if let Some(t) = &ov.trees {
        cfg.grid.trees = t.clone();
    }
    if let Some(ms) = &ov.methods {
        cfg.methods = ms
            .iter()
            .map(|s| s.parse::<Method>().map_err(anyhow::Error::from))
            .collect::<Result<Vec<_>>>()?;
    }
    if let Some(r) = ov.repetitions {
        cfg.repetitions = r;
    }
    if let Some(v) = ov.eta_star {
        cfg.eta_star = v;
    }
    if let Some(v) = ov.band {
        cfg.band = v;
    }
    if let Some(v) = ov.margin {
        cfg.margin = v;
    }
    if let Some(v) = ov.seed {
        cfg.seed = v;
    }
    if let Some(v) = ov.test_seed {
        cfg.test_seed = v;
    }
    if let Some(v) = ov.hpo_budget {
        cfg.hpo_budget = v;
    }
    if let Some(v) = ov.node_budget {
        cfg.node_budget = v;
    }
    if ov.paper_scale {
        cfg.caps = Caps::paper_scale();
    }
    if let Some(v) = ov.cap_search {
        cfg.caps.search_seconds = v;
    }
    if let Some(v) = ov.cap_total {
        cfg.caps.total_seconds = v;
    }
    if let Some(v) = ov.cap_cell {
        cfg.caps.cell_seconds = v;
    }
    if let Some(v) = ov.cap_config {
        cfg.caps.config_seconds = v;
    }

    cfg.validate()?;
    Ok(cfg)
}

/// Artifact directory precedence: `--out` flag, then TREEGUARD_OUT_DIR, then
/// the config's `out_dir`, then `./out`.
pub fn resolve_out_dir(flag: Option<&Path>, cfg: &ExperimentConfig) -> PathBuf {
    if let Some(f) = flag {
        return f.to_path_buf();
    }
    if let Ok(v) = std::env::var(ENV_OUT_DIR) {
        if !v.is_empty() {
            return PathBuf::from(v);
        }
    }
    cfg.out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out"))
}
