//! Ensemble training: standard and robust forests (plain Gini, exact
//! adversarial splits, the four-corner heuristic, noise augmentation) and
//! boosted models (standard and robust second-order gains), plus the
//! one-vs-rest wrapper that lifts binary-only methods to multiclass.

mod forest;
mod gbt;
mod split;

pub use forest::augment_noise;
pub use split::{gini, robust_split_score_exact, robust_split_score_heuristic4, SplitStats};

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::rng::{derive_seed, stream};
use crate::trees::{Ensemble, EnsembleKind, ModelMeta};
use crate::{Error, Result};

/// Training method. Forest methods fit multiclass natively except the
/// four-corner heuristic; boosted methods are binary and both it and they
/// go through one-vs-rest for more classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Rf,
    GrootRf,
    RobustRf,
    NoisyRf,
    Gbt,
    RobustTrees,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Rf,
        Method::GrootRf,
        Method::RobustRf,
        Method::NoisyRf,
        Method::Gbt,
        Method::RobustTrees,
    ];

    pub fn is_forest(self) -> bool {
        !matches!(self, Method::Gbt | Method::RobustTrees)
    }

    /// Methods whose native fit handles only two classes.
    pub fn is_binary_only(self) -> bool {
        matches!(self, Method::RobustRf | Method::Gbt | Method::RobustTrees)
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Rf => "rf",
            Method::GrootRf => "groot-rf",
            Method::RobustRf => "robust-rf",
            Method::NoisyRf => "noisy-rf",
            Method::Gbt => "gbt",
            Method::RobustTrees => "robust-trees",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Train(format!("unknown method '{s}'")))
    }
}

/// All knobs of a single fit. Unknown fields are rejected when read from
/// JSON so config typos fail loudly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub method: Method,
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    /// Fraction of features drawn per node (forests).
    pub feature_subsample: f64,
    /// Shrinkage on leaf weights (boosted).
    pub learning_rate: f64,
    /// Initial logit (boosted).
    pub base_score: f64,
    /// Training-time perturbation radius for the robust criteria.
    pub epsilon_train: f64,
    /// Noise radius for augmentation; defaults to epsilon_train.
    pub noise_radius: Option<f64>,
    /// Augmented copies per training row.
    pub noise_copies: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            method: Method::Rf,
            n_trees: 25,
            max_depth: 5,
            min_samples_split: 2,
            feature_subsample: 1.0,
            learning_rate: 0.3,
            base_score: 0.0,
            epsilon_train: 0.0,
            noise_radius: None,
            noise_copies: 3,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees < 1 {
            return Err(Error::Train("n_trees must be at least 1".into()));
        }
        if self.max_depth < 1 {
            return Err(Error::Train("max_depth must be at least 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::Train("min_samples_split must be at least 2".into()));
        }
        if !(self.feature_subsample > 0.0 && self.feature_subsample <= 1.0) {
            return Err(Error::Train("feature_subsample must lie in (0, 1]".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Train("learning_rate must lie in (0, 1]".into()));
        }
        if !(self.epsilon_train >= 0.0) || !self.epsilon_train.is_finite() {
            return Err(Error::Train("epsilon_train must be finite and >= 0".into()));
        }
        if let Some(r) = self.noise_radius {
            if !(r >= 0.0) || !r.is_finite() {
                return Err(Error::Train("noise_radius must be finite and >= 0".into()));
            }
        }
        if !self.base_score.is_finite() {
            return Err(Error::Train("base_score must be finite".into()));
        }
        Ok(())
    }
}

/// Fits config.method on the given training rows of `d`. Binary-only
/// methods on multiclass data go through one-vs-rest with the shared
/// config. The returned model records the method, the config, and the fit's
/// wall-clock seconds in its metadata.
pub fn fit(d: &Dataset, train: &[usize], cfg: &TrainConfig) -> Result<Ensemble> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Train("empty training split".into()));
    }
    if let Some(&bad) = train.iter().find(|&&i| i >= d.n_samples()) {
        return Err(Error::Train(format!("training row {bad} out of range")));
    }
    let started = Instant::now();
    let mut e = fit_inner(&d.x, &d.y, d.n_classes, train, cfg)?;
    e.meta = ModelMeta {
        method: cfg.method.name().to_string(),
        train_seconds: started.elapsed().as_secs_f64(),
        config: serde_json::to_value(cfg)?,
    };
    debug_assert!(e.validate().is_ok());
    Ok(e)
}

fn fit_inner(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    train: &[usize],
    cfg: &TrainConfig,
) -> Result<Ensemble> {
    if n_classes > 2 && cfg.method.is_binary_only() {
        return fit_ovr(x, y, n_classes, train, cfg);
    }
    if cfg.method.is_forest() {
        forest::fit_forest(x, y, n_classes, train, cfg)
    } else {
        gbt::fit_gbt(x, y, train, cfg)
    }
}

/// One binary model per class on "this class against the rest", all sharing
/// the config; per-class seeds derive from the shared seed so the composite
/// stays deterministic. Trees are retagged with their class so the composite
/// scores argmax over per-class positive scores.
fn fit_ovr(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    train: &[usize],
    cfg: &TrainConfig,
) -> Result<Ensemble> {
    let mut trees = Vec::with_capacity(cfg.n_trees * n_classes);
    let mut kind = EnsembleKind::Forest;
    for c in 0..n_classes {
        let y_c: Vec<usize> = y.iter().map(|&label| usize::from(label == c)).collect();
        let sub_cfg = TrainConfig {
            seed: derive_seed(cfg.seed, stream::CLASS + c as u64),
            ..cfg.clone()
        };
        let sub = if cfg.method.is_forest() {
            forest::fit_forest(x, &y_c, 2, train, &sub_cfg)?
        } else {
            gbt::fit_gbt(x, &y_c, train, &sub_cfg)?
        };
        kind = sub.kind;
        for mut t in sub.trees {
            t.class_tag = Some(c);
            trees.push(t);
        }
    }
    Ok(Ensemble {
        kind,
        trees,
        n_classes,
        n_features: x[train[0]].len(),
        base_score: if kind == EnsembleKind::Boosted {
            cfg.base_score
        } else {
            0.0
        },
        meta: ModelMeta::default(),
    })
}
