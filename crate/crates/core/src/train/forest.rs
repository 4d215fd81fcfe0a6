//! Forest fitting: bootstrap resamples, per-node feature subsampling, the
//! method's split criterion, and Laplace-smoothed leaf distributions. Also
//! the uniform-noise augmentation used by noise-trained forests.

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::split::{self, ForestCriterion};
use super::{Method, TrainConfig};
use crate::data::Dataset;
use crate::exec;
use crate::rng::{stream, stream_rng};
use crate::trees::{Ensemble, EnsembleKind, ModelMeta, Node, Tree};
use crate::{Error, Result};

/// Appends `copies` perturbed duplicates of every row, with i.i.d. uniform
/// noise in [−radius, +radius] per feature clamped to the unit domain and
/// labels preserved.
pub fn augment_noise(d: &Dataset, radius: f64, copies: usize, seed: u64) -> Result<Dataset> {
    if !(radius >= 0.0) {
        return Err(Error::Train(format!("noise radius must be >= 0, got {radius}")));
    }
    let (x, y) = augment_rows(&d.x, &d.y, radius, copies, seed);
    Ok(Dataset {
        x,
        y,
        n_classes: d.n_classes,
        feature_names: d.feature_names.clone(),
        encoders: d.encoders.clone(),
        labels: d.labels.clone(),
        scalers: d.scalers.clone(),
    })
}

pub(super) fn augment_rows(
    x: &[Vec<f64>],
    y: &[usize],
    radius: f64,
    copies: usize,
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = stream_rng(seed, stream::NOISE);
    let mut xa = x.to_vec();
    let mut ya = y.to_vec();
    for (row, &label) in x.iter().zip(y) {
        for _ in 0..copies {
            let jittered = row
                .iter()
                .map(|&v| {
                    if radius == 0.0 {
                        v
                    } else {
                        (v + rng.gen_range(-radius..=radius)).clamp(0.0, 1.0)
                    }
                })
                .collect();
            xa.push(jittered);
            ya.push(label);
        }
    }
    (xa, ya)
}

/// Fits a forest of `n_trees` bootstrap trees. Trees build in parallel;
/// each derives its own generator from (seed, tree index), so parallel and
/// serial builds are identical.
pub(super) fn fit_forest(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    train: &[usize],
    cfg: &TrainConfig,
) -> Result<Ensemble> {
    let criterion = match cfg.method {
        Method::Rf | Method::NoisyRf => ForestCriterion::Gini,
        Method::GrootRf => ForestCriterion::RobustExact,
        Method::RobustRf => ForestCriterion::RobustHeur4,
        _ => return Err(Error::Train(format!("{} is not a forest method", cfg.method))),
    };
    let eps = match criterion {
        ForestCriterion::Gini => 0.0,
        _ => cfg.epsilon_train,
    };
    if criterion == ForestCriterion::RobustHeur4 && n_classes != 2 {
        return Err(Error::Train(
            "four-corner forests are binary; wrap multiclass in one-vs-rest".into(),
        ));
    }

    // Noise-trained forests fit on an augmented copy of the training rows.
    let augmented: Option<(Vec<Vec<f64>>, Vec<usize>)> = if cfg.method == Method::NoisyRf {
        let xs: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
        let ys: Vec<usize> = train.iter().map(|&i| y[i]).collect();
        let radius = cfg.noise_radius.unwrap_or(cfg.epsilon_train);
        Some(augment_rows(&xs, &ys, radius, cfg.noise_copies, cfg.seed))
    } else {
        None
    };
    let (xs, ys, idx): (&[Vec<f64>], &[usize], Vec<usize>) = match &augmented {
        Some((xa, ya)) => (xa, ya, (0..xa.len()).collect()),
        None => (x, y, train.to_vec()),
    };

    let n_features = xs[idx[0]].len();
    let trees: Vec<Result<Tree>> = exec::map_indexed(cfg.n_trees, |i| {
        let mut rng = stream_rng(cfg.seed, stream::TREE + i as u64);
        grow_tree(xs, ys, n_classes, n_features, &idx, cfg, criterion, eps, &mut rng)
    });
    let trees = trees.into_iter().collect::<Result<Vec<_>>>()?;

    Ok(Ensemble {
        kind: EnsembleKind::Forest,
        trees,
        n_classes,
        n_features,
        base_score: 0.0,
        meta: ModelMeta::default(),
    })
}

#[allow(clippy::too_many_arguments)]
fn grow_tree(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    n_features: usize,
    idx: &[usize],
    cfg: &TrainConfig,
    criterion: ForestCriterion,
    eps: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Tree> {
    let samples: Vec<usize> = if cfg.bootstrap {
        (0..idx.len()).map(|_| idx[rng.gen_range(0..idx.len())]).collect()
    } else {
        idx.to_vec()
    };
    let mut nodes = Vec::new();
    grow_node(
        &mut nodes, x, y, n_classes, n_features, samples, 0, cfg, criterion, eps, rng,
    )?;
    Ok(Tree {
        nodes,
        class_tag: None,
    })
}

/// Recursive preorder build; returns the new node's index.
#[allow(clippy::too_many_arguments)]
fn grow_node(
    nodes: &mut Vec<Node>,
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    n_features: usize,
    samples: Vec<usize>,
    depth: usize,
    cfg: &TrainConfig,
    criterion: ForestCriterion,
    eps: f64,
    rng: &mut ChaCha8Rng,
) -> Result<usize> {
    let mut counts = vec![0.0f64; n_classes];
    for &i in &samples {
        counts[y[i]] += 1.0;
    }

    let split = if depth >= cfg.max_depth || samples.len() < cfg.min_samples_split {
        None
    } else {
        let features = sample_features(n_features, cfg.feature_subsample, rng);
        let parent = split::gini(&counts)?;
        split::best_split_forest(x, y, &samples, &features, n_classes, eps, criterion, parent)
    };

    match split {
        None => {
            // Laplace-smoothed class distribution of the reaching samples
            let total = samples.len() as f64 + n_classes as f64;
            let value = counts.iter().map(|&c| (c + 1.0) / total).collect();
            nodes.push(Node::Leaf { value });
            Ok(nodes.len() - 1)
        }
        Some((feature, threshold, _)) => {
            let id = nodes.len();
            nodes.push(Node::Internal {
                feature,
                threshold,
                left: 0,
                right: 0,
            });
            let (ls, rs): (Vec<usize>, Vec<usize>) =
                samples.into_iter().partition(|&i| x[i][feature] <= threshold);
            let left = grow_node(
                nodes, x, y, n_classes, n_features, ls, depth + 1, cfg, criterion, eps, rng,
            )?;
            let right = grow_node(
                nodes, x, y, n_classes, n_features, rs, depth + 1, cfg, criterion, eps, rng,
            )?;
            if let Node::Internal {
                left: l, right: r, ..
            } = &mut nodes[id]
            {
                *l = left;
                *r = right;
            }
            Ok(id)
        }
    }
}

/// Ascending per-node feature subset: round(frac·d) of the d features,
/// at least one. The full set skips the generator entirely.
fn sample_features(d: usize, frac: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let k = ((frac * d as f64).round() as usize).clamp(1, d);
    if k == d {
        (0..d).collect()
    } else {
        let mut v = index::sample(rng, d, k).into_vec();
        v.sort_unstable();
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (Vec<Vec<f64>>, Vec<usize>) {
        (
            vec![vec![0.1], vec![0.2], vec![0.8], vec![0.9]],
            vec![0, 0, 1, 1],
        )
    }

    fn cfg(method: Method) -> TrainConfig {
        TrainConfig {
            method,
            n_trees: 1,
            max_depth: 1,
            bootstrap: false,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn separable_data_yields_a_perfect_stump() {
        let (x, y) = toy();
        let e = fit_forest(&x, &y, 2, &[0, 1, 2, 3], &cfg(Method::Rf)).unwrap();
        assert_eq!(e.trees[0].depth(), 1);
        for (row, &label) in x.iter().zip(&y) {
            assert_eq!(e.predict(row), label);
        }
    }

    #[test]
    fn bootstrap_fits_are_seed_deterministic() {
        let (x, y) = toy();
        let mut c = cfg(Method::Rf);
        c.n_trees = 5;
        c.max_depth = 3;
        c.bootstrap = true;
        c.seed = 9;
        let a = fit_forest(&x, &y, 2, &[0, 1, 2, 3], &c).unwrap();
        let b = fit_forest(&x, &y, 2, &[0, 1, 2, 3], &c).unwrap();
        assert_eq!(a.to_json(true).unwrap(), b.to_json(true).unwrap());
    }

    #[test]
    fn zero_band_robust_forest_equals_the_standard_one() {
        let x: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i as f64) / 39.0, ((i * 7 % 40) as f64) / 39.0])
            .collect();
        let y: Vec<usize> = (0..40).map(|i| usize::from(i % 3 == 0)).collect();
        let idx: Vec<usize> = (0..40).collect();
        let mut groot = cfg(Method::GrootRf);
        groot.n_trees = 7;
        groot.max_depth = 4;
        groot.bootstrap = true;
        groot.epsilon_train = 0.0;
        let mut rf = groot.clone();
        rf.method = Method::Rf;
        let a = fit_forest(&x, &y, 2, &idx, &groot).unwrap();
        let b = fit_forest(&x, &y, 2, &idx, &rf).unwrap();
        assert_eq!(a.to_json(true).unwrap(), b.to_json(true).unwrap());
    }

    #[test]
    fn noise_augmentation_duplicates_and_bounds() {
        let (x, y) = toy();
        let (xa, ya) = augment_rows(&x, &y, 0.0, 1, 3);
        assert_eq!(xa.len(), 8);
        assert_eq!(&xa[4..], &x[..]);
        assert_eq!(&ya[4..], &y[..]);

        let (xb, _) = augment_rows(&x, &y, 0.0, 0, 3);
        assert_eq!(xb, x);

        let (xc, _) = augment_rows(&x, &y, 0.1, 2, 3);
        assert_eq!(xc.len(), 12);
        for (k, row) in xc[4..].iter().enumerate() {
            let orig = &x[k / 2];
            for (a, b) in row.iter().zip(orig) {
                assert!((a - b).abs() <= 0.1 + 1e-15);
                assert!((0.0..=1.0).contains(a));
            }
        }
    }

    #[test]
    fn feature_subsampling_stays_deterministic() {
        let x: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![(i as f64) / 29.0, ((i * 11 % 30) as f64) / 29.0, ((i * 3 % 30) as f64) / 29.0])
            .collect();
        let y: Vec<usize> = (0..30).map(|i| usize::from(i % 2 == 0)).collect();
        let idx: Vec<usize> = (0..30).collect();
        let mut c = cfg(Method::Rf);
        c.n_trees = 4;
        c.max_depth = 3;
        c.bootstrap = true;
        c.feature_subsample = 0.5;
        let a = fit_forest(&x, &y, 2, &idx, &c).unwrap();
        let b = fit_forest(&x, &y, 2, &idx, &c).unwrap();
        assert_eq!(a.to_json(true).unwrap(), b.to_json(true).unwrap());
    }
}
