//! Gradient-boosted trees with binary logistic loss and second-order split
//! gains. The robust variant charges each candidate split its worst case
//! over adversarial assignments of ambiguity-band samples' gradient and
//! hessian mass.

use super::{Method, TrainConfig};
use crate::trees::{Ensemble, EnsembleKind, ModelMeta, Node, Tree};
use crate::{Error, Result};

/// Leaf-weight regularizer in gain and weight formulas.
const LAMBDA: f64 = 1.0;

fn sigmoid(s: f64) -> f64 {
    1.0 / (1.0 + (-s).exp())
}

/// Fits a binary logistic boosted model: per round a regression tree on
/// gradients g = p − y and hessians h = p(1−p), leaf weight
/// −Σg/(Σh + λ) scaled by the learning rate. The trees carry class tag 1,
/// so a positive total logit predicts class 1.
pub(super) fn fit_gbt(
    x: &[Vec<f64>],
    y: &[usize],
    train: &[usize],
    cfg: &TrainConfig,
) -> Result<Ensemble> {
    if y.iter().any(|&c| c > 1) {
        return Err(Error::Train(
            "boosted fitting is binary; wrap multiclass in one-vs-rest".into(),
        ));
    }
    let robust = cfg.method == Method::RobustTrees;
    let eps = if robust { cfg.epsilon_train } else { 0.0 };
    let n = train.len();
    let n_features = x[train[0]].len();

    let mut score = vec![cfg.base_score; n];
    let mut g = vec![0.0f64; n];
    let mut h = vec![0.0f64; n];
    let mut trees = Vec::with_capacity(cfg.n_trees);
    for _ in 0..cfg.n_trees {
        for k in 0..n {
            let p = sigmoid(score[k]);
            g[k] = p - (y[train[k]] as f64);
            h[k] = p * (1.0 - p);
        }
        let mut nodes = Vec::new();
        grow_node(
            &mut nodes,
            x,
            train,
            &g,
            &h,
            (0..n).collect(),
            0,
            n_features,
            cfg,
            robust,
            eps,
        );
        let tree = Tree {
            nodes,
            class_tag: Some(1),
        };
        for (s, &row) in score.iter_mut().zip(train) {
            *s += tree.value_for(&x[row])[0];
        }
        trees.push(tree);
    }

    Ok(Ensemble {
        kind: EnsembleKind::Boosted,
        trees,
        n_classes: 2,
        n_features,
        base_score: cfg.base_score,
        meta: ModelMeta::default(),
    })
}

/// Recursive preorder build over positions into `train`/`g`/`h`.
#[allow(clippy::too_many_arguments)]
fn grow_node(
    nodes: &mut Vec<Node>,
    x: &[Vec<f64>],
    train: &[usize],
    g: &[f64],
    h: &[f64],
    samples: Vec<usize>,
    depth: usize,
    n_features: usize,
    cfg: &TrainConfig,
    robust: bool,
    eps: f64,
) -> usize {
    let gsum: f64 = samples.iter().map(|&k| g[k]).sum();
    let hsum: f64 = samples.iter().map(|&k| h[k]).sum();

    let split = if depth >= cfg.max_depth || samples.len() < cfg.min_samples_split {
        None
    } else {
        best_split(x, train, g, h, &samples, n_features, robust, eps, gsum, hsum)
    };

    match split {
        None => {
            let w = -gsum / (hsum + LAMBDA) * cfg.learning_rate;
            nodes.push(Node::Leaf { value: vec![w] });
            nodes.len() - 1
        }
        Some((feature, threshold, _)) => {
            let id = nodes.len();
            nodes.push(Node::Internal {
                feature,
                threshold,
                left: 0,
                right: 0,
            });
            let (ls, rs): (Vec<usize>, Vec<usize>) = samples
                .into_iter()
                .partition(|&k| x[train[k]][feature] <= threshold);
            let left = grow_node(nodes, x, train, g, h, ls, depth + 1, n_features, cfg, robust, eps);
            let right = grow_node(nodes, x, train, g, h, rs, depth + 1, n_features, cfg, robust, eps);
            if let Node::Internal {
                left: l, right: r, ..
            } = &mut nodes[id]
            {
                *l = left;
                *r = right;
            }
            id
        }
    }
}

/// Second-order gain of a (G_L, H_L | G_R, H_R) partition against the
/// unsplit parent.
fn gain_of(gl: f64, hl: f64, gr: f64, hr: f64, gsum: f64, hsum: f64) -> f64 {
    0.5 * (gl * gl / (hl + LAMBDA) + gr * gr / (hr + LAMBDA) - gsum * gsum / (hsum + LAMBDA))
}

/// Best split by maximal gain, or None when no candidate gains more than
/// 1e-12. The robust variant takes each candidate's minimum gain over five
/// assignments of the band's (g, h) mass: where the samples naturally fall,
/// all left, all right, and the two per-class corner swaps — the natural
/// assignment is always available to the adversary, so the robust gain
/// never exceeds the standard one.
#[allow(clippy::too_many_arguments)]
fn best_split(
    x: &[Vec<f64>],
    train: &[usize],
    g: &[f64],
    h: &[f64],
    samples: &[usize],
    n_features: usize,
    robust: bool,
    eps: f64,
    gsum: f64,
    hsum: f64,
) -> Option<(usize, f64, f64)> {
    let n = samples.len();
    let mut best: Option<(usize, f64, f64)> = None;
    // per-sample (value, g, h, g·[y=0], h·[y=0]) sorted by value
    let mut rows: Vec<(f64, f64, f64)> = Vec::with_capacity(n);
    for f in 0..n_features {
        rows.clear();
        rows.extend(samples.iter().map(|&k| (x[train[k]][f], g[k], h[k])));
        rows.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

        // prefix sums: pg[i] = Σ g over the first i sorted samples
        let mut pg = Vec::with_capacity(n + 1);
        let mut ph = Vec::with_capacity(n + 1);
        pg.push(0.0);
        ph.push(0.0);
        for &(_, gi, hi) in &rows {
            pg.push(pg.last().unwrap() + gi);
            ph.push(ph.last().unwrap() + hi);
        }

        let (mut p_lo, mut p_mid, mut p_hi) = (0usize, 0usize, 0usize);
        for k in 0..n - 1 {
            let (a, b) = (rows[k].0, rows[k + 1].0);
            if a >= b {
                continue;
            }
            let mut t = (a + b) / 2.0;
            if t >= b {
                t = a;
            }
            let lo_cut = t - eps;
            let hi_cut = t + eps;
            while p_hi < n && rows[p_hi].0 <= hi_cut {
                p_hi += 1;
            }
            while p_mid < n && rows[p_mid].0 <= t {
                p_mid += 1;
            }
            while p_lo < p_hi && rows[p_lo].0 <= lo_cut {
                p_lo += 1;
            }

            // natural assignment: band samples stay on their own side
            let gain_nat = gain_of(
                pg[p_mid],
                ph[p_mid],
                gsum - pg[p_mid],
                hsum - ph[p_mid],
                gsum,
                hsum,
            );
            let gain = if !robust {
                gain_nat
            } else {
                // band totals and the positive-gradient share used by the
                // per-class corners (g > 0 ⇔ the boosted stage currently
                // over-predicts the sample, i.e. true label 0)
                let mut cand = gain_nat;
                let (bg, bh) = (pg[p_hi] - pg[p_lo], ph[p_hi] - ph[p_lo]);
                let mut bg0 = 0.0;
                let mut bh0 = 0.0;
                for r in &rows[p_lo..p_hi] {
                    if r.1 > 0.0 {
                        bg0 += r.1;
                        bh0 += r.2;
                    }
                }
                let corners = [
                    (bg, bh),             // all band left
                    (0.0, 0.0),           // all band right
                    (bg0, bh0),           // label-0 mass left
                    (bg - bg0, bh - bh0), // label-1 mass left
                ];
                for (cg, ch) in corners {
                    let gl = pg[p_lo] + cg;
                    let hl = ph[p_lo] + ch;
                    let gain_c = gain_of(gl, hl, gsum - gl, hsum - hl, gsum, hsum);
                    cand = cand.min(gain_c);
                }
                cand
            };
            if best.map_or(true, |(_, _, s)| gain > s) {
                best = Some((f, t, gain));
            }
        }
    }
    best.filter(|&(_, _, s)| s > 1e-12)
}
