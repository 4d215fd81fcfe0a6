//! Split scoring for forest training: standard Gini impurity, the exact
//! adversarial criterion (worst case over all per-class assignments of
//! band samples), the four-corner heuristic, and the threshold sweep
//! shared by every forest method.
//!
//! A sample whose feature value lies in the ambiguity band (t−ε, t+ε] can
//! be pushed to either side of a split at t by an ε-bounded perturbation;
//! robust criteria score a split by its worst case over those assignments.

use crate::{Error, Result};

/// Per-class tallies of a candidate split: samples definitely left
/// (value ≤ t−ε), definitely right (value > t+ε), and ambiguous
/// (value in (t−ε, t+ε]).
#[derive(Clone, Debug, PartialEq)]
pub struct SplitStats {
    pub feature: usize,
    pub threshold: f64,
    pub left: Vec<u32>,
    pub right: Vec<u32>,
    pub ambiguous: Vec<u32>,
}

impl SplitStats {
    fn check(&self) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let c = self.left.len();
        if c == 0 || self.right.len() != c || self.ambiguous.len() != c {
            return Err(Error::Train("split stats: mismatched class arity".into()));
        }
        let total: u64 = self
            .left
            .iter()
            .chain(&self.right)
            .chain(&self.ambiguous)
            .map(|&k| k as u64)
            .sum();
        if total == 0 {
            return Err(Error::Train("split stats: empty node".into()));
        }
        let f = |v: &[u32]| v.iter().map(|&k| k as f64).collect();
        Ok((f(&self.left), f(&self.right), f(&self.ambiguous)))
    }
}

/// Gini impurity 1 − Σ p_c² of a class-count vector.
pub fn gini(counts: &[f64]) -> Result<f64> {
    let total: f64 = counts.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Train("gini of an empty node".into()));
    }
    Ok(gini_unchecked(counts, total))
}

fn gini_unchecked(counts: &[f64], total: f64) -> f64 {
    let mut sq = 0.0;
    for &c in counts {
        let p = c / total;
        sq += p * p;
    }
    1.0 - sq
}

/// Σ_side (n_side/n) · gini(side). Empty sides contribute zero. Every
/// criterion funnels through this one function so that equal inputs give
/// bit-equal scores across methods.
pub(crate) fn weighted_gini(left: &[f64], right: &[f64]) -> f64 {
    let nl: f64 = left.iter().sum();
    let nr: f64 = right.iter().sum();
    let n = nl + nr;
    let mut w = 0.0;
    if nl > 0.0 {
        w += nl / n * gini_unchecked(left, nl);
    }
    if nr > 0.0 {
        w += nr / n * gini_unchecked(right, nr);
    }
    w
}

/// Worst-case (maximum) weighted Gini over all adversarial assignments of
/// ambiguous samples. Samples of one class are interchangeable, so the
/// search enumerates per-class left-counts rather than per-sample choices.
/// Lower is better.
pub fn robust_split_score_exact(s: &SplitStats) -> Result<f64> {
    let (l, r, a) = s.check()?;
    Ok(score_exact(&l, &r, &a))
}

/// Maximum weighted Gini over the four corner assignments of ambiguous
/// samples: all left, all right, class-0 left with class-1 right, and the
/// swap. Binary classification only; lower is better.
pub fn robust_split_score_heuristic4(s: &SplitStats) -> Result<f64> {
    if s.left.len() != 2 {
        return Err(Error::Train(
            "four-corner criterion needs binary labels; wrap multiclass in one-vs-rest".into(),
        ));
    }
    let (l, r, a) = s.check()?;
    Ok(score_heur4(&l, &r, &a))
}

/// Exact criterion core. For fixed assignments of all other classes, the
/// weighted Gini is concave in one class's left-count (quadratic-over-linear
/// terms are convex, and the score is their negated sum plus a constant), so
/// the class with the largest band count is maximized by a warm-started
/// local ascent while the remaining classes are enumerated outright.
fn score_exact(left: &[f64], right: &[f64], amb: &[f64]) -> f64 {
    let c = left.len();
    let axes: Vec<(usize, u32)> = amb
        .iter()
        .enumerate()
        .filter(|&(_, &m)| m > 0.0)
        .map(|(k, &m)| (k, m as u32))
        .collect();
    if axes.is_empty() {
        return weighted_gini(left, right);
    }
    let climb_pos = axes
        .iter()
        .enumerate()
        .max_by_key(|&(_, &(_, m))| m)
        .map(|(p, _)| p)
        .unwrap();
    let (climb_axis, climb_m) = axes[climb_pos];
    let outer: Vec<(usize, u32)> = axes
        .iter()
        .enumerate()
        .filter(|&(p, _)| p != climb_pos)
        .map(|(_, &ax)| ax)
        .collect();

    let mut l = vec![0.0; c];
    let mut r = vec![0.0; c];
    let mut jo = vec![0u32; outer.len()];
    let mut warm = 0u32;
    let mut best = f64::NEG_INFINITY;
    loop {
        let (next_warm, v) = climb_concave(climb_m, warm, |j| {
            eval_alloc(left, right, amb, &outer, &jo, climb_axis, j, &mut l, &mut r)
        });
        warm = next_warm;
        if v > best {
            best = v;
        }
        // odometer over the enumerated axes
        let mut pos = 0;
        loop {
            if pos == outer.len() {
                return best;
            }
            jo[pos] += 1;
            if jo[pos] <= outer[pos].1 {
                break;
            }
            jo[pos] = 0;
            pos += 1;
        }
    }
}

/// Weighted Gini of the assignment sending `jo[k]` band samples of outer
/// axis k and `j` of the climb axis to the left.
#[allow(clippy::too_many_arguments)]
fn eval_alloc(
    left: &[f64],
    right: &[f64],
    amb: &[f64],
    outer: &[(usize, u32)],
    jo: &[u32],
    climb_axis: usize,
    j: u32,
    l: &mut [f64],
    r: &mut [f64],
) -> f64 {
    for k in 0..left.len() {
        l[k] = left[k];
        r[k] = right[k] + amb[k];
    }
    for (pos, &(axis, _)) in outer.iter().enumerate() {
        let jj = jo[pos] as f64;
        l[axis] += jj;
        r[axis] -= jj;
    }
    let jj = j as f64;
    l[climb_axis] += jj;
    r[climb_axis] -= jj;
    weighted_gini(l, r)
}

/// Maximum of a concave integer sequence on [0, m] by local ascent from a
/// warm start. Both endpoints are also evaluated so corner assignments are
/// never missed to a rounding-induced early stop. Returns (final ascent
/// position as the next warm start, best value seen).
fn climb_concave<F: FnMut(u32) -> f64>(m: u32, warm: u32, mut f: F) -> (u32, f64) {
    let mut j = warm.min(m);
    let mut v = f(j);
    loop {
        let mut moved = false;
        if j < m {
            let up = f(j + 1);
            if up > v {
                j += 1;
                v = up;
                moved = true;
            }
        }
        if !moved && j > 0 {
            let down = f(j - 1);
            if down > v {
                j -= 1;
                v = down;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    let mut best = v;
    if m > 0 {
        best = best.max(f(0)).max(f(m));
    }
    (j, best)
}

/// Four-corner heuristic core (binary only).
fn score_heur4(left: &[f64], right: &[f64], amb: &[f64]) -> f64 {
    let corners = [
        [amb[0], amb[1]], // all ambiguous left
        [0.0, 0.0],       // all ambiguous right
        [amb[0], 0.0],    // class 0 left, class 1 right
        [0.0, amb[1]],    // class 1 left, class 0 right
    ];
    let mut best = f64::NEG_INFINITY;
    for corner in corners {
        let l = [left[0] + corner[0], left[1] + corner[1]];
        let r = [
            right[0] + amb[0] - corner[0],
            right[1] + amb[1] - corner[1],
        ];
        best = best.max(weighted_gini(&l, &r));
    }
    best
}

/// Which score a forest node minimizes over candidate splits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum ForestCriterion {
    Gini,
    RobustExact,
    RobustHeur4,
}

/// Best split over the given features for the node's samples, or None when
/// no candidate improves on `parent_score` by more than 1e-12. Candidates
/// are midpoints of consecutive distinct values; ties break toward the
/// lowest feature index, then the lowest threshold (features must be passed
/// in ascending order). The band pointers advance monotonically with the
/// threshold, so each feature costs one sort plus a linear sweep.
pub(crate) fn best_split_forest(
    x: &[Vec<f64>],
    y: &[usize],
    idx: &[usize],
    features: &[usize],
    n_classes: usize,
    eps: f64,
    criterion: ForestCriterion,
    parent_score: f64,
) -> Option<(usize, f64, f64)> {
    debug_assert!(criterion != ForestCriterion::Gini || eps == 0.0);
    let n = idx.len();
    let mut best: Option<(usize, f64, f64)> = None;
    let mut pairs: Vec<(f64, usize)> = Vec::with_capacity(n);
    for &f in features {
        pairs.clear();
        pairs.extend(idx.iter().map(|&i| (x[i][f], y[i])));
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

        let mut left = vec![0.0f64; n_classes];
        let mut amb = vec![0.0f64; n_classes];
        let mut right = vec![0.0f64; n_classes];
        for &(_, cl) in &pairs {
            right[cl] += 1.0;
        }
        let (mut p_lo, mut p_hi) = (0usize, 0usize);
        for k in 0..n.saturating_sub(1) {
            let (a, b) = (pairs[k].0, pairs[k + 1].0);
            if a >= b {
                continue; // equal values: no boundary here
            }
            let mut t = (a + b) / 2.0;
            if t >= b {
                // adjacent floats round the midpoint up; fall back to the
                // lower value so b still routes right under "≤ t goes left"
                t = a;
            }
            let lo_cut = t - eps;
            let hi_cut = t + eps;
            while p_hi < n && pairs[p_hi].0 <= hi_cut {
                let c = pairs[p_hi].1;
                amb[c] += 1.0;
                right[c] -= 1.0;
                p_hi += 1;
            }
            while p_lo < p_hi && pairs[p_lo].0 <= lo_cut {
                let c = pairs[p_lo].1;
                left[c] += 1.0;
                amb[c] -= 1.0;
                p_lo += 1;
            }
            let score = match criterion {
                ForestCriterion::Gini => weighted_gini(&left, &right),
                ForestCriterion::RobustExact => score_exact(&left, &right, &amb),
                ForestCriterion::RobustHeur4 => score_heur4(&left, &right, &amb),
            };
            if best.map_or(true, |(_, _, s)| score < s) {
                best = Some((f, t, score));
            }
        }
    }
    best.filter(|&(_, _, s)| parent_score - s > 1e-12)
}
