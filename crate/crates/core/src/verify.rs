//! Exact l-infinity robustness verification: feasibility at a given radius
//! via best-first branch and bound over axis-aligned boxes, minimal-distance
//! bracketing by bisection, and the derived test-set metrics (adversarial
//! accuracy and the adversarial success rate).
//!
//! The search is exact: score bounds over a box come from per-tree
//! reachable-leaf extremes, boxes split at tree thresholds, and a box that
//! reaches a single leaf in every tree has bit-exact bounds. A node budget
//! turns oversized searches into an explicit Timeout — never a wrong
//! verdict.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::exec;
use crate::trees::{argmax_lowest, BoundsScratch, BoxRegion, Ensemble, Node};
use crate::{Error, Result};

/// Explored-box cap per query. Deterministic stand-in for a wall-clock cap.
pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

/// One feasibility question: can any point within `eps` of `x` (l-infinity,
/// clamped to the unit domain) change the prediction away from `y_pred`?
pub struct Query<'a> {
    pub ensemble: &'a Ensemble,
    pub x: &'a [f64],
    pub y_pred: usize,
    pub eps: f64,
    /// Cached witness from an earlier query on the same sample; if it still
    /// lies in the ball and still flips, the search is skipped entirely.
    pub warm_start: Option<&'a [f64]>,
    pub node_budget: u64,
}

impl<'a> Query<'a> {
    pub fn new(ensemble: &'a Ensemble, x: &'a [f64], eps: f64) -> Self {
        Query {
            ensemble,
            x,
            y_pred: ensemble.predict(x),
            eps,
            warm_start: None,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Robust,
    Vulnerable { witness: Vec<f64>, prediction: usize },
    Timeout,
}

#[derive(Clone, Debug)]
pub struct RobustnessResult {
    pub verdict: Verdict,
    pub nodes: u64,
    pub seconds: f64,
}

/// Two-sided bracket on a sample's minimal adversarial distance: every
/// perturbation of size ≤ lo is proven harmless, and the witness at
/// distance hi flips the prediction. `complete` is false when a node-budget
/// timeout stopped the bisection early.
#[derive(Clone, Debug)]
pub struct DistanceBracket {
    pub lo: f64,
    pub hi: f64,
    pub witness: Option<Vec<f64>>,
    pub complete: bool,
}

pub(crate) fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max)
}

/// Exact feasibility decision for one query.
///
/// Best-first over boxes ordered by the largest rival upper-bound margin
/// (feasibility first: the box most able to flip is explored next). A box
/// prunes when no rival class can reach the predicted class's lower bound
/// (ties lose to the lower class index, so lower rivals prune strictly,
/// higher rivals at equality); a box reaching one leaf per tree has exact
/// scores and either yields a witness or prunes; anything else splits at
/// the threshold straddled in the most trees.
pub fn check_robust(q: &Query) -> Result<RobustnessResult> {
    let e = q.ensemble;
    let d = e.n_features;
    if q.x.len() != d {
        return Err(Error::Model("query dimension mismatch".into()));
    }
    if !(q.eps >= 0.0) || !q.eps.is_finite() {
        return Err(Error::Search(format!("invalid radius {}", q.eps)));
    }
    if q.x.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::Search("query point outside the unit domain".into()));
    }
    let started = Instant::now();

    // cached witness: accept only if it still proves vulnerability here
    if let Some(z) = q.warm_start {
        if z.len() == d
            && z.iter().all(|&v| (0.0..=1.0).contains(&v))
            && linf(z, q.x) <= q.eps
        {
            let pred = e.predict(z);
            if pred != q.y_pred {
                return Ok(RobustnessResult {
                    verdict: Verdict::Vulnerable {
                        witness: z.to_vec(),
                        prediction: pred,
                    },
                    nodes: 0,
                    seconds: started.elapsed().as_secs_f64(),
                });
            }
        }
    }

    let mut search = Search {
        e,
        x: q.x,
        y_pred: q.y_pred,
        budget: q.node_budget,
        nodes: 0,
        scratch: BoundsScratch::default(),
        lo: vec![0.0; e.n_classes],
        hi: vec![0.0; e.n_classes],
    };
    let mut heap: BinaryHeap<WorkItem> = BinaryHeap::new();
    let mut seq = 0u64;

    let root = BoxRegion::around(q.x, q.eps);
    let verdict = 'search: {
        match search.evaluate(&root) {
            Eval::Budget => break 'search Verdict::Timeout,
            Eval::Prune => break 'search Verdict::Robust,
            Eval::Flip(w, p) => {
                break 'search Verdict::Vulnerable {
                    witness: w,
                    prediction: p,
                }
            }
            Eval::Open(margin) => heap.push(WorkItem {
                margin,
                seq,
                region: root,
            }),
        }
        while let Some(item) = heap.pop() {
            let (feature, threshold) = most_straddled(e, &item.region)
                .expect("open box must straddle a threshold");
            let mut left = item.region.clone();
            left.hi[feature] = left.hi[feature].min(threshold);
            let mut right = item.region;
            right.lo[feature] = right.lo[feature].max(threshold.next_up());
            for child in [left, right] {
                match search.evaluate(&child) {
                    Eval::Budget => break 'search Verdict::Timeout,
                    Eval::Prune => {}
                    Eval::Flip(w, p) => {
                        break 'search Verdict::Vulnerable {
                            witness: w,
                            prediction: p,
                        }
                    }
                    Eval::Open(margin) => {
                        seq += 1;
                        heap.push(WorkItem {
                            margin,
                            seq,
                            region: child,
                        });
                    }
                }
            }
        }
        Verdict::Robust
    };

    Ok(RobustnessResult {
        verdict,
        nodes: search.nodes,
        seconds: started.elapsed().as_secs_f64(),
    })
}

struct Search<'a> {
    e: &'a Ensemble,
    x: &'a [f64],
    y_pred: usize,
    budget: u64,
    nodes: u64,
    scratch: BoundsScratch,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

enum Eval {
    /// No point in the box can flip the prediction.
    Prune,
    /// Exact flip found: closest point of the containing cell, new class.
    Flip(Vec<f64>, usize),
    /// Unresolved; carries the best rival margin for the search order.
    Open(f64),
    /// Node budget exhausted.
    Budget,
}

impl Search<'_> {
    fn evaluate(&mut self, b: &BoxRegion) -> Eval {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Eval::Budget;
        }
        let single = self
            .e
            .score_bounds_into(b, &mut self.scratch, &mut self.lo, &mut self.hi);
        if single {
            // bounds are the exact scores of every point in the box
            let pred = argmax_lowest(&self.lo);
            if pred == self.y_pred {
                return Eval::Prune;
            }
            // widen to the full cell before projecting x, for the closest
            // available witness (tightens distance brackets faster)
            let mut cell = BoxRegion::full(self.e.n_features);
            for t in &self.e.trees {
                t.refine_cell(b, &mut cell);
            }
            return Eval::Flip(cell.closest_point(self.x), pred);
        }
        let y = self.y_pred;
        let lb_y = self.lo[y];
        let mut margin = f64::NEG_INFINITY;
        let mut can_flip = false;
        for c in 0..self.e.n_classes {
            if c == y {
                continue;
            }
            let m = self.hi[c] - lb_y;
            margin = margin.max(m);
            // ties go to the lower class index
            can_flip |= if c < y { m >= 0.0 } else { m > 0.0 };
        }
        if can_flip {
            Eval::Open(margin)
        } else {
            Eval::Prune
        }
    }
}

struct WorkItem {
    margin: f64,
    seq: u64,
    region: BoxRegion,
}

impl PartialEq for WorkItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for WorkItem {}
impl PartialOrd for WorkItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for WorkItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // max-heap: highest margin first, then oldest box
        self.margin
            .total_cmp(&other.margin)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Monotone sort key for non-NaN thresholds.
fn ord_key(t: f64) -> u64 {
    let bits = t.to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits ^ (1 << 63)
    }
}

/// The (feature, threshold) pair straddled by `b` in the most trees; ties
/// break toward the lowest feature, then the lowest threshold. None iff `b`
/// reaches a single leaf in every tree.
fn most_straddled(e: &Ensemble, b: &BoxRegion) -> Option<(usize, f64)> {
    let mut counts: BTreeMap<(usize, u64), (f64, u32)> = BTreeMap::new();
    let mut per_tree: BTreeMap<(usize, u64), f64> = BTreeMap::new();
    let mut scratch = b.clone();
    for t in &e.trees {
        per_tree.clear();
        collect_straddles(&t.nodes, 0, &mut scratch, &mut per_tree);
        for (&key, &tv) in &per_tree {
            counts.entry(key).or_insert((tv, 0)).1 += 1;
        }
    }
    let mut best: Option<((usize, u64), f64, u32)> = None;
    for (&key, &(t, c)) in &counts {
        if best.map_or(true, |(_, _, bc)| c > bc) {
            best = Some((key, t, c));
        }
    }
    best.map(|((f, _), t, _)| (f, t))
}

/// Straddled (feature, threshold) pairs among nodes reachable under `b`,
/// refining the scratch box along each path like routing does.
fn collect_straddles(
    nodes: &[Node],
    id: usize,
    b: &mut BoxRegion,
    out: &mut BTreeMap<(usize, u64), f64>,
) {
    if let Node::Internal {
        feature,
        threshold,
        left,
        right,
    } = &nodes[id]
    {
        let (f, t) = (*feature, *threshold);
        let goes_left = b.lo[f] <= t;
        let goes_right = b.hi[f] > t;
        if goes_left && goes_right {
            out.insert((f, ord_key(t)), t);
        }
        if goes_left {
            let saved = b.hi[f];
            b.hi[f] = saved.min(t);
            collect_straddles(nodes, *left, b, out);
            b.hi[f] = saved;
        }
        if goes_right {
            let saved = b.lo[f];
            b.lo[f] = saved.max(t.next_up());
            collect_straddles(nodes, *right, b, out);
            b.lo[f] = saved;
        }
    }
}

/// Brackets the minimal adversarial distance of `x` by bisection on the
/// radius, warm-starting every feasibility call with the best witness so
/// far. A model robust over the whole domain returns lo = 1 with no
/// witness; a budget timeout returns the bracket reached so far with
/// `complete` unset.
pub fn minimal_distance(
    e: &Ensemble,
    x: &[f64],
    tol: f64,
    node_budget: u64,
) -> Result<DistanceBracket> {
    if !(tol > 0.0) {
        return Err(Error::Search(format!("tolerance must be positive, got {tol}")));
    }
    let y_pred = e.predict(x);
    let mut witness: Option<Vec<f64>> = None;
    let mut lo = 0.0f64;
    let mut hi = f64::INFINITY;

    // the whole domain is the radius-1 ball around any in-domain point
    let mut probe = 1.0f64;
    loop {
        let q = Query {
            ensemble: e,
            x,
            y_pred,
            eps: probe,
            warm_start: witness.as_deref(),
            node_budget,
        };
        match check_robust(&q)?.verdict {
            Verdict::Robust => {
                lo = probe;
                if hi.is_infinite() {
                    // robust everywhere
                    return Ok(DistanceBracket {
                        lo,
                        hi,
                        witness: None,
                        complete: true,
                    });
                }
            }
            Verdict::Vulnerable { witness: w, .. } => {
                hi = linf(&w, x);
                witness = Some(w);
            }
            Verdict::Timeout => {
                return Ok(DistanceBracket {
                    lo,
                    hi,
                    witness,
                    complete: false,
                })
            }
        }
        if hi - lo <= tol {
            break;
        }
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi {
            break; // bracket no longer splittable in floats
        }
        probe = mid;
    }
    Ok(DistanceBracket {
        lo,
        hi,
        witness,
        complete: true,
    })
}

/// Per-sample outcome inside a test-set sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleVerdict {
    Robust,
    Vulnerable,
    Timeout,
    /// Misclassified before any perturbation; never queried.
    Skipped,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: usize,
    pub y_true: usize,
    pub y_pred: usize,
    pub correct: bool,
    pub verdict: SampleVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_distance: Option<f64>,
    pub nodes: u64,
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct AdvAccResult {
    pub acc: f64,
    pub adv_acc: f64,
    pub n_timeouts: usize,
    /// Sum of per-sample verification seconds (additive across samples).
    pub solve_seconds: f64,
    pub records: Vec<SampleRecord>,
}

/// Fraction of the given rows that are both correctly classified and
/// ε-robust. Incorrect samples are never queried; a timed-out sample counts
/// as non-robust and is flagged. Samples verify in parallel.
pub fn adversarial_accuracy(
    e: &Ensemble,
    d: &Dataset,
    rows: &[usize],
    eps: f64,
    node_budget: u64,
) -> Result<AdvAccResult> {
    if rows.is_empty() {
        return Err(Error::Search("adversarial accuracy of an empty test set".into()));
    }
    let outcomes: Vec<Result<SampleRecord>> = exec::map_indexed(rows.len(), |k| {
        let i = rows[k];
        let x = &d.x[i];
        let y_pred = e.predict(x);
        let correct = y_pred == d.y[i];
        if !correct {
            return Ok(SampleRecord {
                index: i,
                y_true: d.y[i],
                y_pred,
                correct,
                verdict: SampleVerdict::Skipped,
                witness_distance: None,
                nodes: 0,
                seconds: 0.0,
            });
        }
        let q = Query {
            ensemble: e,
            x,
            y_pred,
            eps,
            warm_start: None,
            node_budget,
        };
        let r = check_robust(&q)?;
        let (verdict, wd) = match r.verdict {
            Verdict::Robust => (SampleVerdict::Robust, None),
            Verdict::Vulnerable { witness, .. } => {
                (SampleVerdict::Vulnerable, Some(linf(&witness, x)))
            }
            Verdict::Timeout => (SampleVerdict::Timeout, None),
        };
        Ok(SampleRecord {
            index: i,
            y_true: d.y[i],
            y_pred,
            correct,
            verdict,
            witness_distance: wd,
            nodes: r.nodes,
            seconds: r.seconds,
        })
    });
    let records = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let n = rows.len() as f64;
    let n_correct = records.iter().filter(|r| r.correct).count();
    let n_robust = records
        .iter()
        .filter(|r| r.verdict == SampleVerdict::Robust)
        .count();
    let n_timeouts = records
        .iter()
        .filter(|r| r.verdict == SampleVerdict::Timeout)
        .count();
    Ok(AdvAccResult {
        acc: n_correct as f64 / n,
        adv_acc: n_robust as f64 / n,
        n_timeouts,
        solve_seconds: records.iter().map(|r| r.seconds).sum(),
        records,
    })
}

/// Adversarial success rate η(ε) = 1 − AdvAcc(ε)/Acc.
pub fn success_rate(
    e: &Ensemble,
    d: &Dataset,
    rows: &[usize],
    eps: f64,
    node_budget: u64,
) -> Result<f64> {
    let r = adversarial_accuracy(e, d, rows, eps, node_budget)?;
    if r.acc == 0.0 {
        return Err(Error::Search(
            "success rate undefined at zero clean accuracy".into(),
        ));
    }
    Ok(1.0 - r.adv_acc / r.acc)
}

/// Exhaustive cell-enumeration reference implementations. Exponential in
/// the number of features and thresholds — oracle for tests, not for use.
pub mod reference {
    use super::*;

    /// Representative points of every cell-interval of feature `f`
    /// intersecting [lo, hi]: the interval starting at lo plus one interval
    /// per in-range threshold (a cell to the right of t starts at the next
    /// float above it).
    fn reps(thresholds: &[f64], lo: f64, hi: f64) -> Vec<f64> {
        let mut v = vec![lo];
        for &t in thresholds {
            let s = t.next_up();
            if s > lo && s <= hi {
                v.push(s);
            }
        }
        v
    }

    /// Same decision as `check_robust`, by predicting one representative
    /// point of every grid cell intersecting the ball.
    pub fn verdict_by_enumeration(e: &Ensemble, x: &[f64], eps: f64) -> bool {
        let y_pred = e.predict(x);
        let b = BoxRegion::around(x, eps);
        let grid: Vec<Vec<f64>> = e
            .thresholds_per_feature()
            .iter()
            .zip(b.lo.iter().zip(&b.hi))
            .map(|(ts, (&lo, &hi))| reps(ts, lo, hi))
            .collect();
        let mut z = vec![0.0; e.n_features];
        let mut idx = vec![0usize; e.n_features];
        loop {
            for (f, &k) in idx.iter().enumerate() {
                z[f] = grid[f][k];
            }
            if e.predict(&z) != y_pred {
                return false; // vulnerable
            }
            let mut f = 0;
            loop {
                if f == idx.len() {
                    return true; // robust
                }
                idx[f] += 1;
                if idx[f] < grid[f].len() {
                    break;
                }
                idx[f] = 0;
                f += 1;
            }
        }
    }

    /// Exact minimal adversarial distance by scoring every domain cell, or
    /// None when no cell flips the prediction. Distances are to closed
    /// cells, so the returned minimum is attained.
    pub fn min_distance_by_enumeration(e: &Ensemble, x: &[f64]) -> Option<f64> {
        let y_pred = e.predict(x);
        let per_feature = e.thresholds_per_feature();
        // closed interval list per feature: [0, t1], [t1⁺, t2], …, [tk⁺, 1]
        let mut intervals: Vec<Vec<(f64, f64)>> = Vec::with_capacity(e.n_features);
        for ts in &per_feature {
            let mut iv = Vec::with_capacity(ts.len() + 1);
            let mut lo = 0.0f64;
            for &t in ts {
                if t >= 1.0 || t.next_up() <= lo {
                    continue;
                }
                if t >= lo {
                    iv.push((lo, t));
                    lo = t.next_up();
                }
            }
            iv.push((lo, 1.0));
            intervals.push(iv);
        }
        let mut best: Option<f64> = None;
        let mut idx = vec![0usize; e.n_features];
        let mut z = vec![0.0; e.n_features];
        loop {
            let mut dist = 0.0f64;
            for (f, &k) in idx.iter().enumerate() {
                let (lo, hi) = intervals[f][k];
                z[f] = x[f].clamp(lo, hi);
                dist = dist.max((lo - x[f]).max(x[f] - hi).max(0.0));
            }
            if best.map_or(true, |b| dist < b) && e.predict(&z) != y_pred {
                best = Some(dist);
            }
            let mut f = 0;
            loop {
                if f == idx.len() {
                    return best;
                }
                idx[f] += 1;
                if idx[f] < intervals[f].len() {
                    break;
                }
                idx[f] = 0;
                f += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::{EnsembleKind, ModelMeta, Tree};

    fn stump(t: f64) -> Ensemble {
        Ensemble {
            kind: EnsembleKind::Forest,
            trees: vec![Tree {
                nodes: vec![
                    Node::Internal {
                        feature: 0,
                        threshold: t,
                        left: 1,
                        right: 2,
                    },
                    Node::Leaf {
                        value: vec![1.0, 0.0],
                    },
                    Node::Leaf {
                        value: vec![0.0, 1.0],
                    },
                ],
                class_tag: None,
            }],
            n_classes: 2,
            n_features: 1,
            base_score: 0.0,
            meta: ModelMeta::default(),
        }
    }

    fn constant() -> Ensemble {
        Ensemble {
            kind: EnsembleKind::Forest,
            trees: vec![Tree {
                nodes: vec![Node::Leaf {
                    value: vec![0.7, 0.3],
                }],
                class_tag: None,
            }],
            n_classes: 2,
            n_features: 1,
            base_score: 0.0,
            meta: ModelMeta::default(),
        }
    }

    #[test]
    fn stump_feasibility_matches_the_geometry() {
        let e = stump(0.5);
        let x = [0.3];
        // the ball [0.1, 0.5] routes left entirely under the closed rule
        let r = check_robust(&Query::new(&e, &x, 0.2)).unwrap();
        assert_eq!(r.verdict, Verdict::Robust);

        let r = check_robust(&Query::new(&e, &x, 0.25)).unwrap();
        match r.verdict {
            Verdict::Vulnerable {
                witness,
                prediction,
            } => {
                assert_eq!(prediction, 1);
                assert!(witness[0] > 0.5);
                assert!(linf(&witness, &x) <= 0.25);
                assert_ne!(e.predict(&witness), e.predict(&x));
            }
            v => panic!("expected a witness, got {v:?}"),
        }
    }

    #[test]
    fn constant_predictors_are_robust_at_any_radius() {
        let e = constant();
        for eps in [0.0, 0.3, 1.0] {
            let r = check_robust(&Query::new(&e, &[0.4], eps)).unwrap();
            assert_eq!(r.verdict, Verdict::Robust);
        }
        let b = minimal_distance(&e, &[0.4], 1e-6, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(b.lo, 1.0);
        assert!(b.hi.is_infinite() && b.witness.is_none() && b.complete);
    }

    #[test]
    fn distance_bracket_pins_the_stump_distance() {
        let e = stump(0.5);
        let b = minimal_distance(&e, &[0.3], 1e-6, DEFAULT_NODE_BUDGET).unwrap();
        assert!(b.complete);
        assert!(b.hi - b.lo <= 1e-6);
        assert!(b.lo <= 0.2 + 1e-9 && b.hi >= 0.2 - 1e-9, "bracket {b:?}");
        let w = b.witness.unwrap();
        assert_ne!(e.predict(&w), 0);
        assert!((linf(&w, &[0.3]) - b.hi).abs() < 1e-15);
    }

    #[test]
    fn warm_start_shortcuts_but_never_lies() {
        let e = stump(0.5);
        let x = [0.3];
        let good_witness = [0.52];
        let q = Query {
            warm_start: Some(&good_witness),
            ..Query::new(&e, &x, 0.25)
        };
        let r = check_robust(&q).unwrap();
        assert_eq!(r.nodes, 0, "cached witness must skip the search");
        assert!(matches!(r.verdict, Verdict::Vulnerable { .. }));

        // stale witness (outside the ball): verdict must fall back to search
        let q = Query {
            warm_start: Some(&good_witness),
            ..Query::new(&e, &x, 0.1)
        };
        let r = check_robust(&q).unwrap();
        assert_eq!(r.verdict, Verdict::Robust);
    }

    #[test]
    fn small_budget_times_out_instead_of_guessing() {
        let e = stump(0.5);
        let q = Query {
            node_budget: 0,
            ..Query::new(&e, &[0.3], 0.25)
        };
        let r = check_robust(&q).unwrap();
        assert_eq!(r.verdict, Verdict::Timeout);
    }

    #[test]
    fn enumeration_agrees_on_the_stump() {
        let e = stump(0.5);
        assert!(reference::verdict_by_enumeration(&e, &[0.3], 0.2));
        assert!(!reference::verdict_by_enumeration(&e, &[0.3], 0.25));
        // exact attained distance: the first float above the threshold
        let d = reference::min_distance_by_enumeration(&e, &[0.3]).unwrap();
        assert!((d - 0.2).abs() < 1e-12);
        assert!(reference::min_distance_by_enumeration(&constant(), &[0.3]).is_none());
    }

    #[test]
    fn test_set_metrics_follow_known_distances() {
        let e = stump(0.5);
        // distances to a flip: 0.45 → just over 0.05; 0.6 → exactly 0.1
        // (the closed-left rule lets 0.5 flip the right side); 0.3 is
        // mislabeled and must be skipped
        let d = Dataset::from_parts(
            vec![vec![0.45], vec![0.6], vec![0.3], vec![0.9]],
            vec![0, 1, 1, 1],
            2,
        );
        let rows = [0, 1, 2, 3];
        let r = adversarial_accuracy(&e, &d, &rows, 0.07, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(r.acc, 0.75);
        // 0.45 flips at 0.07; 0.6 and 0.9 hold
        assert_eq!(r.adv_acc, 0.5);
        assert_eq!(r.records[2].verdict, SampleVerdict::Skipped);
        assert_eq!(r.records[0].verdict, SampleVerdict::Vulnerable);

        let r0 = adversarial_accuracy(&e, &d, &rows, 0.0, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(r0.adv_acc, r0.acc);

        let eta = success_rate(&e, &d, &rows, 0.07, DEFAULT_NODE_BUDGET).unwrap();
        assert!((eta - (1.0 - 0.5 / 0.75)).abs() < 1e-15);

        // at 0.1 the sample at 0.6 flips too (attack lands exactly on 0.5)
        let r1 = adversarial_accuracy(&e, &d, &rows, 0.1, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(r1.adv_acc, 0.25);
    }

    #[test]
    fn zero_accuracy_has_no_success_rate() {
        let e = stump(0.5);
        let d = Dataset::from_parts(vec![vec![0.3]], vec![1], 2);
        assert!(success_rate(&e, &d, &[0], 0.1, DEFAULT_NODE_BUDGET).is_err());
    }
}
