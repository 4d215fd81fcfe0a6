//! Decision-tree and ensemble representation: prediction, axis-aligned box
//! geometry, leaf reachability, and per-class score bounding shared by
//! training and verification.
//!
//! Model files are JSON with explicit node arrays. Split thresholds are
//! stored as decimal strings whose shortest round-trip form recovers the
//! underlying double bit-exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A single tree node. Internal nodes route a sample left iff
/// `x[feature] <= threshold`. Leaf values are class distributions for
/// forest trees and one-element logit contributions for boosted trees.
#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Internal {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: Vec<f64>,
    },
}

/// Axis-aligned decision tree stored as a node array with the root at
/// index 0. `class_tag` marks trees that feed a single class score stack:
/// boosted trees always carry one, and one-vs-rest forest members carry the
/// class they separate. Untagged forest trees hold full distributions.
#[derive(Clone, Debug, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
    pub class_tag: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleKind {
    /// Soft-voting forest: scores are summed leaf distributions.
    Forest,
    /// Additive boosted model: scores are base_score plus summed leaf logits.
    Boosted,
}

/// Training provenance carried inside the model file. `config` is the
/// training configuration as loosely-typed JSON so the model format does not
/// depend on the trainer's types.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub method: String,
    pub train_seconds: f64,
    #[serde(default)]
    pub config: serde_json::Value,
}

impl Default for ModelMeta {
    fn default() -> Self {
        ModelMeta {
            method: String::new(),
            train_seconds: 0.0,
            config: serde_json::Value::Null,
        }
    }
}

/// A forest or boosted ensemble over `n_features` inputs and `n_classes`
/// outputs.
///
/// Prediction is the argmax of per-class scores with ties broken toward the
/// lowest class index. A boosted binary model therefore predicts class 1 iff
/// its total logit is strictly positive.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    pub kind: EnsembleKind,
    pub trees: Vec<Tree>,
    pub n_classes: usize,
    pub n_features: usize,
    /// Boosted only; forests keep 0.
    pub base_score: f64,
    pub meta: ModelMeta,
}

/// Axis-aligned box of closed per-feature intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    /// The full unit domain.
    pub fn full(d: usize) -> Self {
        BoxRegion {
            lo: vec![0.0; d],
            hi: vec![1.0; d],
        }
    }

    /// The l-infinity ball of radius `eps` around `x`, clamped to the unit
    /// domain. Requires `eps >= 0` and `x` inside the domain.
    ///
    /// Per axis this is exactly the set of floats `z` whose computed
    /// distance `|z - v|` comes out at most `eps`. The naive `v ± eps`
    /// endpoints can round across that boundary — letting in points whose
    /// measured distance exceeds `eps`, or cutting off points whose
    /// distance still rounds down to it — which would let verdicts disagree
    /// with witness distances. Non-negative floats sort by their bit
    /// patterns, so each exact endpoint is found by binary search on the
    /// bit lattice (~64 distance probes per axis).
    pub fn around(x: &[f64], eps: f64) -> Self {
        debug_assert!(eps >= 0.0, "ball radius must be non-negative");
        // Largest z in [v, 1] with z - v <= eps; the distance is
        // non-decreasing in z and zero at v itself.
        fn upper(v: f64, eps: f64) -> f64 {
            if 1.0 - v <= eps {
                return 1.0;
            }
            let (mut a, mut b) = (v.to_bits(), 1.0f64.to_bits());
            while b - a > 1 {
                let m = a + (b - a) / 2;
                if f64::from_bits(m) - v <= eps {
                    a = m;
                } else {
                    b = m;
                }
            }
            f64::from_bits(a)
        }
        // Smallest z in [0, v] with v - z <= eps, mirrored.
        fn lower(v: f64, eps: f64) -> f64 {
            if v <= eps {
                return 0.0;
            }
            let (mut a, mut b) = (0.0f64.to_bits(), v.to_bits());
            while b - a > 1 {
                let m = a + (b - a) / 2;
                if v - f64::from_bits(m) <= eps {
                    b = m;
                } else {
                    a = m;
                }
            }
            f64::from_bits(b)
        }
        BoxRegion {
            lo: x.iter().map(|&v| lower(v, eps)).collect(),
            hi: x.iter().map(|&v| upper(v, eps)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn is_valid(&self) -> bool {
        self.lo.len() == self.hi.len() && self.lo.iter().zip(&self.hi).all(|(l, h)| l <= h)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (l, h))| l <= v && v <= h)
    }

    pub fn intersect(&self, other: &BoxRegion) -> Option<BoxRegion> {
        let lo: Vec<f64> = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi: Vec<f64> = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        let b = BoxRegion { lo, hi };
        b.is_valid().then_some(b)
    }

    /// Componentwise projection of `x` onto the box.
    pub fn closest_point(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (l, h))| v.clamp(*l, *h))
            .collect()
    }

    /// l-infinity distance from `x` to the box (0 if contained).
    pub fn linf_distance(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (l, h))| (l - v).max(v - h).max(0.0))
            .fold(0.0, f64::max)
    }
}

/// Index of the largest score, ties toward the lowest index.
pub fn argmax_lowest(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

impl Tree {
    /// Leaf value reached by `x` under the closed-left routing rule.
    pub fn value_for(&self, x: &[f64]) -> &[f64] {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { value } => return value,
                Node::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    id = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Leaves whose routing region intersects `b`, each with the
    /// intersected region. The right side of a split at `t` starts at the
    /// next representable value above `t`, so the returned boxes are exact
    /// and partition the domain when `b` covers it.
    pub fn reachable_leaves(&self, b: &BoxRegion) -> Vec<(usize, BoxRegion)> {
        let mut out = Vec::new();
        let mut scratch = b.clone();
        self.walk(0, &mut scratch, &mut |id, leaf_box| {
            out.push((id, leaf_box.clone()));
        });
        out
    }

    /// Depth-first traversal of leaves reachable under `b`, narrowing the
    /// scratch box along the path and restoring it on the way back.
    fn walk<F: FnMut(usize, &BoxRegion)>(&self, id: usize, b: &mut BoxRegion, visit: &mut F) {
        match &self.nodes[id] {
            Node::Leaf { .. } => visit(id, b),
            Node::Internal {
                feature,
                threshold,
                left,
                right,
            } => {
                let (f, t) = (*feature, *threshold);
                if b.lo[f] <= t {
                    let saved = b.hi[f];
                    b.hi[f] = saved.min(t);
                    self.walk(*left, b, visit);
                    b.hi[f] = saved;
                }
                if b.hi[f] > t {
                    let saved = b.lo[f];
                    b.lo[f] = saved.max(t.next_up());
                    self.walk(*right, b, visit);
                    b.lo[f] = saved;
                }
            }
        }
    }

    /// Elementwise min/max of reachable leaf values over `b`; returns whether
    /// exactly one leaf was reachable. `min_out`/`max_out` must be
    /// pre-filled with +inf/-inf.
    fn value_bounds(&self, b: &mut BoxRegion, min_out: &mut [f64], max_out: &mut [f64]) -> bool {
        let mut leaves = 0usize;
        self.walk_bounds(0, b, min_out, max_out, &mut leaves);
        leaves == 1
    }

    fn walk_bounds(
        &self,
        id: usize,
        b: &mut BoxRegion,
        min_out: &mut [f64],
        max_out: &mut [f64],
        leaves: &mut usize,
    ) {
        match &self.nodes[id] {
            Node::Leaf { value } => {
                *leaves += 1;
                for (k, &v) in value.iter().enumerate() {
                    min_out[k] = min_out[k].min(v);
                    max_out[k] = max_out[k].max(v);
                }
            }
            Node::Internal {
                feature,
                threshold,
                left,
                right,
            } => {
                let (f, t) = (*feature, *threshold);
                if b.lo[f] <= t {
                    let saved = b.hi[f];
                    b.hi[f] = saved.min(t);
                    self.walk_bounds(*left, b, min_out, max_out, leaves);
                    b.hi[f] = saved;
                }
                if b.hi[f] > t {
                    let saved = b.lo[f];
                    b.lo[f] = saved.max(t.next_up());
                    self.walk_bounds(*right, b, min_out, max_out, leaves);
                    b.lo[f] = saved;
                }
            }
        }
    }

    /// Narrows `cell` to this tree's leaf region containing `b`, reading
    /// routing decisions from `b` (which must reach a single leaf of this
    /// tree). Returns false, leaving `cell` partially narrowed, if `b`
    /// straddles a reachable split.
    pub(crate) fn refine_cell(&self, b: &BoxRegion, cell: &mut BoxRegion) -> bool {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { .. } => return true,
                Node::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let (f, t) = (*feature, *threshold);
                    if b.hi[f] <= t {
                        cell.hi[f] = cell.hi[f].min(t);
                        id = *left;
                    } else if b.lo[f] > t {
                        cell.lo[f] = cell.lo[f].max(t.next_up());
                        id = *right;
                    } else {
                        return false;
                    }
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn rec(nodes: &[Node], id: usize) -> usize {
            match &nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Internal { left, right, .. } => 1 + rec(nodes, *left).max(rec(nodes, *right)),
            }
        }
        rec(&self.nodes, 0)
    }
}

/// Reusable buffers for repeated score-bound computations.
#[derive(Default)]
pub struct BoundsScratch {
    box_buf_lo: Vec<f64>,
    box_buf_hi: Vec<f64>,
    min_buf: Vec<f64>,
    max_buf: Vec<f64>,
}

impl Ensemble {
    /// Column index of a tagged tree's contribution within its leaf values:
    /// one-vs-rest forest leaves are binary distributions (positive class at
    /// index 1), boosted leaves are one-element logits.
    fn tag_column(&self) -> usize {
        match self.kind {
            EnsembleKind::Forest => 1,
            EnsembleKind::Boosted => 0,
        }
    }

    /// Score accumulator start: zero for forests; for boosted models the
    /// base score seeds every class that owns at least one tree, so a binary
    /// model with total logit exactly equal to its base score ties toward
    /// class 0.
    fn init_scores(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n_classes];
        if self.kind == EnsembleKind::Boosted {
            for t in &self.trees {
                if let Some(c) = t.class_tag {
                    s[c] = self.base_score;
                }
            }
        }
        s
    }

    /// Per-class scores at `x`. Forest scores are summed leaf distributions
    /// (the argmax matches soft voting); boosted scores are accumulated
    /// logits per class stack.
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_features, "feature dimension mismatch");
        let mut s = self.init_scores();
        let col = self.tag_column();
        for t in &self.trees {
            let v = t.value_for(x);
            match t.class_tag {
                None => {
                    for (c, sv) in s.iter_mut().enumerate() {
                        *sv += v[c];
                    }
                }
                Some(c) => s[c] += v[col],
            }
        }
        s
    }

    /// Predicted class at `x`: argmax of `scores`, ties toward the lowest
    /// class index.
    pub fn predict(&self, x: &[f64]) -> usize {
        argmax_lowest(&self.scores(x))
    }

    /// Per-class score bounds over a box: for every z in `b` and class c,
    /// `lower[c] <= scores(z)[c] <= upper[c]`. Bounds accumulate per-tree
    /// reachable-leaf minima/maxima in the same order as `scores`, so when
    /// every tree reaches exactly one leaf the bounds equal the exact scores
    /// bit for bit.
    pub fn score_bounds(&self, b: &BoxRegion) -> Result<(Vec<f64>, Vec<f64>)> {
        if !b.is_valid() || b.dim() != self.n_features {
            return Err(Error::Model("score_bounds: empty or mismatched box".into()));
        }
        let mut scratch = BoundsScratch::default();
        let mut lo = vec![0.0; self.n_classes];
        let mut hi = vec![0.0; self.n_classes];
        self.score_bounds_into(b, &mut scratch, &mut lo, &mut hi);
        Ok((lo, hi))
    }

    /// Allocation-free core of `score_bounds`. Returns true when every tree
    /// reaches exactly one leaf in `b` (the bounds are then exact scores).
    pub(crate) fn score_bounds_into(
        &self,
        b: &BoxRegion,
        scratch: &mut BoundsScratch,
        lo: &mut [f64],
        hi: &mut [f64],
    ) -> bool {
        let init = self.init_scores();
        lo.copy_from_slice(&init);
        hi.copy_from_slice(&init);

        let col = self.tag_column();
        let mut all_single = true;
        for t in &self.trees {
            let width = match t.class_tag {
                None => self.n_classes,
                Some(_) => col + 1,
            };
            scratch.min_buf.clear();
            scratch.min_buf.resize(width, f64::INFINITY);
            scratch.max_buf.clear();
            scratch.max_buf.resize(width, f64::NEG_INFINITY);

            scratch.box_buf_lo.clear();
            scratch.box_buf_lo.extend_from_slice(&b.lo);
            scratch.box_buf_hi.clear();
            scratch.box_buf_hi.extend_from_slice(&b.hi);
            let mut walk_box = BoxRegion {
                lo: std::mem::take(&mut scratch.box_buf_lo),
                hi: std::mem::take(&mut scratch.box_buf_hi),
            };
            let single = t.value_bounds(&mut walk_box, &mut scratch.min_buf, &mut scratch.max_buf);
            scratch.box_buf_lo = walk_box.lo;
            scratch.box_buf_hi = walk_box.hi;
            all_single &= single;

            match t.class_tag {
                None => {
                    for c in 0..self.n_classes {
                        lo[c] += scratch.min_buf[c];
                        hi[c] += scratch.max_buf[c];
                    }
                }
                Some(c) => {
                    lo[c] += scratch.min_buf[col];
                    hi[c] += scratch.max_buf[col];
                }
            }
        }
        all_single
    }

    /// Distinct (feature, threshold) pairs across all trees.
    pub fn thresholds_per_feature(&self) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new(); self.n_features];
        for t in &self.trees {
            for n in &t.nodes {
                if let Node::Internal {
                    feature, threshold, ..
                } = n
                {
                    out[*feature].push(*threshold);
                }
            }
        }
        for v in &mut out {
            v.sort_by(f64::total_cmp);
            v.dedup();
        }
        out
    }

    /// Structural validation: each tree is a single-rooted DAG-free node
    /// array, leaf widths match the ensemble shape, forest distributions are
    /// normalized, and tag usage is consistent.
    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(Error::Model("need at least 2 classes".into()));
        }
        if self.trees.is_empty() {
            return Err(Error::Model("ensemble has no trees".into()));
        }
        let tagged = self.trees.iter().filter(|t| t.class_tag.is_some()).count();
        match self.kind {
            EnsembleKind::Boosted => {
                if tagged != self.trees.len() {
                    return Err(Error::Model("boosted trees must carry class tags".into()));
                }
            }
            EnsembleKind::Forest => {
                if tagged != 0 && tagged != self.trees.len() {
                    return Err(Error::Model("forest mixes tagged and untagged trees".into()));
                }
                if self.base_score != 0.0 {
                    return Err(Error::Model("forests have no base score".into()));
                }
            }
        }
        // tagged stacks must be balanced so summed scores match averaged votes
        if tagged > 0 {
            let mut per_class = vec![0usize; self.n_classes];
            for t in &self.trees {
                let c = t.class_tag.unwrap();
                if c >= self.n_classes {
                    return Err(Error::Model(format!("class tag {c} out of range")));
                }
                per_class[c] += 1;
            }
            let used: Vec<usize> = per_class.iter().copied().filter(|&k| k > 0).collect();
            if used.iter().any(|&k| k != used[0]) {
                return Err(Error::Model("unbalanced class stacks".into()));
            }
        }

        let leaf_width = match (self.kind, tagged > 0) {
            (EnsembleKind::Boosted, _) => 1,
            (EnsembleKind::Forest, true) => 2,
            (EnsembleKind::Forest, false) => self.n_classes,
        };
        for (ti, t) in self.trees.iter().enumerate() {
            if t.nodes.is_empty() {
                return Err(Error::Model(format!("tree {ti} is empty")));
            }
            let mut seen = vec![false; t.nodes.len()];
            let mut stack = vec![0usize];
            let mut visited = 0usize;
            while let Some(id) = stack.pop() {
                if id >= t.nodes.len() {
                    return Err(Error::Model(format!("tree {ti}: node id {id} out of range")));
                }
                if seen[id] {
                    return Err(Error::Model(format!("tree {ti}: node {id} reached twice")));
                }
                seen[id] = true;
                visited += 1;
                match &t.nodes[id] {
                    Node::Leaf { value } => {
                        if value.len() != leaf_width {
                            return Err(Error::Model(format!(
                                "tree {ti}: leaf width {} != {leaf_width}",
                                value.len()
                            )));
                        }
                        if self.kind == EnsembleKind::Forest {
                            if value.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                                return Err(Error::Model(format!(
                                    "tree {ti}: leaf distribution out of [0,1]"
                                )));
                            }
                            let s: f64 = value.iter().sum();
                            if (s - 1.0).abs() > 1e-9 {
                                return Err(Error::Model(format!(
                                    "tree {ti}: leaf distribution sums to {s}"
                                )));
                            }
                        } else if value.iter().any(|v| !v.is_finite()) {
                            return Err(Error::Model(format!("tree {ti}: non-finite leaf")));
                        }
                    }
                    Node::Internal {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        if *feature >= self.n_features {
                            return Err(Error::Model(format!(
                                "tree {ti}: feature {feature} out of range"
                            )));
                        }
                        if !threshold.is_finite() {
                            return Err(Error::Model(format!("tree {ti}: non-finite threshold")));
                        }
                        stack.push(*right);
                        stack.push(*left);
                    }
                }
            }
            if visited != t.nodes.len() {
                return Err(Error::Model(format!(
                    "tree {ti}: {} of {} nodes unreachable",
                    t.nodes.len() - visited,
                    t.nodes.len()
                )));
            }
        }
        Ok(())
    }

    /// Serializes to the JSON model format. With `strip_times` the training
    /// wall-clock field is zeroed, which makes equal-seed fits byte-identical
    /// (the canonical form used by determinism checks).
    pub fn to_json(&self, strip_times: bool) -> Result<String> {
        let mut meta = self.meta.clone();
        if strip_times {
            meta.train_seconds = 0.0;
        }
        let file = ModelFile {
            format: MODEL_FORMAT,
            kind: self.kind,
            n_classes: self.n_classes,
            n_features: self.n_features,
            base_score: self.base_score,
            trees: self
                .trees
                .iter()
                .map(|t| TreeFile {
                    class: t.class_tag,
                    nodes: t.nodes.iter().map(NodeFile::from).collect(),
                })
                .collect(),
            meta,
        };
        let mut s = serde_json::to_string_pretty(&file)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Ensemble> {
        let file: ModelFile = serde_json::from_str(s)?;
        if file.format != MODEL_FORMAT {
            return Err(Error::Model(format!(
                "unsupported model format {} (expected {MODEL_FORMAT})",
                file.format
            )));
        }
        let mut trees = Vec::with_capacity(file.trees.len());
        for t in file.trees {
            let mut nodes = Vec::with_capacity(t.nodes.len());
            for n in t.nodes {
                nodes.push(n.try_into()?);
            }
            trees.push(Tree {
                nodes,
                class_tag: t.class,
            });
        }
        let e = Ensemble {
            kind: file.kind,
            trees,
            n_classes: file.n_classes,
            n_features: file.n_features,
            base_score: file.base_score,
            meta: file.meta,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json(false)?)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Ensemble> {
        Ensemble::from_json(&std::fs::read_to_string(path)?)
    }
}

const MODEL_FORMAT: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: u32,
    kind: EnsembleKind,
    n_classes: usize,
    n_features: usize,
    base_score: f64,
    trees: Vec<TreeFile>,
    meta: ModelMeta,
}

#[derive(Serialize, Deserialize)]
struct TreeFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    class: Option<usize>,
    nodes: Vec<NodeFile>,
}

#[derive(Serialize, Deserialize)]
enum NodeFile {
    #[serde(rename = "split")]
    Split {
        feature: usize,
        threshold: String,
        left: usize,
        right: usize,
    },
    #[serde(rename = "leaf")]
    Leaf { value: Vec<f64> },
}

impl From<&Node> for NodeFile {
    fn from(n: &Node) -> Self {
        match n {
            Node::Internal {
                feature,
                threshold,
                left,
                right,
            } => NodeFile::Split {
                feature: *feature,
                // shortest decimal form; parses back to the identical bits
                threshold: format!("{threshold}"),
                left: *left,
                right: *right,
            },
            Node::Leaf { value } => NodeFile::Leaf {
                value: value.clone(),
            },
        }
    }
}

impl TryFrom<NodeFile> for Node {
    type Error = Error;

    fn try_from(n: NodeFile) -> Result<Node> {
        Ok(match n {
            NodeFile::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                let t: f64 = threshold
                    .parse()
                    .map_err(|_| Error::Model(format!("bad threshold '{threshold}'")))?;
                if !t.is_finite() {
                    return Err(Error::Model(format!("non-finite threshold '{threshold}'")));
                }
                Node::Internal {
                    feature,
                    threshold: t,
                    left,
                    right,
                }
            }
            NodeFile::Leaf { value } => Node::Leaf { value },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Stump on feature 0 at `t`: left leaf predicts class 0, right class 1.
    pub(crate) fn stump(t: f64) -> Ensemble {
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

    #[test]
    fn stump_routes_closed_left() {
        let e = stump(0.5);
        assert_eq!(e.predict(&[0.3]), 0);
        assert_eq!(e.predict(&[0.5]), 0); // boundary goes left
        assert_eq!(e.predict(&[0.5f64.next_up()]), 1);
    }

    #[test]
    fn forest_votes_softly() {
        let mk = |a: f64, b: f64| Tree {
            nodes: vec![Node::Leaf { value: vec![a, b] }],
            class_tag: None,
        };
        let e = Ensemble {
            kind: EnsembleKind::Forest,
            trees: vec![mk(0.8, 0.2), mk(0.4, 0.6)],
            n_classes: 2,
            n_features: 1,
            base_score: 0.0,
            meta: ModelMeta::default(),
        };
        // mean distribution (0.6, 0.4)
        assert_eq!(e.predict(&[0.1]), 0);
    }

    #[test]
    fn boosted_zero_logit_ties_to_class_zero() {
        let e = Ensemble {
            kind: EnsembleKind::Boosted,
            trees: vec![Tree {
                nodes: vec![Node::Leaf { value: vec![0.0] }],
                class_tag: Some(1),
            }],
            n_classes: 2,
            n_features: 1,
            base_score: 0.0,
            meta: ModelMeta::default(),
        };
        assert_eq!(e.predict(&[0.4]), 0);
    }

    #[test]
    fn reachability_respects_geometry() {
        let e = stump(0.5);
        let t = &e.trees[0];
        let all = t.reachable_leaves(&BoxRegion::full(1));
        assert_eq!(all.len(), 2);

        let right = t.reachable_leaves(&BoxRegion {
            lo: vec![0.6],
            hi: vec![0.7],
        });
        assert_eq!(right.len(), 1);
        assert_eq!(right[0].0, 2);

        // a point exactly on the threshold reaches only the left leaf
        let on = t.reachable_leaves(&BoxRegion {
            lo: vec![0.5],
            hi: vec![0.5],
        });
        assert_eq!(on.len(), 1);
        assert_eq!(on[0].0, 1);
    }

    #[test]
    fn score_bounds_tighten_to_exact_scores() {
        let e = stump(0.5);
        let (lo, hi) = e
            .score_bounds(&BoxRegion {
                lo: vec![0.1],
                hi: vec![0.2],
            })
            .unwrap();
        assert_eq!(lo, vec![1.0, 0.0]);
        assert_eq!(hi, vec![1.0, 0.0]);

        let (lo, hi) = e.score_bounds(&BoxRegion::full(1)).unwrap();
        assert_eq!(lo, vec![0.0, 0.0]);
        assert_eq!(hi, vec![1.0, 1.0]);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let mut e = stump(0.1 + 0.2); // deliberately non-representable decimal
        e.meta.method = "rf".into();
        e.meta.train_seconds = 1.25;
        let s = e.to_json(false).unwrap();
        let back = Ensemble::from_json(&s).unwrap();
        match (&back.trees[0].nodes[0], &e.trees[0].nodes[0]) {
            (
                Node::Internal { threshold: a, .. },
                Node::Internal { threshold: b, .. },
            ) => assert_eq!(a.to_bits(), b.to_bits()),
            _ => panic!("shape changed"),
        }
        assert_eq!(back, e);

        // the canonical form zeroes wall-clock metadata
        let canon = e.to_json(true).unwrap();
        let c = Ensemble::from_json(&canon).unwrap();
        assert_eq!(c.meta.train_seconds, 0.0);
    }

    #[test]
    fn validation_rejects_broken_models() {
        let mut e = stump(0.5);
        e.trees[0].nodes[1] = Node::Leaf {
            value: vec![0.9, 0.2],
        };
        assert!(e.validate().is_err()); // distribution does not sum to 1

        let mut e = stump(0.5);
        e.trees[0].nodes[0] = Node::Internal {
            feature: 3,
            threshold: 0.5,
            left: 1,
            right: 2,
        };
        assert!(e.validate().is_err()); // feature out of range
    }
}
