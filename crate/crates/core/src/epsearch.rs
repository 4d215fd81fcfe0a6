//! Search for the perturbation radius that hits a target attack rate.
//!
//! A robustness number quoted at an arbitrary radius says little: at a tiny
//! radius every model looks robust, at a huge one none does. This module
//! finds the radius where a model is meaningfully stressed — the `eps_hat`
//! at which the adversary's success rate `eta(eps)` (the fraction of
//! correctly classified test samples that can be flipped within radius
//! `eps`) matches a caller-chosen target, 10% by default.
//!
//! Exact verification is expensive, so the search is engineered around two
//! monotonicity facts:
//!
//! * **per sample**: a sample proven robust at radius `r` stays robust at
//!   every radius below `r`, and a witness at distance `u` certifies
//!   vulnerability at every radius of at least `u`. Each sample therefore
//!   carries a certified band `(r_i, u_i)` and the verifier only runs when
//!   the probed radius falls strictly inside that band;
//! * **globally**: `eta(eps)` is non-decreasing, so evaluated points bracket
//!   the target and secant/interpolation steps converge quickly.
//!
//! The driver is [`search_epsilon`]. The two building blocks,
//! [`evaluate_eta`] and [`next_epsilon`], are public so callers can script
//! custom schedules or replay a recorded trace.

use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::data::Dataset;
use crate::exec;
use crate::trees::Ensemble;
use crate::verify::{check_robust, linf, Query, Verdict, DEFAULT_NODE_BUDGET};
use crate::{Error, Result};

/// Knobs for [`search_epsilon`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Target attack success rate; the search stops once `eta` lands within
    /// `band` of this value.
    pub eta_star: f64,
    /// Acceptance half-width around `eta_star`.
    pub band: f64,
    /// Bracket width below which the search stops even if the band was never
    /// hit (the target rate sits between two adjacent attainable rates).
    pub margin: f64,
    /// Number of secant steps allowed before the update rule falls back to
    /// bracket interpolation.
    pub secant_budget: usize,
    /// Hard cap on radius evaluations.
    pub max_iters: usize,
    /// Wall-clock cap for the whole search, in seconds.
    pub wall_cap_seconds: f64,
    /// First radius to probe.
    pub eps0: f64,
    /// Node budget handed to each verifier call.
    pub node_budget: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            eta_star: 0.1,
            band: 0.02,
            margin: 1e-6,
            secant_budget: 10,
            max_iters: 100,
            wall_cap_seconds: f64::INFINITY,
            eps0: 0.05,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

impl SearchConfig {
    /// Checks every knob for internal consistency.
    ///
    /// # Errors
    ///
    /// Returns [`Error::Search`] describing the first offending field.
    pub fn validate(&self) -> Result<()> {
        if !(self.eta_star > 0.0 && self.eta_star < 1.0) {
            return Err(Error::Search(format!(
                "target rate must lie strictly between 0 and 1, got {}",
                self.eta_star
            )));
        }
        if !(self.band > 0.0 && self.band.is_finite()) {
            return Err(Error::Search(format!(
                "acceptance band must be positive, got {}",
                self.band
            )));
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return Err(Error::Search(format!(
                "bracket margin must be positive, got {}",
                self.margin
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::Search("max_iters must be at least 1".into()));
        }
        if !(self.eps0 > 0.0 && self.eps0 <= 1.0) {
            return Err(Error::Search(format!(
                "initial radius must lie in (0, 1], got {}",
                self.eps0
            )));
        }
        if !(self.wall_cap_seconds > 0.0) {
            return Err(Error::Search(format!(
                "wall-clock cap must be positive, got {}",
                self.wall_cap_seconds
            )));
        }
        Ok(())
    }
}

/// One line of the search trace: a radius evaluation and its cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// 1-based evaluation counter.
    pub iteration: usize,
    /// Radius probed.
    pub epsilon: f64,
    /// Attack success rate measured at that radius.
    pub eta: f64,
    /// Verifier calls this evaluation actually needed (cache hits cost zero).
    pub verifier_calls: usize,
    /// Total solver seconds spent so far, across all evaluations.
    pub cumulative_solve_seconds: f64,
}

/// Accumulated knowledge about one model/test-set pair.
///
/// The state is tied to the exact `(ensemble, dataset, rows)` triple it was
/// built from; per-sample vectors are indexed by *position* in `rows`.
#[derive(Clone, Debug)]
pub struct SearchState {
    /// Model prediction per test sample.
    pub y_pred: Vec<usize>,
    /// Whether the prediction matches the label; misclassified samples never
    /// enter the rate.
    pub correct: Vec<bool>,
    /// Samples permanently dropped after a verifier timeout; they leave both
    /// the numerator and the denominator of the rate.
    pub excluded: Vec<bool>,
    /// Largest radius at which each sample is proven robust.
    pub lower: Vec<f64>,
    /// Smallest known flipping distance per sample (infinite until a witness
    /// is found).
    pub upper: Vec<f64>,
    /// The adversarial example behind each finite `upper` bound.
    pub witness: Vec<Option<Vec<f64>>>,
    /// Every `(epsilon, eta)` pair measured, in evaluation order.
    pub evaluated: Vec<(f64, f64)>,
    /// Radius evaluations performed so far.
    pub iterations: usize,
    /// Secant steps taken so far (counted against [`SearchConfig::secant_budget`]).
    pub secant_steps: usize,
    /// Total verifier invocations.
    pub verifier_calls: usize,
    /// Total pure solve time, in seconds.
    pub verifier_seconds: f64,
    /// Verifier timeouts encountered.
    pub timeouts: usize,
    /// One record per evaluation, ready to stream as JSON lines.
    pub trace: Vec<TraceRecord>,
}

impl SearchState {
    /// Prepares fresh per-sample bookkeeping for `rows` of `d` under `e`.
    ///
    /// # Errors
    ///
    /// Returns [`Error::Search`] if `rows` is empty, out of range, or the
    /// model misclassifies every selected sample (the rate is undefined at
    /// zero accuracy).
    pub fn new(e: &Ensemble, d: &Dataset, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Search("cannot search on an empty test set".into()));
        }
        let n = rows.len();
        let mut y_pred = Vec::with_capacity(n);
        let mut correct = Vec::with_capacity(n);
        for &r in rows {
            let x = d.x.get(r).ok_or_else(|| {
                Error::Search(format!("test row {r} out of range for {} samples", d.x.len()))
            })?;
            let p = e.predict(x);
            y_pred.push(p);
            correct.push(p == d.y[r]);
        }
        if !correct.iter().any(|&c| c) {
            return Err(Error::Search(
                "model misclassifies the entire test set; the attack rate is undefined".into(),
            ));
        }
        Ok(SearchState {
            y_pred,
            correct,
            excluded: vec![false; n],
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
            witness: vec![None; n],
            evaluated: Vec::new(),
            iterations: 0,
            secant_steps: 0,
            verifier_calls: 0,
            verifier_seconds: 0.0,
            timeouts: 0,
            trace: Vec::new(),
        })
    }

    /// Tightest bracket around the target seen so far: the largest evaluated
    /// radius with a rate below `eta_star` and the smallest with a rate above
    /// it, as `((eps_lo, eta_lo), (eps_hi, eta_hi))`.
    pub fn bracket(&self, eta_star: f64) -> Option<((f64, f64), (f64, f64))> {
        let mut lo: Option<(f64, f64)> = None;
        let mut hi: Option<(f64, f64)> = None;
        for &(eps, eta) in &self.evaluated {
            if eta < eta_star && lo.map_or(true, |(e, _)| eps > e) {
                lo = Some((eps, eta));
            }
            if eta > eta_star && hi.map_or(true, |(e, _)| eps < e) {
                hi = Some((eps, eta));
            }
        }
        match (lo, hi) {
            (Some(l), Some(h)) if l.0 < h.0 => Some((l, h)),
            _ => None,
        }
    }

    /// Attack rate implied by the current bounds at radius `eps`, without
    /// touching the verifier. Only meaningful when no sample's band straddles
    /// `eps`.
    fn rate_from_bounds(&self, eps: f64) -> Result<f64> {
        let mut denom = 0usize;
        let mut num = 0usize;
        for i in 0..self.correct.len() {
            if !self.correct[i] || self.excluded[i] {
                continue;
            }
            denom += 1;
            if self.upper[i] <= eps {
                num += 1;
            }
        }
        if denom == 0 {
            return Err(Error::Search(
                "every correctly classified sample was excluded by verifier timeouts".into(),
            ));
        }
        Ok(num as f64 / denom as f64)
    }
}

/// Measures the attack success rate at radius `eps`, updating `state`.
///
/// Only samples whose certified band `(r_i, u_i)` straddles `eps` are sent to
/// the verifier (in parallel, one call per sample, warm-started from any
/// cached witness). Everything else is settled from the bounds, so repeating
/// a radius costs zero verifier calls. Timeouts permanently exclude their
/// sample from the rate. The `(e, d, rows)` triple must be the one `state`
/// was built from.
///
/// # Errors
///
/// Returns [`Error::Search`] for a non-finite or negative radius or when
/// exclusions have emptied the denominator, and propagates verifier errors.
pub fn evaluate_eta(
    state: &mut SearchState,
    e: &Ensemble,
    d: &Dataset,
    rows: &[usize],
    eps: f64,
    node_budget: u64,
) -> Result<f64> {
    if !eps.is_finite() || eps < 0.0 {
        return Err(Error::Search(format!(
            "perturbation radius must be finite and non-negative, got {eps}"
        )));
    }
    if rows.len() != state.correct.len() {
        return Err(Error::Search(format!(
            "state was built for {} samples but {} rows were supplied",
            state.correct.len(),
            rows.len()
        )));
    }

    let candidates: Vec<usize> = (0..rows.len())
        .filter(|&i| {
            state.correct[i] && !state.excluded[i] && state.lower[i] < eps && eps < state.upper[i]
        })
        .collect();

    // Read-only snapshots for the parallel section.
    let y_pred = &state.y_pred;
    let witness = &state.witness;
    let results = exec::map_indexed(candidates.len(), |k| {
        let i = candidates[k];
        let x = &d.x[rows[i]];
        let q = Query {
            ensemble: e,
            x,
            y_pred: y_pred[i],
            eps,
            warm_start: witness[i].as_deref(),
            node_budget,
        };
        check_robust(&q)
    });

    let calls = candidates.len();
    for (k, res) in results.into_iter().enumerate() {
        let i = candidates[k];
        let r = res?;
        state.verifier_calls += 1;
        state.verifier_seconds += r.seconds;
        match r.verdict {
            Verdict::Robust => state.lower[i] = eps,
            Verdict::Vulnerable { witness: w, .. } => {
                let dist = linf(&w, &d.x[rows[i]]);
                state.upper[i] = dist;
                state.witness[i] = Some(w);
            }
            Verdict::Timeout => {
                state.excluded[i] = true;
                state.timeouts += 1;
            }
        }
    }

    let eta = state.rate_from_bounds(eps)?;
    state.iterations += 1;
    state.evaluated.push((eps, eta));
    state.trace.push(TraceRecord {
        iteration: state.iterations,
        epsilon: eps,
        eta,
        verifier_calls: calls,
        cumulative_solve_seconds: state.verifier_seconds,
    });
    Ok(eta)
}

/// Clamps a proposed radius into `(0, 1]`, signalling `None` when the
/// proposal is useless (non-finite or non-positive).
fn clamp_radius(eps: f64) -> Option<f64> {
    if !eps.is_finite() || eps <= 0.0 {
        return None;
    }
    Some(eps.min(1.0))
}

/// Proposes the next radius to probe from the evaluations in `state`.
///
/// The rule ladder, in order:
///
/// 1. after a single evaluation: rescale it, `eps * eta_star / max(eta,
///    1/(2n))` — the floor keeps a zero measured rate from dividing away the
///    step;
/// 2. while secant steps remain in budget: a secant step on
///    `g(eps) = eta(eps) - eta_star` through the two most recent evaluations
///    at distinct radii; a degenerate secant (equal rates at both points)
///    bisects the current bracket instead;
/// 3. once the budget is spent: linear interpolation inside the bracket,
///    falling back to bisection if interpolation stalls on an endpoint;
/// 4. with no bracket to fall back on: double the largest probed radius
///    while the rate is low (capped at 1), halve the smallest while it is
///    high.
///
/// The return value always lies in `(0, 1]` but may repeat an evaluated
/// radius when float resolution is exhausted; [`search_epsilon`] treats that
/// as a stopping signal.
pub fn next_epsilon(state: &SearchState, cfg: &SearchConfig) -> f64 {
    propose(state, cfg).0
}

/// [`next_epsilon`] plus a flag telling the caller whether the proposal was
/// a genuine secant step (and should be counted against the budget).
fn propose(state: &SearchState, cfg: &SearchConfig) -> (f64, bool) {
    let pairs = &state.evaluated;
    assert!(!pairs.is_empty(), "next_epsilon needs at least one evaluation");

    let n = state.correct.len();
    let floor = 1.0 / (2.0 * n as f64);
    if pairs.len() == 1 {
        let (e0, h0) = pairs[0];
        let eps = clamp_radius(e0 * cfg.eta_star / h0.max(floor)).unwrap_or(e0 / 2.0);
        return (eps, false);
    }

    let bracket = state.bracket(cfg.eta_star);

    if state.secant_steps < cfg.secant_budget {
        // Secant through the two most recent evaluations at distinct radii.
        let (e1, h1) = *pairs.last().expect("non-empty");
        if let Some(&(e0, h0)) = pairs.iter().rev().skip(1).find(|&&(e, _)| e != e1) {
            if h0 != h1 {
                let g1 = h1 - cfg.eta_star;
                let step = e1 - g1 * (e1 - e0) / (h1 - h0);
                if let Some(eps) = clamp_radius(step) {
                    return (eps, true);
                }
            }
            // Degenerate or out-of-range secant: bisect the bracket when one
            // exists, otherwise fall through to expansion below.
            if let Some(((lo, _), (hi, _))) = bracket {
                return (lo + (hi - lo) / 2.0, false);
            }
        }
    } else if let Some(((lo, hlo), (hi, hhi))) = bracket {
        // Budget spent: regula falsi inside the bracket. The bracket
        // guarantees hlo < eta_star < hhi, so the denominator is nonzero.
        let eps = lo + (cfg.eta_star - hlo) * (hi - lo) / (hhi - hlo);
        if eps > lo && eps < hi {
            return (eps, false);
        }
        return (lo + (hi - lo) / 2.0, false);
    }

    // No bracket yet: every rate sits on one side of the target. Expand
    // upward from the largest radius or contract downward from the smallest.
    let (e_last, h_last) = *pairs.last().expect("non-empty");
    let eps = if h_last < cfg.eta_star {
        let widest = pairs.iter().map(|&(e, _)| e).fold(e_last, f64::max);
        (widest * 2.0).min(1.0)
    } else {
        let narrowest = pairs.iter().map(|&(e, _)| e).fold(e_last, f64::min);
        narrowest / 2.0
    };
    (eps, false)
}

/// Result of a completed radius search.
#[derive(Clone, Debug)]
pub struct SearchOutcome {
    /// Recommended radius: the evaluated point whose rate lies closest to the
    /// target (ties go to the smaller radius). When the target is
    /// unreachable, the largest radius probed.
    pub eps_hat: f64,
    /// Attack rate measured at `eps_hat`.
    pub eta: f64,
    /// Whether the stopping rule was a genuine convergence (band hit or
    /// bracket narrower than the margin) rather than an iteration or time
    /// cap.
    pub converged: bool,
    /// Set when even the full unit radius cannot reach the target rate.
    pub unreachable: bool,
    /// Full per-sample bookkeeping and trace, for reuse and reporting.
    pub state: SearchState,
}

/// Searches for the radius whose attack success rate matches the target.
///
/// Stops as soon as a measured rate lands within `cfg.band` of
/// `cfg.eta_star`, or the bracket around the target narrows below
/// `cfg.margin`, or a cap (`max_iters`, `wall_cap_seconds`) is hit. If the
/// rate at the full unit radius still falls short of the target, the search
/// reports the target unreachable instead of looping.
///
/// # Errors
///
/// Returns [`Error::Search`] for invalid configuration, an empty or
/// misclassified-everywhere test set, or when timeouts exclude every sample;
/// propagates verifier errors.
pub fn search_epsilon(
    e: &Ensemble,
    d: &Dataset,
    rows: &[usize],
    cfg: &SearchConfig,
) -> Result<SearchOutcome> {
    cfg.validate()?;
    let mut state = SearchState::new(e, d, rows)?;
    let started = Instant::now();

    let mut eps = cfg.eps0;
    let mut converged = false;
    let mut unreachable = false;
    loop {
        let eta = evaluate_eta(&mut state, e, d, rows, eps, cfg.node_budget)?;

        if (eta - cfg.eta_star).abs() <= cfg.band {
            converged = true;
            break;
        }
        if eps >= 1.0 && eta < cfg.eta_star {
            unreachable = true;
            break;
        }
        if let Some(((lo, _), (hi, _))) = state.bracket(cfg.eta_star) {
            if hi - lo <= cfg.margin {
                converged = true;
                break;
            }
        }
        if state.iterations >= cfg.max_iters {
            break;
        }
        if started.elapsed().as_secs_f64() > cfg.wall_cap_seconds {
            break;
        }

        let (mut next, took_secant) = propose(&state, cfg);
        if took_secant {
            state.secant_steps += 1;
        }
        if state.evaluated.iter().any(|&(x, _)| x == next) {
            // Float resolution exhausted around the proposal; try one
            // bisection of the bracket before giving up.
            next = match state.bracket(cfg.eta_star) {
                Some(((lo, _), (hi, _))) => lo + (hi - lo) / 2.0,
                None => next / 2.0,
            };
            if next <= 0.0 || state.evaluated.iter().any(|&(x, _)| x == next) {
                break;
            }
        }
        eps = next;
    }

    let (eps_hat, eta) = if unreachable {
        *state
            .evaluated
            .iter()
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .expect("at least one evaluation")
    } else {
        let mut best = state.evaluated[0];
        for &(e_i, h_i) in &state.evaluated[1..] {
            let d_best = (best.1 - cfg.eta_star).abs();
            let d_i = (h_i - cfg.eta_star).abs();
            if d_i < d_best || (d_i == d_best && e_i < best.0) {
                best = (e_i, h_i);
            }
        }
        best
    };

    Ok(SearchOutcome {
        eps_hat,
        eta,
        converged,
        unreachable,
        state,
    })
}
