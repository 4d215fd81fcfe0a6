//! Hyperparameter optimization balancing clean and adversarial accuracy.
//!
//! Every trained candidate must be *verified* to score it, which is far more
//! expensive than training. The optimizer therefore stays deliberately
//! simple: random candidate sampling over a [`SearchSpace`], each candidate
//! trained on the train split and scored on the validation split only (never
//! the test split), with the two objectives — accuracy and adversarial
//! accuracy at the given radius — collapsed by an augmented Chebyshev
//! scalarization ([`scalarize`]). The winner is the completed evaluation
//! with the lowest scalarized loss under equal weights.
//!
//! Candidates are independent, so they evaluate in parallel; the trace stays
//! ordered by candidate index, which keeps parallel and serial runs
//! byte-identical.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::data::Dataset;
use crate::exec;
use crate::rng::{derive_seed, stream, stream_rng};
use crate::train::{fit, Method, TrainConfig};
use crate::verify::{adversarial_accuracy, DEFAULT_NODE_BUDGET};
use crate::{Error, Result};

/// Sampling ranges for one optimization run.
///
/// Integer and rate-like knobs use the scales that match their effect:
/// multiplicative knobs (ensemble size, training radius, learning rate) are
/// log-uniform, additive ones (depth, feature fraction) uniform. The
/// training radius additionally carries a point mass at exactly zero so the
/// optimizer can decide that plain training wins.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpace {
    /// Inclusive log-uniform range for the number of trees.
    pub n_trees: (usize, usize),
    /// Inclusive uniform range for tree depth.
    pub max_depth: (usize, usize),
    /// Inclusive log-uniform range for the training radius.
    pub epsilon_train: (f64, f64),
    /// Probability of drawing exactly zero for the training radius.
    pub epsilon_zero_weight: f64,
    /// Inclusive log-uniform range for the boosting learning rate.
    pub learning_rate: (f64, f64),
    /// Inclusive uniform range for the per-split feature fraction.
    pub feature_subsample: (f64, f64),
    /// Choices for the noise-augmentation copy count.
    pub noise_copies: Vec<usize>,
}

impl SearchSpace {
    /// The default space, centered on a previously estimated radius
    /// `eps_hat`: the training radius is drawn log-uniformly from
    /// `[eps_hat/10, 2*eps_hat]` (clamped into the valid radius range) or
    /// set to zero with probability 0.2.
    ///
    /// Requires `eps_hat > 0`; a search that failed to reach its target rate
    /// should be resolved by the caller before tuning.
    pub fn default_for(eps_hat: f64) -> Self {
        assert!(
            eps_hat > 0.0 && eps_hat.is_finite(),
            "the estimated radius must be positive and finite"
        );
        let lo = (eps_hat / 10.0).min(0.5);
        let hi = (2.0 * eps_hat).min(0.5);
        SearchSpace {
            n_trees: (5, 125),
            max_depth: (3, 9),
            epsilon_train: (lo, hi),
            epsilon_zero_weight: 0.2,
            learning_rate: (0.05, 0.5),
            feature_subsample: (0.3, 1.0),
            noise_copies: vec![1, 2, 3, 5],
        }
    }

    /// Checks that every range is non-empty and inside the bounds a
    /// [`TrainConfig`] will accept, so sampling can never produce an invalid
    /// configuration.
    ///
    /// # Errors
    ///
    /// Returns [`Error::Train`] naming the first offending range.
    pub fn validate(&self) -> Result<()> {
        if self.n_trees.0 == 0 || self.n_trees.0 > self.n_trees.1 {
            return Err(Error::Train(format!(
                "tree-count range must be non-empty and positive, got {:?}",
                self.n_trees
            )));
        }
        if self.max_depth.0 == 0 || self.max_depth.0 > self.max_depth.1 {
            return Err(Error::Train(format!(
                "depth range must be non-empty and positive, got {:?}",
                self.max_depth
            )));
        }
        let (elo, ehi) = self.epsilon_train;
        if !(elo > 0.0 && elo <= ehi && ehi <= 0.5) {
            return Err(Error::Train(format!(
                "training-radius range must satisfy 0 < lo <= hi <= 0.5, got {:?}",
                self.epsilon_train
            )));
        }
        if !(0.0..=1.0).contains(&self.epsilon_zero_weight) {
            return Err(Error::Train(format!(
                "zero-radius weight must lie in [0, 1], got {}",
                self.epsilon_zero_weight
            )));
        }
        let (llo, lhi) = self.learning_rate;
        if !(llo > 0.0 && llo <= lhi && lhi <= 1.0) {
            return Err(Error::Train(format!(
                "learning-rate range must satisfy 0 < lo <= hi <= 1, got {:?}",
                self.learning_rate
            )));
        }
        let (flo, fhi) = self.feature_subsample;
        if !(flo > 0.0 && flo <= fhi && fhi <= 1.0) {
            return Err(Error::Train(format!(
                "feature-fraction range must satisfy 0 < lo <= hi <= 1, got {:?}",
                self.feature_subsample
            )));
        }
        if self.noise_copies.is_empty() || self.noise_copies.contains(&0) {
            return Err(Error::Train(format!(
                "noise-copy choices must be non-empty and positive, got {:?}",
                self.noise_copies
            )));
        }
        Ok(())
    }

    /// Draws one configuration for `method`.
    ///
    /// Every knob is drawn in a fixed order regardless of the method (the
    /// trainer ignores knobs the method does not use), so a given RNG state
    /// maps to the same candidate for every method — part of the
    /// determinism contract.
    pub fn sample(&self, method: Method, rng: &mut impl Rng) -> TrainConfig {
        let n_trees = log_uniform_int(self.n_trees, rng);
        let max_depth = rng.gen_range(self.max_depth.0..=self.max_depth.1);
        let epsilon_train = if rng.gen_range(0.0..1.0) < self.epsilon_zero_weight {
            0.0
        } else {
            log_uniform(self.epsilon_train, rng)
        };
        let learning_rate = log_uniform(self.learning_rate, rng);
        let feature_subsample = rng.gen_range(self.feature_subsample.0..=self.feature_subsample.1);
        let k = rng.gen_range(0..self.noise_copies.len());
        TrainConfig {
            method,
            n_trees,
            max_depth,
            epsilon_train,
            learning_rate,
            feature_subsample,
            noise_copies: self.noise_copies[k],
            ..TrainConfig::default()
        }
    }
}

/// Log-uniform draw from an inclusive positive range.
fn log_uniform((lo, hi): (f64, f64), rng: &mut impl Rng) -> f64 {
    if lo == hi {
        return lo;
    }
    rng.gen_range(lo.ln()..=hi.ln()).exp().clamp(lo, hi)
}

/// Log-uniform integer draw: rounds the continuous draw and clamps into the
/// range, so endpoints stay reachable.
fn log_uniform_int((lo, hi): (usize, usize), rng: &mut impl Rng) -> usize {
    if lo == hi {
        return lo;
    }
    let v = log_uniform((lo as f64, hi as f64), rng);
    (v.round() as usize).clamp(lo, hi)
}

/// One scored candidate.
///
/// `acc`/`adv_acc` are validation-split objectives and are `None` exactly
/// when the candidate failed (see `error`); the training seed rides inside
/// `config`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Evaluation {
    /// Candidate index, 0-based; also the trace position.
    pub index: usize,
    /// Chebyshev weights drawn for this candidate.
    pub lambda: [f64; 2],
    /// The sampled training configuration.
    pub config: TrainConfig,
    /// Validation accuracy, in `[0, 1]`.
    pub acc: Option<f64>,
    /// Validation adversarial accuracy at the tuning radius; never exceeds
    /// `acc`.
    pub adv_acc: Option<f64>,
    /// Wall-clock training time.
    pub train_seconds: f64,
    /// Pure verifier solve time spent scoring the candidate.
    pub verify_seconds: f64,
    /// Why the candidate failed, when it did.
    pub error: Option<String>,
}

impl Evaluation {
    /// `(accuracy, adversarial accuracy)` for completed candidates.
    pub fn objectives(&self) -> Option<[f64; 2]> {
        match (self.acc, self.adv_acc) {
            (Some(a), Some(r)) => Some([a, r]),
            _ => None,
        }
    }

    /// Zeroes the wall-clock fields, which are the only run-to-run noise in
    /// an evaluation; used by byte-identity determinism checks.
    pub fn strip_times(&mut self) {
        self.train_seconds = 0.0;
        self.verify_seconds = 0.0;
    }
}

/// Augmented Chebyshev scalarization: with losses `f_j = 1 - objective_j`,
/// returns `max_j(lambda_j * f_j) + rho * sum_j(lambda_j * f_j)`. Lower is
/// better; the ideal point `(1, 1)` scores exactly zero. Weights must be
/// non-negative and sum to one.
pub fn scalarize(objectives: [f64; 2], lambda: [f64; 2], rho: f64) -> f64 {
    debug_assert!(lambda.iter().all(|&l| l >= 0.0));
    debug_assert!((lambda[0] + lambda[1] - 1.0).abs() < 1e-9);
    let weighted = [
        lambda[0] * (1.0 - objectives[0]),
        lambda[1] * (1.0 - objectives[1]),
    ];
    weighted[0].max(weighted[1]) + rho * (weighted[0] + weighted[1])
}

/// Indices of the completed evaluations on the Pareto front of
/// `(acc, adv_acc)` maximization.
///
/// An evaluation is dropped if another completed one strictly dominates it
/// (at least as good in both objectives, strictly better in one) or ties it
/// exactly but came earlier — so duplicates keep their first representative
/// and the result is stable in evaluation order.
pub fn pareto_front(evals: &[Evaluation]) -> Vec<usize> {
    let scored: Vec<(usize, [f64; 2])> = evals
        .iter()
        .enumerate()
        .filter_map(|(i, e)| e.objectives().map(|o| (i, o)))
        .collect();
    let mut front = Vec::new();
    for &(i, oi) in &scored {
        let beaten = scored.iter().any(|&(j, oj)| {
            let geq = oj[0] >= oi[0] && oj[1] >= oi[1];
            let strict = oj[0] > oi[0] || oj[1] > oi[1];
            (geq && strict) || (oj == oi && j < i)
        });
        if !beaten {
            front.push(i);
        }
    }
    front
}

/// Knobs for [`optimize`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HpoConfig {
    /// Number of candidates to draw and score.
    pub budget: usize,
    /// Augmentation weight of the scalarization.
    pub rho: f64,
    /// Weights used for the final winner selection.
    pub final_lambda: [f64; 2],
    /// Verifier node budget per robustness query.
    pub node_budget: u64,
    /// Per-candidate wall-clock cap; a candidate that trains past it is
    /// recorded as failed instead of being verified.
    pub config_cap_seconds: f64,
    /// Base seed; candidate draws and training seeds derive from it.
    pub seed: u64,
}

impl Default for HpoConfig {
    fn default() -> Self {
        HpoConfig {
            budget: 50,
            rho: 0.05,
            final_lambda: [0.5, 0.5],
            node_budget: DEFAULT_NODE_BUDGET,
            config_cap_seconds: 600.0,
            seed: 0,
        }
    }
}

impl HpoConfig {
    /// Checks every knob.
    ///
    /// # Errors
    ///
    /// Returns [`Error::Train`] naming the first offending field.
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::Train("budget must be at least 1".into()));
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(Error::Train(format!(
                "rho must be non-negative, got {}",
                self.rho
            )));
        }
        if self.final_lambda.iter().any(|&l| l < 0.0)
            || (self.final_lambda[0] + self.final_lambda[1] - 1.0).abs() > 1e-9
        {
            return Err(Error::Train(format!(
                "final weights must be non-negative and sum to 1, got {:?}",
                self.final_lambda
            )));
        }
        if !(self.config_cap_seconds > 0.0) {
            return Err(Error::Train(format!(
                "per-candidate cap must be positive, got {}",
                self.config_cap_seconds
            )));
        }
        Ok(())
    }
}

/// Result of an optimization run: the full trace plus the winner's index
/// into it.
#[derive(Clone, Debug)]
pub struct HpoOutcome {
    /// Position of the winning evaluation in `trace`.
    pub winner: usize,
    /// Every candidate in index order, failed ones included.
    pub trace: Vec<Evaluation>,
}

impl HpoOutcome {
    /// The winning evaluation.
    pub fn best(&self) -> &Evaluation {
        &self.trace[self.winner]
    }
}

/// Runs the random-candidate optimization for one method.
///
/// Per candidate `k`: draws Chebyshev weights and a configuration from
/// seed-derived streams, trains on `train_rows`, then scores accuracy and
/// adversarial accuracy at radius `eps_hat` on `valid_rows` with the exact
/// verifier. A candidate whose training fails (or blows the per-candidate
/// cap) is recorded as failed and skipped; its budget is still consumed.
/// The winner is the completed evaluation minimizing [`scalarize`] under
/// `cfg.final_lambda` (ties prefer higher robust accuracy, then higher
/// accuracy, then the earliest evaluation). The test split plays no
/// part here by construction: only train and validation rows are accepted.
///
/// # Errors
///
/// Returns [`Error::Train`] for invalid knobs, empty splits, or when every
/// candidate failed; propagates dataset errors.
pub fn optimize(
    method: Method,
    space: &SearchSpace,
    cfg: &HpoConfig,
    d: &Dataset,
    train_rows: &[usize],
    valid_rows: &[usize],
    eps_hat: f64,
) -> Result<HpoOutcome> {
    cfg.validate()?;
    space.validate()?;
    if train_rows.is_empty() || valid_rows.is_empty() {
        return Err(Error::Train(
            "optimization needs non-empty train and validation splits".into(),
        ));
    }
    if !(eps_hat >= 0.0 && eps_hat.is_finite()) {
        return Err(Error::Train(format!(
            "tuning radius must be finite and non-negative, got {eps_hat}"
        )));
    }

    let trace = exec::map_indexed(cfg.budget, |k| {
        evaluate_candidate(k, method, space, cfg, d, train_rows, valid_rows, eps_hat)
    });

    let winner = select_winner(&trace, cfg.final_lambda, cfg.rho).ok_or_else(|| {
        Error::Train(format!(
            "all {} candidates failed; first error: {}",
            cfg.budget,
            trace
                .iter()
                .find_map(|e| e.error.as_deref())
                .unwrap_or("none recorded")
        ))
    })?;

    debug_assert!(
        {
            let w = trace[winner].objectives().expect("winner completed");
            !trace.iter().filter_map(Evaluation::objectives).any(|o| {
                o[0] >= w[0] && o[1] >= w[1] && (o[0] > w[0] || o[1] > w[1])
            })
        },
        "winner must be Pareto-optimal among completed evaluations"
    );

    Ok(HpoOutcome { winner, trace })
}

/// Trains and scores candidate `k`; never panics on model failure — the
/// error is folded into the returned record instead.
#[allow(clippy::too_many_arguments)]
fn evaluate_candidate(
    k: usize,
    method: Method,
    space: &SearchSpace,
    cfg: &HpoConfig,
    d: &Dataset,
    train_rows: &[usize],
    valid_rows: &[usize],
    eps_hat: f64,
) -> Evaluation {
    let mut rng_l = stream_rng(cfg.seed, stream::LAMBDA + k as u64);
    let l0: f64 = rng_l.gen_range(0.0..=1.0);
    let lambda = [l0, 1.0 - l0];

    let mut rng_c = stream_rng(cfg.seed, stream::CONFIG + k as u64);
    let mut config = space.sample(method, &mut rng_c);
    config.seed = derive_seed(cfg.seed, stream::MODEL + k as u64);

    let mut eval = Evaluation {
        index: k,
        lambda,
        config: config.clone(),
        acc: None,
        adv_acc: None,
        train_seconds: 0.0,
        verify_seconds: 0.0,
        error: None,
    };

    let started = Instant::now();
    let model = match fit(d, train_rows, &config) {
        Ok(m) => m,
        Err(e) => {
            eval.train_seconds = started.elapsed().as_secs_f64();
            eval.error = Some(e.to_string());
            return eval;
        }
    };
    eval.train_seconds = started.elapsed().as_secs_f64();
    if eval.train_seconds > cfg.config_cap_seconds {
        eval.error = Some(format!(
            "training exceeded the per-candidate cap of {} s",
            cfg.config_cap_seconds
        ));
        return eval;
    }

    match adversarial_accuracy(&model, d, valid_rows, eps_hat, cfg.node_budget) {
        Ok(r) => {
            eval.acc = Some(r.acc);
            eval.adv_acc = Some(r.adv_acc);
            eval.verify_seconds = r.solve_seconds;
        }
        Err(e) => {
            eval.error = Some(e.to_string());
        }
    }
    eval
}

/// Index of the completed evaluation with the lowest scalarized loss. Exact
/// ties are broken toward higher robust accuracy, then higher accuracy, then
/// the earliest evaluation. The objective tie-breaks matter when a weight
/// component is zero: the scalarization then ignores one objective, and
/// earliest-wins alone could crown a dominated candidate. `None` when
/// nothing completed.
fn select_winner(trace: &[Evaluation], lambda: [f64; 2], rho: f64) -> Option<usize> {
    let mut best: Option<(usize, f64, [f64; 2])> = None;
    for e in trace {
        let Some(obj) = e.objectives() else { continue };
        let loss = scalarize(obj, lambda, rho);
        let better = best.map_or(true, |(_, b_loss, b_obj)| {
            loss < b_loss
                || (loss == b_loss
                    && (obj[1] > b_obj[1] || (obj[1] == b_obj[1] && obj[0] > b_obj[0])))
        });
        if better {
            best = Some((e.index, loss, obj));
        }
    }
    best.map(|(i, _, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Dataset;

    fn eval_with(index: usize, obj: Option<[f64; 2]>) -> Evaluation {
        Evaluation {
            index,
            lambda: [0.5, 0.5],
            config: TrainConfig::default(),
            acc: obj.map(|o| o[0]),
            adv_acc: obj.map(|o| o[1]),
            train_seconds: 0.0,
            verify_seconds: 0.0,
            error: obj.is_none().then(|| "boom".to_string()),
        }
    }

    /// Two well-separated clusters in one dimension, 40 samples.
    fn toy() -> (Dataset, Vec<usize>, Vec<usize>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..20 {
            x.push(vec![0.05 + 0.002 * i as f64]);
            y.push(0);
            x.push(vec![0.95 - 0.002 * i as f64]);
            y.push(1);
        }
        let d = Dataset::from_parts(x, y, 2);
        let train: Vec<usize> = (0..30).collect();
        let valid: Vec<usize> = (30..40).collect();
        (d, train, valid)
    }

    #[test]
    fn scalarization_matches_hand_computed_values() {
        let v = scalarize([0.9, 0.8], [0.5, 0.5], 0.05);
        assert!((v - 0.1075).abs() < 1e-12, "got {v}");
        assert_eq!(scalarize([1.0, 1.0], [0.5, 0.5], 0.05), 0.0);
        // Degenerate weights reduce to an accuracy-only loss (1-acc)(1+rho).
        let v = scalarize([0.9, 0.2], [1.0, 0.0], 0.05);
        assert!((v - (1.0 - 0.9) * 1.05).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn pareto_front_keeps_incomparable_drops_dominated_dedups_stably() {
        let evals = vec![
            eval_with(0, Some([0.9, 0.7])),
            eval_with(1, Some([0.8, 0.8])),
        ];
        assert_eq!(pareto_front(&evals), vec![0, 1]);

        let evals = vec![
            eval_with(0, Some([0.9, 0.8])),
            eval_with(1, Some([0.8, 0.7])),
        ];
        assert_eq!(pareto_front(&evals), vec![0]);

        let evals = vec![
            eval_with(0, Some([0.9, 0.8])),
            eval_with(1, Some([0.9, 0.8])),
            eval_with(2, None),
        ];
        assert_eq!(pareto_front(&evals), vec![0]);
    }

    #[test]
    fn winner_selection_skips_failed_candidates() {
        let trace = vec![
            eval_with(0, None),
            eval_with(1, Some([0.7, 0.6])),
            eval_with(2, Some([0.9, 0.9])),
            eval_with(3, Some([0.9, 0.9])),
        ];
        // Index 2 wins: lowest loss, and the tie with 3 goes to the earliest.
        assert_eq!(select_winner(&trace, [0.5, 0.5], 0.05), Some(2));
        let all_failed = vec![eval_with(0, None)];
        assert_eq!(select_winner(&all_failed, [0.5, 0.5], 0.05), None);
    }

    #[test]
    fn winner_stays_pareto_optimal_under_boundary_weights() {
        // Accuracy-only weights ignore robust accuracy in the loss, so the
        // three candidates below tie exactly; the tie-break must still pick
        // the undominated one rather than the earliest.
        let trace = vec![
            eval_with(0, Some([0.9, 0.2])),
            eval_with(1, Some([0.9, 0.7])),
            eval_with(2, Some([0.9, 0.4])),
            eval_with(3, Some([0.8, 0.9])),
        ];
        assert_eq!(select_winner(&trace, [1.0, 0.0], 0.05), Some(1));
        // Robustness-only weights mirror the situation on the other axis.
        let mirrored = vec![
            eval_with(0, Some([0.2, 0.9])),
            eval_with(1, Some([0.7, 0.9])),
            eval_with(2, Some([0.4, 0.9])),
        ];
        assert_eq!(select_winner(&mirrored, [0.0, 1.0], 0.05), Some(1));
    }

    #[test]
    fn sampling_stays_inside_the_space_and_hits_the_zero_atom() {
        let space = SearchSpace::default_for(0.05);
        space.validate().unwrap();
        let mut rng = stream_rng(7, stream::CONFIG);
        let mut zeros = 0;
        for _ in 0..200 {
            let c = space.sample(Method::NoisyRf, &mut rng);
            c.validate().unwrap();
            assert!((5..=125).contains(&c.n_trees));
            assert!((3..=9).contains(&c.max_depth));
            assert!(c.epsilon_train == 0.0 || (0.005..=0.1).contains(&c.epsilon_train));
            assert!((0.05..=0.5).contains(&c.learning_rate));
            assert!((0.3..=1.0).contains(&c.feature_subsample));
            assert!([1, 2, 3, 5].contains(&c.noise_copies));
            if c.epsilon_train == 0.0 {
                zeros += 1;
            }
        }
        // The zero atom has weight 0.2; with this seed the draw count is
        // fixed, so the bound just guards the mechanism, not the statistics.
        assert!(zeros > 10 && zeros < 90, "zero atom drawn {zeros} times");
    }

    #[test]
    fn collapsed_space_reproduces_direct_training() {
        let (d, train, valid) = toy();
        let space = SearchSpace {
            n_trees: (7, 7),
            max_depth: (3, 3),
            epsilon_train: (0.02, 0.02),
            epsilon_zero_weight: 0.0,
            learning_rate: (0.3, 0.3),
            feature_subsample: (1.0, 1.0),
            noise_copies: vec![2],
        };
        let cfg = HpoConfig {
            budget: 1,
            seed: 11,
            ..HpoConfig::default()
        };
        let out = optimize(Method::GrootRf, &space, &cfg, &d, &train, &valid, 0.05).unwrap();
        assert_eq!(out.trace.len(), 1);
        assert_eq!(out.winner, 0);
        let best = out.best();
        assert_eq!(best.config.n_trees, 7);
        assert_eq!(best.config.max_depth, 3);
        assert_eq!(best.config.epsilon_train, 0.02);

        // Re-running the winner's exact config by hand reproduces its
        // objectives bit for bit.
        let model = fit(&d, &train, &best.config).unwrap();
        let r = adversarial_accuracy(&model, &d, &valid, 0.05, cfg.node_budget).unwrap();
        assert_eq!(Some(r.acc), best.acc);
        assert_eq!(Some(r.adv_acc), best.adv_acc);
    }

    #[test]
    fn optimization_is_deterministic_and_winner_is_pareto_optimal() {
        let (d, train, valid) = toy();
        let space = SearchSpace::default_for(0.05);
        let cfg = HpoConfig {
            budget: 8,
            seed: 3,
            ..HpoConfig::default()
        };
        let a = optimize(Method::Rf, &space, &cfg, &d, &train, &valid, 0.05).unwrap();
        let b = optimize(Method::Rf, &space, &cfg, &d, &train, &valid, 0.05).unwrap();
        assert_eq!(a.winner, b.winner);
        let canon = |trace: &[Evaluation]| {
            let mut t = trace.to_vec();
            t.iter_mut().for_each(Evaluation::strip_times);
            serde_json::to_string(&t).unwrap()
        };
        assert_eq!(canon(&a.trace), canon(&b.trace));

        // Every candidate separates this toy set, so the winner must weakly
        // dominate the scalarization-worst completed evaluation.
        let completed: Vec<&Evaluation> =
            a.trace.iter().filter(|e| e.objectives().is_some()).collect();
        assert!(!completed.is_empty());
        let worst = completed
            .iter()
            .max_by(|x, y| {
                scalarize(x.objectives().unwrap(), cfg.final_lambda, cfg.rho).total_cmp(
                    &scalarize(y.objectives().unwrap(), cfg.final_lambda, cfg.rho),
                )
            })
            .unwrap();
        let w = a.best().objectives().unwrap();
        let ww = worst.objectives().unwrap();
        assert!(w[0] >= ww[0] && w[1] >= ww[1]);

        // Lambda draws vary across candidates and stay on the simplex.
        for e in &a.trace {
            assert!((e.lambda[0] + e.lambda[1] - 1.0).abs() < 1e-12);
            assert!(e.lambda[0] >= 0.0 && e.lambda[0] <= 1.0);
        }
    }

    #[test]
    fn empty_splits_and_zero_budget_are_rejected() {
        let (d, train, valid) = toy();
        let space = SearchSpace::default_for(0.05);
        let cfg = HpoConfig::default();
        assert!(optimize(Method::Rf, &space, &cfg, &d, &[], &valid, 0.05).is_err());
        let zero = HpoConfig {
            budget: 0,
            ..HpoConfig::default()
        };
        assert!(optimize(Method::Rf, &space, &zero, &d, &train, &valid, 0.05).is_err());
    }
}
