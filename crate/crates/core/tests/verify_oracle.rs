//! Exactness tests for the robustness verifier against exhaustive
//! cell-enumeration oracles, plus the monotonicity properties of the
//! test-set metrics.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use treeguard::data::Dataset;
use treeguard::train::{fit, Method, TrainConfig};
use treeguard::trees::{BoxRegion, Ensemble};
use treeguard::verify::{
    adversarial_accuracy, check_robust, minimal_distance, reference, Query, Verdict,
    DEFAULT_NODE_BUDGET,
};

/// One random trained instance: a small ensemble plus a probe point.
struct Instance {
    e: Ensemble,
    x: Vec<f64>,
    eps: f64,
}

/// Trains 200 assorted small ensembles (1-5 trees, depth 1-3, 1-3 features,
/// forests and boosters alike) and pairs each with a random in-domain probe
/// point and radius.
fn instances() -> Vec<Instance> {
    let methods = [Method::Rf, Method::Gbt, Method::GrootRf];
    let mut out = Vec::with_capacity(200);
    let mut rng = StdRng::seed_from_u64(2024);
    for i in 0..200u64 {
        let n_features = rng.gen_range(1..=3usize);
        let n = rng.gen_range(12..=40usize);
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            x.push((0..n_features).map(|_| rng.gen_range(0.0..=1.0)).collect());
            y.push(rng.gen_range(0..2usize));
        }
        let d = Dataset::from_parts(x, y, 2);
        let rows: Vec<usize> = (0..n).collect();
        let cfg = TrainConfig {
            method: methods[i as usize % methods.len()],
            n_trees: rng.gen_range(1..=5),
            max_depth: rng.gen_range(1..=3),
            epsilon_train: if i % 3 == 2 { 0.05 } else { 0.0 },
            seed: i,
            ..TrainConfig::default()
        };
        let e = fit(&d, &rows, &cfg).unwrap();
        let x: Vec<f64> = (0..n_features).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let eps = [0.0, 0.01, 0.05, 0.1, 0.2, 0.3][rng.gen_range(0..6)];
        out.push(Instance { e, x, eps });
    }
    out
}

#[test]
fn feasibility_verdicts_match_exhaustive_enumeration() {
    let mut vulnerable = 0;
    for (i, inst) in instances().iter().enumerate() {
        let q = Query::new(&inst.e, &inst.x, inst.eps);
        let r = check_robust(&q).unwrap();
        let oracle_robust = reference::verdict_by_enumeration(&inst.e, &inst.x, inst.eps);
        match &r.verdict {
            Verdict::Robust => {
                assert!(oracle_robust, "instance {i}: verifier Robust, oracle found a flip")
            }
            Verdict::Vulnerable { witness, prediction } => {
                assert!(!oracle_robust, "instance {i}: verifier Vulnerable, oracle says robust");
                // The witness must actually prove the claim.
                let dist = witness
                    .iter()
                    .zip(&inst.x)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                assert!(dist <= inst.eps, "instance {i}: witness distance {dist} > {}", inst.eps);
                assert!(witness.iter().all(|&v| (0.0..=1.0).contains(&v)));
                assert_eq!(inst.e.predict(witness), *prediction);
                assert_ne!(*prediction, q.y_pred);
                vulnerable += 1;

                // Re-running warm-started from the witness is a shortcut,
                // never a verdict change.
                let warm = Query { warm_start: Some(witness), ..Query::new(&inst.e, &inst.x, inst.eps) };
                let r2 = check_robust(&warm).unwrap();
                assert!(matches!(r2.verdict, Verdict::Vulnerable { .. }));
                assert_eq!(r2.nodes, 0, "warm start should skip the search");
            }
            Verdict::Timeout => panic!("instance {i}: unexpected timeout at default budget"),
        }
    }
    // The mix must exercise both outcomes to mean anything.
    assert!(vulnerable >= 20, "only {vulnerable} vulnerable instances");
    assert!(vulnerable <= 180, "only {} robust instances", 200 - vulnerable);
}

#[test]
fn distance_brackets_pin_the_enumerated_minimum() {
    let mut bounded = 0;
    for (i, inst) in instances().iter().enumerate() {
        let bracket = minimal_distance(&inst.e, &inst.x, 1e-6, DEFAULT_NODE_BUDGET).unwrap();
        assert!(bracket.complete, "instance {i}: budget exhausted");
        match reference::min_distance_by_enumeration(&inst.e, &inst.x) {
            None => {
                // No flip anywhere in the domain: the search must report
                // robust-everywhere rather than a finite bracket.
                assert!(bracket.hi.is_infinite(), "instance {i}: oracle found no flip");
                assert!(bracket.witness.is_none());
            }
            Some(d_star) => {
                assert!(
                    bracket.lo < d_star && d_star <= bracket.hi,
                    "instance {i}: oracle distance {d_star} outside ({}, {}]",
                    bracket.lo,
                    bracket.hi
                );
                assert!(
                    bracket.hi - bracket.lo <= 1e-6,
                    "instance {i}: bracket width {} above tolerance",
                    bracket.hi - bracket.lo
                );
                let w = bracket.witness.as_ref().expect("finite bracket carries a witness");
                assert_ne!(inst.e.predict(w), inst.e.predict(&inst.x));
                bounded += 1;
            }
        }
    }
    assert!(bounded >= 100, "only {bounded} instances had a finite distance");
}

#[test]
fn score_bounds_contain_scores_of_sampled_box_points() {
    let mut rng = StdRng::seed_from_u64(5);
    for inst in instances().iter().take(60) {
        let b = BoxRegion::around(&inst.x, inst.eps.max(0.05));
        let (lo, hi) = inst.e.score_bounds(&b).unwrap();
        for _ in 0..50 {
            let z: Vec<f64> = b
                .lo
                .iter()
                .zip(&b.hi)
                .map(|(&l, &h)| if l == h { l } else { rng.gen_range(l..=h) })
                .collect();
            let s = inst.e.scores(&z);
            for c in 0..inst.e.n_classes {
                assert!(
                    lo[c] <= s[c] && s[c] <= hi[c],
                    "class {c}: score {} outside [{}, {}]",
                    s[c],
                    lo[c],
                    hi[c]
                );
            }
        }
    }
}

#[test]
fn attack_rate_is_monotone_and_anchored_at_zero() {
    // Three differently trained models on one overlapping dataset.
    let mut rng = StdRng::seed_from_u64(77);
    let n = 120;
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let label = rng.gen_range(0..2usize);
        let c: f64 = if label == 0 { 0.35 } else { 0.65 };
        x.push(vec![
            (c + rng.gen_range(-0.3..0.3)).clamp(0.0, 1.0),
            (c + rng.gen_range(-0.3..0.3)).clamp(0.0, 1.0),
        ]);
        y.push(label);
    }
    let d = Dataset::from_parts(x, y, 2);
    let train: Vec<usize> = (0..80).collect();
    let test: Vec<usize> = (80..n).collect();

    for method in [Method::Rf, Method::GrootRf, Method::Gbt] {
        let cfg = TrainConfig {
            method,
            n_trees: 5,
            max_depth: 3,
            epsilon_train: 0.05,
            seed: 3,
            ..TrainConfig::default()
        };
        let e = fit(&d, &train, &cfg).unwrap();

        let mut last_adv = f64::INFINITY;
        for k in 0..20 {
            let eps = k as f64 * 0.01;
            let r = adversarial_accuracy(&e, &d, &test, eps, DEFAULT_NODE_BUDGET).unwrap();
            assert!(r.adv_acc <= r.acc + 1e-15, "{method}: AdvAcc above Acc");
            assert!(
                r.adv_acc <= last_adv + 1e-15,
                "{method}: AdvAcc rose from {last_adv} to {} at eps {eps}",
                r.adv_acc
            );
            if k == 0 {
                // At radius zero the ball is the point itself, so the attack
                // rate is exactly zero and AdvAcc coincides with Acc.
                assert_eq!(r.adv_acc, r.acc, "{method}: nonzero rate at radius 0");
            }
            last_adv = r.adv_acc;
        }
    }
}
