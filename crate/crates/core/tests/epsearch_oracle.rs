//! End-to-end checks of the radius calibration loop against a model whose
//! attack-rate curve is known in closed form, plus the verifier-call budget
//! accounting the per-sample bounds are supposed to buy.

use treeguard::data::Dataset;
use treeguard::epsearch::{search_epsilon, SearchConfig};
use treeguard::train::{fit, Method, TrainConfig};
use treeguard::trees::Ensemble;

/// A stump at 0.5 trained on two clean clusters, one feature.
fn stump() -> Ensemble {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..20 {
        x.push(vec![0.1 + 0.001 * i as f64]);
        y.push(0);
        x.push(vec![0.9 - 0.001 * i as f64]);
        y.push(1);
    }
    let d = Dataset::from_parts(x, y, 2);
    let cfg = TrainConfig {
        method: Method::Rf,
        n_trees: 1,
        max_depth: 1,
        bootstrap: false,
        feature_subsample: 1.0,
        ..TrainConfig::default()
    };
    let rows: Vec<usize> = (0..d.x.len()).collect();
    fit(&d, &rows, &cfg).unwrap()
}

/// 100 class-1 samples at 0.5 + i/1000: sample i flips by sliding left onto
/// the stump threshold, so its flipping distance is i/1000 up to float
/// rounding and the attack rate at radius eps is floor(1000 * eps) / 100.
fn ladder() -> (Ensemble, Dataset, Vec<usize>) {
    let e = stump();
    let x: Vec<Vec<f64>> = (1..=100).map(|i| vec![0.5 + i as f64 / 1000.0]).collect();
    let y = vec![1usize; 100];
    let d = Dataset::from_parts(x, y, 2);
    let rows: Vec<usize> = (0..100).collect();
    (e, d, rows)
}

/// Closed-form quantile of the ladder's distance distribution: the smallest
/// evenly spaced distance whose rank reaches the target rate.
fn ladder_quantile(eta_star: f64) -> f64 {
    let k = (eta_star * 100.0).ceil() as usize;
    k as f64 / 1000.0
}

#[test]
fn calibration_lands_in_the_band_around_the_known_quantile() {
    let (e, d, rows) = ladder();
    let cfg = SearchConfig::default(); // target rate 0.1, band 0.02
    let out = search_epsilon(&e, &d, &rows, &cfg).unwrap();

    assert!(out.converged, "search should converge on the ladder");
    assert!(!out.unreachable);
    // The 10% quantile of the distances sits between 0.010 and 0.011.
    assert!(
        (0.010..=0.011).contains(&out.eps_hat),
        "eps_hat {} outside [0.010, 0.011]",
        out.eps_hat
    );
    assert!((out.eta - 0.1).abs() <= cfg.band + 1e-12);

    let distinct = {
        let mut es: Vec<f64> = out.state.evaluated.iter().map(|p| p.0).collect();
        es.sort_by(f64::total_cmp);
        es.dedup();
        es.len()
    };
    assert!(distinct <= 15, "{distinct} distinct radii evaluated");
}

#[test]
fn calibration_tracks_the_quantile_across_target_rates() {
    let (e, d, rows) = ladder();
    for eta_star in [0.05, 0.2, 0.33] {
        let cfg = SearchConfig { eta_star, band: 0.01, ..SearchConfig::default() };
        let out = search_epsilon(&e, &d, &rows, &cfg).unwrap();
        assert!(out.converged, "target {eta_star}: did not converge");

        // A rate within the band corresponds to a radius within one rung of
        // the quantile: each rung of the ladder is worth exactly 0.01 rate.
        let q = ladder_quantile(eta_star);
        assert!(
            out.eps_hat > q - 0.0021 && out.eps_hat < q + 0.0011,
            "target {eta_star}: eps_hat {} far from quantile {q}",
            out.eps_hat
        );
        assert!(
            (out.eta - eta_star).abs() <= cfg.band + 1e-12,
            "target {eta_star}: rate {} outside band",
            out.eta
        );
    }
}

#[test]
fn verifier_calls_stay_within_the_per_radius_budget() {
    let (e, d, rows) = ladder();
    let cfg = SearchConfig::default();
    let out = search_epsilon(&e, &d, &rows, &cfg).unwrap();

    let distinct = {
        let mut es: Vec<f64> = out.state.evaluated.iter().map(|p| p.0).collect();
        es.sort_by(f64::total_cmp);
        es.dedup();
        es.len()
    };
    // Without the certified per-sample bands every radius would cost one
    // verifier call per test sample; the bands must never cost more, and on
    // the ladder they must genuinely save calls after the first radius.
    assert!(
        out.state.verifier_calls <= rows.len() * distinct,
        "{} calls exceeds {} x {}",
        out.state.verifier_calls,
        rows.len(),
        distinct
    );
    assert!(
        distinct == 1 || out.state.verifier_calls < rows.len() * distinct,
        "bands saved nothing across {distinct} radii"
    );

    // The trace is the audit record: one line per evaluation, radii matching
    // the evaluated list, call counts summing to the total.
    assert_eq!(out.state.trace.len(), out.state.evaluated.len());
    let total: usize = out.state.trace.iter().map(|t| t.verifier_calls).sum();
    assert_eq!(total, out.state.verifier_calls);
    for (t, (eps, eta)) in out.state.trace.iter().zip(&out.state.evaluated) {
        assert_eq!(t.epsilon, *eps);
        assert_eq!(t.eta, *eta);
    }
}

#[test]
fn repeated_searches_are_bit_identical() {
    let (e, d, rows) = ladder();
    let cfg = SearchConfig::default();
    let a = search_epsilon(&e, &d, &rows, &cfg).unwrap();
    let b = search_epsilon(&e, &d, &rows, &cfg).unwrap();
    assert_eq!(a.eps_hat.to_bits(), b.eps_hat.to_bits());
    assert_eq!(a.eta.to_bits(), b.eta.to_bits());
    assert_eq!(a.state.evaluated, b.state.evaluated);
    assert_eq!(a.state.verifier_calls, b.state.verifier_calls);
}
