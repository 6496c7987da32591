mod support;

use std::f64::consts::PI;

use reprometer::precision::{c4, cv_star, CvOptions};
use support::{oracle, suites};

#[test]
fn c4_matches_closed_forms() {
    let closed = [
        (2, (2.0 / PI).sqrt()),
        (3, PI.sqrt() / 2.0),
        (4, 2.0 * (2.0 / (3.0 * PI)).sqrt()),
    ];
    for (n, want) in closed {
        assert!((c4(n).unwrap() - want).abs() < 1e-9, "c4({n})");
        assert!((oracle::c4_direct(n) - want).abs() < 1e-9, "oracle c4({n})");
    }
    assert!(c4(50).unwrap() > 0.9948);
}

#[test]
fn cv_star_hand_derivation() {
    let want = 1.125 * (PI.sqrt() / 2.0) / 3.5 * 100.0;
    let got = cv_star(&[3.0, 4.0], &CvOptions::default()).unwrap().cv_star;
    assert!((got - want).abs() < 1e-9);
}

#[test]
fn cv_star_matches_direct_gamma() {
    suites::cv_star_vs_direct_gamma().unwrap();
}

#[test]
fn correlations_match_naive_oracles() {
    suites::correlations_vs_naive().unwrap();
}

#[test]
fn alpha_matches_pairable_values() {
    suites::alpha_vs_pairable_values().unwrap();
}

#[test]
fn p_matches_ordered_enumeration() {
    suites::p_vs_enumeration().unwrap();
}
