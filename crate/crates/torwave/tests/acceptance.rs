//! The acceptance gate. Each check runs at the tolerances pinned in
//! `torwave::accept` and prints one pass/fail line (visible with
//! `cargo test --test acceptance -- --nocapture`). The same checks back the
//! `torwave accept` command.

use torwave::accept::{self, CriterionOutcome};

fn check(outcome: CriterionOutcome) {
    println!("{outcome}");
    assert!(outcome.passed, "{}: {}", outcome.name, outcome.detail);
}

#[test]
fn criterion_01_lattice_exhaustive() {
    check(accept::lattice_exhaustive());
}

#[test]
fn criterion_02_angular_measure() {
    check(accept::angular_measure());
}

#[test]
fn criterion_03_closed_form_zeros() {
    check(accept::closed_form_zeros());
}

#[test]
fn criterion_04_mean_m25() {
    check(accept::mean_for(25));
}

#[test]
fn criterion_04_mean_m65() {
    check(accept::mean_for(65));
}

#[test]
fn criterion_04_mean_m325() {
    check(accept::mean_for(325));
}

#[test]
fn criterion_05_variance_scale() {
    check(accept::variance_scale());
}

#[test]
fn criterion_06_variance_term() {
    check(accept::variance_term());
}

#[test]
fn criterion_07_repulsion() {
    check(accept::repulsion());
}

#[test]
fn criterion_08_markov_domination() {
    check(accept::markov_domination());
}

#[test]
fn criterion_09_concentration_trend() {
    check(accept::concentration_trend());
}

#[test]
fn criterion_10_universality() {
    check(accept::universality());
}

#[test]
fn criterion_11_determinism() {
    check(accept::determinism());
}

#[test]
fn criterion_12_large_sieve() {
    check(accept::large_sieve());
}

#[test]
fn criterion_13_perturbation() {
    check(accept::perturbation());
}
