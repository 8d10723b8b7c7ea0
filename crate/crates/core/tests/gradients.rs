mod support;

use support::*;

fn check(name: &str, errors: Vec<f64>) {
    check_within(name, errors, 1e-4);
}

fn check_within(name: &str, errors: Vec<f64>, tol: f64) {
    let worst = errors.iter().cloned().fold(0.0, f64::max);
    assert!(worst < tol, "{name}: worst relative error {worst:e}");
}

#[test]
fn attention_backward_matches_finite_differences() {
    check("attention", attention_gradient_errors(120));
}

#[test]
fn negative_sampling_gradient_matches_finite_differences() {
    check_within("negative sampling", negative_sampling_gradient_errors(100), 1e-6);
}

#[test]
fn ranking_loss_gradient_matches_finite_differences() {
    check("ranking", mnr_gradient_errors(100));
}

#[test]
fn margin_loss_gradient_matches_finite_differences() {
    check("margin", gpl_gradient_errors(100));
}

#[test]
fn masked_token_gradient_matches_finite_differences() {
    check("masked token", mlm_gradient_errors(40));
}
