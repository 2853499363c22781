mod common;

use common::{check_configuration, central_differences, gradient_sweep, relative_error};

#[test]
fn analytic_gradients_match_central_differences() {
    let g = gradient_sweep(100, 0);
    println!("worst relative errors: {g:?}");
    assert!(g.reward < 1e-4, "reward loss {g:?}");
    assert!(g.classifier < 1e-4, "classifier {g:?}");
    assert!(g.actor < 1e-4, "actor {g:?}");
    assert!(g.critic < 1e-4, "critic {g:?}");
}

#[test]
fn checker_flags_a_wrong_gradient() {
    // d/dx (x0² + 3 x1) is (2 x0, 3); report (x0, 3) instead
    let x = [1.5, -0.5];
    let numeric = central_differences(&x, |p| p[0] * p[0] + 3.0 * p[1]);
    assert!(relative_error(&[3.0, 3.0], &numeric) < 1e-8);
    assert!(relative_error(&[1.5, 3.0], &numeric) > 0.1);
}

#[test]
fn configurations_are_reproducible() {
    let a = check_configuration(42);
    let b = check_configuration(42);
    assert_eq!(a.worst(), b.worst());
}
