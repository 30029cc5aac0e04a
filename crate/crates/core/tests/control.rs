mod common;

use std::f64::consts::PI;

use common::*;
use sepoc_core::control::{basis_integrals, basis_values, chebyshev_t};
use sepoc_core::{ControlPolynomial, CostFunction, Error};

#[test]
fn basis_normalization() {
    let v = basis_values(3, 0.5);
    assert!((v[0] - 1.0 / PI.sqrt()).abs() < 1e-15);
    assert!((v[1] - (2.0 / PI).sqrt() * 0.5).abs() < 1e-15);
    assert!((v[2] - (2.0 / PI).sqrt() * chebyshev_t(2, 0.5)).abs() < 1e-15);
    assert_eq!(chebyshev_t(4, 1.0), 1.0);
    assert!((chebyshev_t(3, 0.3) - (4.0 * 0.027 - 0.9)).abs() < 1e-15);
}

#[test]
fn constant_coefficient_evaluation() {
    let mut c = vec![0.0; 10];
    c[0] = 1.0;
    let mu = ControlPolynomial::new(c, 3.0).unwrap();
    for t in [0.0, 1.0, 3.0] {
        assert!((mu.eval(t).unwrap() - 1.0 / PI.sqrt()).abs() < 1e-15);
    }
    let reference = ControlPolynomial::new(vec![1.0233], 3.0).unwrap();
    assert!((reference.eval(1.5).unwrap() - 0.57735).abs() < 1e-4);
}

#[test]
fn first_order_term_at_start() {
    let mu = ControlPolynomial::new(vec![0.0, 1.0], 2.0).unwrap();
    assert!((mu.eval(0.0).unwrap() + (2.0 / PI).sqrt()).abs() < 1e-15);
    assert!((mu.terminal_value() - (2.0 / PI).sqrt()).abs() < 1e-15);
}

#[test]
fn evaluation_outside_horizon_fails() {
    let mu = ControlPolynomial::new(vec![1.0], 2.0).unwrap();
    assert!(matches!(mu.eval(2.5), Err(Error::OutOfDomain { .. })));
    assert!(matches!(mu.eval(-0.1), Err(Error::OutOfDomain { .. })));
}

#[test]
fn rejects_invalid_construction() {
    assert!(ControlPolynomial::new(vec![], 1.0).is_err());
    assert!(ControlPolynomial::new(vec![1.0], 0.0).is_err());
    assert!(ControlPolynomial::new(vec![f64::NAN], 1.0).is_err());
    assert!(CostFunction::power(1).is_err());
    assert!(CostFunction::power(0).is_err());
}

#[test]
fn rescaled_time_of_constant_control() {
    let mu = ControlPolynomial::new(vec![1.7], 4.0).unwrap();
    assert!((mu.integral_i() - 1.7 * 4.0 / PI.sqrt()).abs() < 1e-14);
    let c = ControlPolynomial::constant(0.25, 5, 8.0).unwrap();
    assert!((c.integral_i() - 2.0).abs() < 1e-14);
}

#[test]
fn rescaled_time_matches_simpson() {
    let mut rng = Stream::new(7);
    for _ in 0..50 {
        let horizon = rng.uniform(0.5, 8.0);
        let coeffs: Vec<f64> = (0..10).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let mu = ControlPolynomial::new(coeffs, horizon).unwrap();
        let oracle = simpson(&|t| mu.eval(t).unwrap(), 0.0, horizon, 1e-14);
        assert!((mu.integral_i() - oracle).abs() < 1e-12 * (1.0 + oracle.abs()));
        let ints = basis_integrals(10, horizon);
        let lin: f64 = ints.iter().zip(mu.coeffs()).map(|(a, b)| a * b).sum();
        assert!((lin - mu.integral_i()).abs() < 1e-13 * (1.0 + lin.abs()));
    }
}

#[test]
fn effort_examples() {
    let c = ControlPolynomial::constant(0.5, 3, 2.0).unwrap();
    assert!((c.integral_g(&CostFunction::Square) - 0.5).abs() < 1e-14);
    let one = ControlPolynomial::constant(1.0, 3, 2.0).unwrap();
    assert!((one.integral_g(&CostFunction::power(4).unwrap()) - 2.0).abs() < 1e-14);

    let mu = ControlPolynomial::new(vec![1.0, 1.0], PI).unwrap();
    let oracle = simpson(&|t| mu.eval(t).unwrap().powi(2), 0.0, PI, 1e-14);
    assert!((mu.integral_g(&CostFunction::Square) - oracle).abs() < 1e-10);
    // 1/pi * pi + 2/(3 pi) * pi
    assert!((oracle - (1.0 + 2.0 / 3.0)).abs() < 1e-10);
}

#[test]
fn effort_matches_simpson_for_general_costs() {
    let cosh = CostFunction::custom("cosh", |m: f64| m.cosh() - 1.0, |m: f64| m.sinh(), true);
    let mut rng = Stream::new(8);
    for cost in [CostFunction::Square, CostFunction::power(3).unwrap(), cosh] {
        for _ in 0..10 {
            let horizon = rng.uniform(1.0, 5.0);
            let mu = positive_control(&mut rng, horizon);
            let oracle = simpson(&|t| cost.value(mu.eval(t).unwrap()), 0.0, horizon, 1e-13);
            assert!(
                (mu.integral_g(&cost) - oracle).abs() < 1e-10 * (1.0 + oracle),
                "{}",
                cost.label()
            );
        }
    }
}

#[test]
fn functional_gradients_match_central_differences() {
    let cost = CostFunction::power(3).unwrap();
    let mut rng = Stream::new(9);
    for _ in 0..20 {
        let horizon = rng.uniform(1.0, 5.0);
        let mu = positive_control(&mut rng, horizon);
        let at = |c: &[f64]| ControlPolynomial::new(c.to_vec(), horizon).unwrap();
        let fd_i = central_gradient(|c| at(c).integral_i(), mu.coeffs(), 1e-6);
        let fd_g = central_gradient(|c| at(c).integral_g(&cost), mu.coeffs(), 1e-6);
        assert!(rel_err(&fd_i, &mu.integral_i_gradient(), 1.0) < 1e-8);
        assert!(rel_err(&fd_g, &mu.integral_g_gradient(&cost), 1.0) < 1e-8);
    }
}

#[test]
fn rescaled_time_is_bounded_by_effort() {
    // Cauchy-Schwarz: I(mu)^2 <= T G(mu) for g = mu^2
    let mut rng = Stream::new(10);
    for _ in 0..1000 {
        let horizon = rng.uniform(0.1, 10.0);
        let coeffs: Vec<f64> = (0..10).map(|_| rng.uniform(-2.0, 2.0)).collect();
        let mu = ControlPolynomial::new(coeffs, horizon).unwrap();
        let i = mu.integral_i();
        let g = mu.integral_g(&CostFunction::Square);
        assert!(i * i <= horizon * g * (1.0 + 1e-12));
    }
}

#[test]
fn refit_recovers_coefficients() {
    let mut rng = Stream::new(12);
    for _ in 0..20 {
        let horizon = rng.uniform(0.5, 6.0);
        let coeffs: Vec<f64> = (0..10).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let mu = ControlPolynomial::new(coeffs.clone(), horizon).unwrap();
        let refit = ControlPolynomial::fit(|s| mu.eval_sigma(s), 10, horizon).unwrap();
        assert!(max_abs_diff(refit.coeffs(), &coeffs) < 1e-12);
    }
}

#[test]
fn positivity_flag() {
    assert!(ControlPolynomial::new(vec![1.0, 0.1], 1.0).unwrap().is_positive());
    assert!(!ControlPolynomial::new(vec![0.1, 1.0], 1.0).unwrap().is_positive());
    assert!(!ControlPolynomial::new(vec![-1.0], 1.0).unwrap().is_positive());
}

#[test]
fn constant_deviation() {
    let c = ControlPolynomial::constant(2.0, 10, 5.0).unwrap();
    assert!(c.deviation_from_constant(200) < 1e-15);
    let v = ControlPolynomial::new(vec![1.0, 0.3], 5.0).unwrap();
    assert!(v.deviation_from_constant(200) > 0.1);
}

#[test]
fn horizon_change_keeps_coefficients() {
    let mu = ControlPolynomial::new(vec![1.0, 0.5], 2.0).unwrap();
    let stretched = mu.with_horizon(4.0).unwrap();
    assert_eq!(stretched.coeffs(), mu.coeffs());
    assert!((stretched.eval(2.0).unwrap() - mu.eval(1.0).unwrap()).abs() < 1e-15);
    assert!((stretched.integral_i() - 2.0 * mu.integral_i()).abs() < 1e-14);
}

#[test]
fn cost_function_helpers() {
    let sq = CostFunction::Square;
    assert_eq!(sq.value(3.0), 9.0);
    assert_eq!(sq.derivative(3.0), 6.0);
    assert_eq!(sq.ratio(3.0), 3.0);
    assert!(sq.is_convex() && sq.is_square());
    let cube = CostFunction::power(3).unwrap();
    assert_eq!(cube.derivative(2.0), 12.0);
    assert!(!cube.is_convex());
    assert!(matches!(CostFunction::power(2).unwrap(), CostFunction::Square));
    assert_eq!(cube.label(), "mu^3");
}
