mod common;

use common::*;
use sepoc_core::coupling::{find_phi_h_roots, solve_c2};
use sepoc_core::models::{default_adn, default_kuramoto, default_oa};
use sepoc_core::ode::{integrate_controlled, Sampling};
use sepoc_core::{ClosureSystem, ControlPolynomial, Error, SeparableSystem, DEFAULT_TOL};

/// First crossing of `Phi = target` on an RK4 grid, linearly interpolated.
fn rk4_crossing(sys: &dyn SeparableSystem, z0: &[f64], target: f64, tau_max: f64, dt: f64) -> f64 {
    let grid = rk4_grid(|_, z, o| sys.vector_field(z, o), z0, tau_max, dt);
    let vals: Vec<(f64, f64)> = grid.iter().map(|(t, z)| (*t, sys.observable(z) - target)).collect();
    let k = vals.windows(2).position(|w| w[0].1 < 0.0 && w[1].1 >= 0.0).expect("crossing");
    let ((t0, f0), (t1, f1)) = (vals[k], vals[k + 1]);
    t0 - f0 * (t1 - t0) / (f1 - f0)
}

#[test]
fn kuramoto_coupling_matches_rk4() {
    let (sys, z0) = default_kuramoto();
    let res = solve_c2(&sys, &z0, 0.9, 10.0, DEFAULT_TOL).unwrap();
    let oracle = rk4_crossing(&sys, &z0, 0.9, 4.0, 1e-4);
    assert!((res.c2 - oracle).abs() < 1e-6, "{} vs {oracle}", res.c2);
    assert!((res.phi_at_c2 - 0.9).abs() < 1e-9);
    assert!(res.phi_h_at_c2.unwrap() > 0.0);
    assert_eq!(res.roots[0], res.c2);
}

#[test]
fn adn_coupling_is_unique() {
    let (sys, z0) = default_adn();
    let res = solve_c2(&sys, &z0, 0.9, 40.0, DEFAULT_TOL).unwrap();
    assert_eq!(res.branch_count, 1);
    let oracle = rk4_crossing(&sys, &z0, 0.9, 15.0, 1e-4);
    assert!((res.c2 - oracle).abs() < 1e-6);
}

#[test]
fn logistic_coupling_is_exact() {
    let (sys, z0) = logistic(1.7527, 0.9);
    let res = solve_c2(sys.as_ref(), &z0, 0.9, 10.0, DEFAULT_TOL).unwrap();
    assert!((res.c2 - 1.7527).abs() < 1e-8);
    let (sys, z0) = logistic(9f64.ln(), 0.9);
    let res = solve_c2(sys.as_ref(), &z0, 0.9, 10.0, DEFAULT_TOL).unwrap();
    assert!((res.c2 - 9f64.ln()).abs() < 1e-8);
    assert!((z0[0] - 0.5).abs() < 1e-15);
}

#[test]
fn initial_value_is_not_a_positive_root() {
    let (sys, z0) = default_adn();
    assert!(matches!(
        solve_c2(&sys, &z0, 0.02, 30.0, DEFAULT_TOL),
        Err(Error::TargetUnreachable { .. })
    ));
}

#[test]
fn unreachable_target() {
    let (sys, z0) = default_adn();
    assert!(matches!(
        solve_c2(&sys, &z0, 1.5, 30.0, DEFAULT_TOL),
        Err(Error::TargetUnreachable { target, tau_max }) if target == 1.5 && tau_max == 30.0
    ));
}

#[test]
fn coupling_round_trip() {
    // mu* = C2 / T lands on the target at T
    let (sys, z0) = default_kuramoto();
    let c2 = solve_c2(&sys, &z0, 0.9, 10.0, DEFAULT_TOL).unwrap().c2;
    for horizon in [1.0, 3.0, 7.5] {
        let mu = ControlPolynomial::constant(c2 / horizon, 10, horizon).unwrap();
        let traj = integrate_controlled(&sys, &mu, &z0, horizon, DEFAULT_TOL, &Sampling::Terminal).unwrap();
        assert!((sys.observable(traj.terminal()) - 0.9).abs() < 1e-6);
    }
}

#[test]
fn roots_do_not_depend_on_scan_grid() {
    let (sys, z0) = default_kuramoto();
    let a = solve_c2(&sys, &z0, 0.9, 10.0, DEFAULT_TOL).unwrap();
    let b = solve_c2(&sys, &z0, 0.9, 5.0, DEFAULT_TOL).unwrap();
    let c = solve_c2(&sys, &z0, 0.9, 10.0, DEFAULT_TOL).unwrap();
    assert!((a.c2 - b.c2).abs() < 1e-9);
    assert_eq!(a.c2.to_bits(), c.c2.to_bits());

    let r1 = find_phi_h_roots(&sys, &z0, 2.0, DEFAULT_TOL).unwrap();
    let r2 = find_phi_h_roots(&sys, &z0, 1.3, DEFAULT_TOL).unwrap();
    assert_eq!(r1.len(), r2.len());
    for (x, y) in r1.iter().zip(&r2) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn kuramoto_lie_derivative_roots() {
    let (sys, z0) = default_kuramoto();
    let roots = find_phi_h_roots(&sys, &z0, 3f64.sqrt(), DEFAULT_TOL).unwrap();
    assert_eq!(roots.len(), 2);
    assert!(roots.windows(2).all(|w| w[0] < w[1]));
    // a local maximum then a local minimum of Phi
    let curve = |t: f64| sys.observable(&sepoc_core::ode::rescaled_state(&sys, &z0, t, DEFAULT_TOL).unwrap());
    let d = 1e-3;
    assert!(curve(roots[0]) > curve(roots[0] - d) && curve(roots[0]) > curve(roots[0] + d));
    assert!(curve(roots[1]) < curve(roots[1] - d) && curve(roots[1]) < curve(roots[1] + d));
}

#[test]
fn monotone_models_have_no_lie_derivative_roots() {
    let (adn, az) = default_adn();
    assert!(find_phi_h_roots(&adn, &az, 30.0, DEFAULT_TOL).unwrap().is_empty());
    let (oa, oz) = default_oa(2.2, 0.1).unwrap();
    assert!(find_phi_h_roots(&oa, &oz, 10.0, DEFAULT_TOL).unwrap().is_empty());
    // z' = cos z, Phi = z: Phi_h = sech(tau) > 0
    let sys = ClosureSystem::new("cos", 1, |z, o| o[0] = z[0].cos(), |z| z[0], |_, g| g[0] = 1.0).unwrap();
    assert!(find_phi_h_roots(&sys, &[0.0], 20.0, DEFAULT_TOL).unwrap().is_empty());
}

#[test]
fn oscillator_lie_derivative_roots() {
    // rotation in the plane, Phi = x: Phi_h = -y vanishes at k pi
    let sys = ClosureSystem::new(
        "rotation",
        2,
        |z, o| {
            o[0] = -z[1];
            o[1] = z[0];
        },
        |z| z[0],
        |_, g| {
            g[0] = 1.0;
            g[1] = 0.0;
        },
    )
    .unwrap();
    let roots = find_phi_h_roots(&sys, &[1.0, 0.0], 7.0, DEFAULT_TOL).unwrap();
    assert_eq!(roots.len(), 2);
    assert!((roots[0] - std::f64::consts::PI).abs() < 1e-8);
    assert!((roots[1] - 2.0 * std::f64::consts::PI).abs() < 1e-8);
}

#[test]
fn coupling_depends_on_initial_condition_and_distribution() {
    let c2 = |gamma: f64, alpha0: f64| {
        let (sys, z0) = default_oa(gamma, alpha0).unwrap();
        solve_c2(&sys, &z0, 0.9, 20.0, DEFAULT_TOL).unwrap().c2
    };
    let base = c2(2.2, 0.1);
    assert!((c2(2.2, 0.3) - base).abs() > 1e-3);
    assert!((c2(3.0, 0.1) - base).abs() > 1e-3);
}

#[test]
fn rejects_bad_range() {
    let (sys, z0) = default_adn();
    assert!(matches!(solve_c2(&sys, &z0, 0.9, -1.0, DEFAULT_TOL), Err(Error::InvalidInput(_))));
}
