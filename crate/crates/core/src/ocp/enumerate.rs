use std::f64::consts::PI;

use serde::Serialize;

use super::newton::{evaluate_unconstrained, finish, least_squares_multipliers, solve_stationary, SolverOptions};
use super::{OcProblem, ProblemKind, StationaryPoint};
use crate::control::{ControlPolynomial, POSITIVITY_SAMPLES};
use crate::coupling::find_phi_h_roots;
use crate::reference::max_rescaled_time;
use crate::{Error, Result};

/// Controls deviating from their mean by less than this count as constant.
const CONSTANT_TOL: f64 = 1e-6;

/// Stationary points of a maximum-objective problem with terminal
/// observable in `[phi_lo, phi_hi]`.
///
/// The constant point comes from the reference solution, polished by the
/// Newton solver. Every zero `tau*` of `Phi_h` with `tau* < sqrt(C1 T)`
/// carries a degenerate family of stationary controls (any `mu` with
/// `I(mu) = tau*`, `G(mu) = C1`); from each family the two-coefficient
/// representatives `p_1 That_1 +- p_2 That_2` are returned, constant point
/// first, then by increasing `tau*`, `+` before `-`.
pub fn enumerate_sps(
    prob: &OcProblem,
    phi_lo: f64,
    phi_hi: f64,
    opts: &SolverOptions,
) -> Result<Vec<StationaryPoint>> {
    let ProblemKind::MaxObjective { horizon, budget } = prob.kind else {
        return Err(Error::InvalidInput(
            "stationary-point enumeration needs a maximum-objective problem".into(),
        ));
    };
    let in_range = |sp: &StationaryPoint| sp.terminal_observable >= phi_lo && sp.terminal_observable <= phi_hi;

    let mut points = Vec::new();
    let reference = max_rescaled_time(horizon, budget, &prob.cost)?;
    let constant = solve_stationary(prob, &[reference.mu_star * PI.sqrt()], opts)?;
    if in_range(&constant) {
        points.push(constant);
    }
    if prob.order < 2 {
        return Ok(points);
    }

    let tau_max = (budget * horizon).sqrt();
    let roots = find_phi_h_roots(prob.system.as_ref(), &prob.z0, tau_max, prob.tol)?;
    for tau in roots.into_iter().filter(|&t| t < tau_max * (1.0 - 1e-9)) {
        let p1 = tau * PI.sqrt() / horizon;
        let Some(p2) = second_coefficient(prob, p1, horizon, budget)? else {
            log::debug!("no two-coefficient control reaches tau* = {tau} on budget {budget}");
            continue;
        };
        for sign in [1.0, -1.0] {
            let mut coeffs = vec![0.0; prob.order];
            coeffs[0] = p1;
            coeffs[1] = sign * p2;
            let control = ControlPolynomial::new(coeffs, horizon)?;
            let ev = evaluate_unconstrained(prob, &control)?;
            let lambda = least_squares_multipliers(prob, &control, &ev);
            let sp = finish(prob, control, &lambda, 0)?;
            if sp.kkt_residual > opts.kkt_tol {
                log::warn!(
                    "candidate at tau* = {tau} rejected: KKT residual {:e}",
                    sp.kkt_residual
                );
                continue;
            }
            if in_range(&sp) {
                points.push(sp);
            }
        }
    }
    Ok(points)
}

/// `p_2 > 0` with `G(p_1 That_1 + p_2 That_2) = C1`, or `None` if `p_1`
/// alone already exceeds the budget.
fn second_coefficient(prob: &OcProblem, p1: f64, horizon: f64, budget: f64) -> Result<Option<f64>> {
    let base = p1 * p1 * horizon / PI;
    if prob.cost.is_square() {
        // int That_2^2 dt = 2T / (3 pi), cross term vanishes
        let rest = budget - base;
        return Ok((rest > 0.0).then(|| (rest * 3.0 * PI / (2.0 * horizon)).sqrt()));
    }
    let effort = |p2: f64| -> Result<f64> {
        let mut c = vec![0.0; prob.order];
        c[0] = p1;
        c[1] = p2;
        Ok(ControlPolynomial::new(c, horizon)?.integral_g(&prob.cost) - budget)
    };
    if effort(0.0)? >= 0.0 {
        return Ok(None);
    }
    let mut hi = 1.0;
    while effort(hi)? < 0.0 {
        hi *= 2.0;
        if hi > 1e8 {
            return Ok(None);
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-15 * hi {
        let mid = 0.5 * (lo + hi);
        if effort(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Optimality label of a stationary point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum Classification {
    LocalMax,
    LocalMin,
    GlobalMin,
    /// No theory decides; carries the second difference of the Lagrangian
    /// along `p_1` when one was computed.
    SaddleOrUnknown { restricted_curvature: Option<f64> },
}

/// Classify `sp` as far as first-order structure allows.
///
/// Maximum objective: a constant point is a local maximum if `Phi_h > 0`
/// and a local minimum if `Phi_h < 0`. Minimum effort with a convex cost: a
/// constant positive point is the global minimum. Minimum time is left
/// open, with the `p_1`-restricted curvature of the Lagrangian attached.
pub fn classify_sp(prob: &OcProblem, sp: &StationaryPoint) -> Result<Classification> {
    let constant = sp.control.deviation_from_constant(POSITIVITY_SAMPLES) <= CONSTANT_TOL;
    let unknown = Classification::SaddleOrUnknown { restricted_curvature: None };
    Ok(match prob.kind {
        ProblemKind::MaxObjective { .. } if constant && sp.phi_h > 0.0 => Classification::LocalMax,
        ProblemKind::MaxObjective { .. } if constant && sp.phi_h < 0.0 => Classification::LocalMin,
        ProblemKind::MinEffort { .. } if constant && sp.positive && prob.cost.is_convex() => {
            Classification::GlobalMin
        }
        ProblemKind::MinTime { .. } => Classification::SaddleOrUnknown {
            restricted_curvature: Some(restricted_curvature(prob, sp)?),
        },
        _ => unknown,
    })
}

/// Central second difference in `p_1` of
/// `T + lambda1 (G - C1) + lambda2 (Phi - target)` at fixed `T` and multipliers.
fn restricted_curvature(prob: &OcProblem, sp: &StationaryPoint) -> Result<f64> {
    let ProblemKind::MinTime { budget, target } = prob.kind else {
        return Err(Error::InvalidInput("restricted curvature is for minimum time".into()));
    };
    let lambda = sp.multipliers.to_vec();
    let horizon = sp.horizon();
    let lagrangian = |p1: f64| -> Result<f64> {
        let mut c = sp.coeffs().to_vec();
        c[0] = p1;
        let ev = evaluate_unconstrained(prob, &ControlPolynomial::new(c, horizon)?)?;
        Ok(horizon + lambda[0] * (ev.effort - budget) + lambda[1] * (ev.observable - target))
    };
    let p1 = sp.coeffs()[0];
    let d = 1e-3 * (1.0 + p1.abs());
    Ok((lagrangian(p1 + d)? - 2.0 * lagrangian(p1)? + lagrangian(p1 - d)?) / (d * d))
}
