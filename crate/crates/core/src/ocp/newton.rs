use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::kkt::{evaluate, inf_norm, KktEvaluation};
use super::{OcProblem, ProblemKind, StationaryPoint};
use crate::control::ControlPolynomial;
use crate::reference::Multipliers;
use crate::{Error, Result};

/// Newton solver settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// Acceptance threshold on the residual infinity norm.
    pub kkt_tol: f64,
    /// Stop when a step is shorter than `step_tol (1 + |x|)`.
    pub step_tol: f64,
    /// Solve the constraint block over `p_1` (and `T`) before the full system.
    pub constant_stage: bool,
    /// Initial horizon for minimum-time problems.
    pub horizon_guess: Option<f64>,
    /// Forward-difference step relative to `1 + |x|`.
    pub fd_step: f64,
    /// Largest acceptable condition number of the Newton Jacobian.
    pub max_condition: f64,
    /// Newton steps are shortened to at most `max_step (1 + |x|)`.
    pub max_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iters: 100,
            kkt_tol: 1e-8,
            step_tol: 1e-12,
            constant_stage: true,
            horizon_guess: None,
            fd_step: 1e-7,
            max_condition: 1e12,
            max_step: 2.0,
        }
    }
}

/// Find a stationary point of `prob` starting from `init` coefficients.
///
/// `init` is padded with zeros or truncated to the problem order.
pub fn solve_stationary(
    prob: &OcProblem,
    init: &[f64],
    opts: &SolverOptions,
) -> Result<StationaryPoint> {
    if init.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInput("initial coefficients must be finite".into()));
    }
    let q = prob.order;
    let mut coeffs = vec![0.0; q];
    for (c, v) in coeffs.iter_mut().zip(init) {
        *c = *v;
    }
    let free_time = prob.kind.fixed_horizon().is_none();
    let mut horizon = match prob.kind {
        ProblemKind::MaxObjective { horizon, .. } | ProblemKind::MinEffort { horizon, .. } => horizon,
        ProblemKind::MinTime { budget, .. } => opts.horizon_guess.unwrap_or_else(|| {
            let g = prob.cost.value(coeffs[0] / PI.sqrt());
            let t = budget / g;
            if t.is_finite() && t > 0.0 {
                t
            } else {
                1.0
            }
        }),
    };
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidInput(format!("horizon guess must be positive, got {horizon}")));
    }

    if opts.constant_stage {
        let (c0, t0) = (coeffs.clone(), horizon);
        let x0 = if free_time { vec![c0[0], t0] } else { vec![c0[0]] };
        let residual = |x: &[f64]| -> Result<Vec<f64>> {
            let mut c = c0.clone();
            c[0] = x[0];
            let t = if free_time { x[1] } else { t0 };
            let ev = evaluate_unconstrained(prob, &ControlPolynomial::new(c, t)?)?;
            Ok(constraint_rows(prob, &ev))
        };
        let (x, _, iters) = damped_newton(residual, x0, |x| !free_time || x[1] > 0.0, opts)
            .inspect_err(|e| log::warn!("constant stage failed: {e}"))?;
        log::debug!("constant stage converged in {iters} iterations: {x:?}");
        coeffs[0] = x[0];
        if free_time {
            horizon = x[1];
        }
    }

    let control = ControlPolynomial::new(coeffs.clone(), horizon)?;
    let ev = evaluate_unconstrained(prob, &control)?;
    let lambda = least_squares_multipliers(prob, &control, &ev);
    log::debug!("initial multipliers {lambda:?}");

    let mut x0 = coeffs;
    if free_time {
        x0.push(horizon);
    }
    x0.extend(&lambda);
    let unpack = |x: &[f64]| -> Result<(ControlPolynomial, Vec<f64>)> {
        let t = if free_time { x[q] } else { horizon };
        let offset = if free_time { q + 1 } else { q };
        Ok((ControlPolynomial::new(x[..q].to_vec(), t)?, x[offset..].to_vec()))
    };
    let (x, _, iterations) = damped_newton(
        |x| {
            let (c, l) = unpack(x)?;
            Ok(evaluate(prob, &c, &l)?.residual)
        },
        x0,
        |x| !free_time || x[q] > 0.0,
        opts,
    )?;
    let (control, lambda) = unpack(&x)?;
    finish(prob, control, &lambda, iterations)
}

/// Evaluation with placeholder multipliers, for quantities that do not
/// depend on them.
pub(crate) fn evaluate_unconstrained(
    prob: &OcProblem,
    control: &ControlPolynomial,
) -> Result<KktEvaluation> {
    evaluate(prob, control, &vec![0.0; prob.kind.multiplier_count()])
}

fn constraint_rows(prob: &OcProblem, ev: &KktEvaluation) -> Vec<f64> {
    match prob.kind {
        ProblemKind::MaxObjective { budget, .. } => vec![ev.effort - budget],
        ProblemKind::MinEffort { target, .. } => vec![ev.observable - target],
        ProblemKind::MinTime { budget, target } => {
            vec![ev.effort - budget, ev.observable - target]
        }
    }
}

/// Multipliers minimizing the stationarity residual at a fixed control; for
/// minimum time the transversality row is included so that the system is
/// not homogeneous.
pub(crate) fn least_squares_multipliers(
    prob: &OcProblem,
    control: &ControlPolynomial,
    ev: &KktEvaluation,
) -> Vec<f64> {
    let q = control.order();
    let (a, b) = match prob.kind {
        ProblemKind::MaxObjective { .. } => (
            DMatrix::from_column_slice(q, 1, &ev.effort_gradient),
            DVector::from_iterator(q, ev.observable_gradient.iter().map(|v| -v)),
        ),
        ProblemKind::MinEffort { .. } => (
            DMatrix::from_column_slice(q, 1, &ev.observable_gradient),
            DVector::from_iterator(q, ev.effort_gradient.iter().map(|v| -v)),
        ),
        ProblemKind::MinTime { .. } => {
            let mu_end = control.terminal_value();
            let mut a = DMatrix::zeros(q + 1, 2);
            for i in 0..q {
                a[(i, 0)] = ev.effort_gradient[i];
                a[(i, 1)] = ev.observable_gradient[i];
            }
            a[(q, 0)] = prob.cost.value(mu_end);
            a[(q, 1)] = ev.phi_h * mu_end;
            let mut b = DVector::zeros(q + 1);
            b[q] = -1.0;
            (a, b)
        }
    };
    let svd = a.svd(true, true);
    let eps = 1e-14 * svd.singular_values.max();
    match svd.solve(&b, eps) {
        Ok(x) => x.iter().copied().collect(),
        Err(_) => vec![0.0; prob.kind.multiplier_count()],
    }
}

pub(crate) fn finish(
    prob: &OcProblem,
    control: ControlPolynomial,
    lambda: &[f64],
    iterations: usize,
) -> Result<StationaryPoint> {
    let ev = evaluate(prob, &control, lambda)?;
    let objective = match prob.kind {
        ProblemKind::MaxObjective { .. } => ev.observable,
        ProblemKind::MinEffort { .. } => ev.effort,
        ProblemKind::MinTime { .. } => control.horizon(),
    };
    let multipliers = Multipliers::try_from(lambda.to_vec()).map_err(Error::InvalidInput)?;
    Ok(StationaryPoint {
        positive: control.is_positive(),
        kkt_residual: ev.norm(),
        objective,
        terminal_observable: ev.observable,
        phi_h: ev.phi_h,
        multipliers,
        control,
        iterations,
    })
}

/// Damped Newton on a square system with a forward-difference Jacobian and
/// Armijo backtracking on `|F|^2 / 2`. Returns the solution, its residual
/// and the iteration count.
fn damped_newton(
    f: impl Fn(&[f64]) -> Result<Vec<f64>>,
    mut x: Vec<f64>,
    admissible: impl Fn(&[f64]) -> bool,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    const ARMIJO: f64 = 1e-4;
    let n = x.len();
    let mut fx = f(&x)?;
    if fx.len() != n {
        return Err(Error::InvalidInput(format!(
            "Newton system has {n} unknowns but {} equations",
            fx.len()
        )));
    }
    for iter in 0..opts.max_iters {
        let norm = inf_norm(&fx);
        if norm <= opts.kkt_tol {
            return Ok((x, fx, iter));
        }
        let scale = 1.0 + inf_norm(&x);
        let h = opts.fd_step * scale;
        let mut jac = DMatrix::zeros(n, n);
        let mut xp = x.clone();
        for j in 0..n {
            xp[j] = x[j] + h;
            let fp = f(&xp)?;
            xp[j] = x[j];
            for i in 0..n {
                jac[(i, j)] = (fp[i] - fx[i]) / h;
            }
        }
        let svd = jac.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if condition > opts.max_condition {
            return Err(Error::SingularJacobian { condition, iterate: x });
        }
        let rhs = DVector::from_iterator(n, fx.iter().map(|v| -v));
        let mut dx = svd
            .solve(&rhs, 0.0)
            .map_err(|e| Error::Degenerate(format!("Newton step: {e}")))?;
        // a flat direction (e.g. a saturated observable) gives huge steps
        // whose trial integrations are expensive
        let cap = opts.max_step * scale;
        if dx.amax() > cap {
            dx *= cap / dx.amax();
        }

        let merit = 0.5 * fx.iter().map(|v| v * v).sum::<f64>();
        let step_norm = dx.amax();
        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha * step_norm > opts.step_tol * scale {
            let xt: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + alpha * d).collect();
            if admissible(&xt) {
                if let Ok(ft) = f(&xt) {
                    let mt = 0.5 * ft.iter().map(|v| v * v).sum::<f64>();
                    if mt.is_finite() && mt <= (1.0 - 2.0 * ARMIJO * alpha) * merit {
                        accepted = Some((xt, ft));
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((xt, ft)) => {
                log::trace!("newton {iter}: |F| = {norm:e}, step {alpha}");
                x = xt;
                fx = ft;
            }
            None => {
                return Err(Error::NonConvergence { iterations: iter, residual: norm, iterate: x });
            }
        }
    }
    let residual = inf_norm(&fx);
    if residual <= opts.kkt_tol {
        return Ok((x, fx, opts.max_iters));
    }
    Err(Error::NonConvergence { iterations: opts.max_iters, residual, iterate: x })
}
