use super::{OcProblem, ProblemKind};
use crate::control::ControlPolynomial;
use crate::ode::forward_sensitivities;
use crate::{Error, Result};

/// Everything the KKT conditions need at one control.
#[derive(Debug, Clone)]
pub struct KktEvaluation {
    /// Stationarity rows (`q`), constraint rows, and for minimum time the
    /// transversality row.
    pub residual: Vec<f64>,
    pub terminal_state: Vec<f64>,
    /// `Phi(z(T))`.
    pub observable: f64,
    /// `dPhi(z(T))/dp_i`.
    pub observable_gradient: Vec<f64>,
    pub phi_h: f64,
    /// `G(mu)`.
    pub effort: f64,
    /// `dG/dp_i`.
    pub effort_gradient: Vec<f64>,
}

impl KktEvaluation {
    pub fn norm(&self) -> f64 {
        inf_norm(&self.residual)
    }
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// KKT residual of `prob` at the given coefficients and multipliers.
///
/// `horizon` must be given for minimum-time problems and is ignored
/// otherwise. The residual stacks `dL/dp_i` (`q` rows), the constraint
/// residuals, and for minimum time `1 + lambda1 g(mu(T)) + lambda2 Phi_h mu(T)`.
pub fn kkt_residual(
    prob: &OcProblem,
    coeffs: &[f64],
    multipliers: &[f64],
    horizon: Option<f64>,
) -> Result<Vec<f64>> {
    let horizon = match (prob.kind.fixed_horizon(), horizon) {
        (Some(t), _) => t,
        (None, Some(t)) => t,
        (None, None) => {
            return Err(Error::InvalidInput("minimum-time residual needs a horizon".into()))
        }
    };
    let control = ControlPolynomial::new(coeffs.to_vec(), horizon)?;
    Ok(evaluate(prob, &control, multipliers)?.residual)
}

pub(crate) fn evaluate(
    prob: &OcProblem,
    control: &ControlPolynomial,
    multipliers: &[f64],
) -> Result<KktEvaluation> {
    if multipliers.len() != prob.kind.multiplier_count() {
        return Err(Error::InvalidInput(format!(
            "expected {} multiplier(s), got {}",
            prob.kind.multiplier_count(),
            multipliers.len()
        )));
    }
    if control.order() != prob.order {
        return Err(Error::InvalidInput(format!(
            "expected {} coefficients, got {}",
            prob.order,
            control.order()
        )));
    }
    let sys = prob.system.as_ref();
    let n = sys.dim();
    let sens = forward_sensitivities(sys, control, &prob.z0, control.horizon(), prob.tol)?;
    let z = sens.state;
    let mut grad = vec![0.0; n];
    sys.observable_gradient(&z, &mut grad)?;
    let mut h = vec![0.0; n];
    sys.vector_field(&z, &mut h);
    let phi_h: f64 = grad.iter().zip(&h).map(|(a, b)| a * b).sum();
    let observable = sys.observable(&z);
    let observable_gradient: Vec<f64> = sens
        .jacobian
        .column_iter()
        .map(|col| col.iter().zip(&grad).map(|(a, b)| a * b).sum())
        .collect();
    let effort = control.integral_g(&prob.cost);
    let effort_gradient = control.integral_g_gradient(&prob.cost);

    let q = control.order();
    let mut residual = Vec::with_capacity(q + 3);
    match prob.kind {
        ProblemKind::MaxObjective { budget, .. } => {
            let l = multipliers[0];
            residual.extend((0..q).map(|i| observable_gradient[i] + l * effort_gradient[i]));
            residual.push(effort - budget);
        }
        ProblemKind::MinEffort { target, .. } => {
            let l = multipliers[0];
            residual.extend((0..q).map(|i| effort_gradient[i] + l * observable_gradient[i]));
            residual.push(observable - target);
        }
        ProblemKind::MinTime { budget, target } => {
            let (l1, l2) = (multipliers[0], multipliers[1]);
            residual.extend(
                (0..q).map(|i| l1 * effort_gradient[i] + l2 * observable_gradient[i]),
            );
            residual.push(effort - budget);
            residual.push(observable - target);
            let mu_end = control.terminal_value();
            residual.push(1.0 + l1 * prob.cost.value(mu_end) + l2 * phi_h * mu_end);
        }
    }
    Ok(KktEvaluation {
        residual,
        terminal_state: z,
        observable,
        observable_gradient,
        phi_h,
        effort,
        effort_gradient,
    })
}
