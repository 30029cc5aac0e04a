//! Numeric stationary points of the original control problems.
//!
//! The control is a [`ControlPolynomial`] with `q` coefficients and the
//! first-order conditions are imposed on those coefficients
//! (discretize-then-optimize). The KKT system is solved by damped Newton in
//! three stages: the constraint block on the constant subfamily, a
//! least-squares multiplier estimate, then the full system.

mod enumerate;
mod kkt;
mod newton;

use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

pub use enumerate::{classify_sp, enumerate_sps, Classification};
pub use kkt::{kkt_residual, KktEvaluation};
pub use newton::{solve_stationary, SolverOptions};

use crate::control::{ControlPolynomial, CostFunction, DEFAULT_ORDER};
use crate::reference::{Multipliers, ProblemFamily};
use crate::system::SeparableSystem;
use crate::{Error, Result, DEFAULT_TOL};

/// The three control problems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProblemKind {
    /// Maximize `Phi(z(T))` subject to `G(mu) = C1`.
    MaxObjective { horizon: f64, budget: f64 },
    /// Minimize `G(mu)` subject to `Phi(z(T)) = target`.
    MinEffort { horizon: f64, target: f64 },
    /// Minimize `T` subject to `G(mu) = C1` and `Phi(z(T)) = target`.
    MinTime { budget: f64, target: f64 },
}

impl ProblemKind {
    pub fn family(&self) -> ProblemFamily {
        match self {
            ProblemKind::MaxObjective { .. } => ProblemFamily::MaxObjective,
            ProblemKind::MinEffort { .. } => ProblemFamily::MinEffort,
            ProblemKind::MinTime { .. } => ProblemFamily::MinTime,
        }
    }

    /// The horizon, unless it is an unknown.
    pub fn fixed_horizon(&self) -> Option<f64> {
        match *self {
            ProblemKind::MaxObjective { horizon, .. } | ProblemKind::MinEffort { horizon, .. } => {
                Some(horizon)
            }
            ProblemKind::MinTime { .. } => None,
        }
    }

    pub fn multiplier_count(&self) -> usize {
        match self {
            ProblemKind::MinTime { .. } => 2,
            _ => 1,
        }
    }

    fn validate(&self) -> Result<()> {
        let values: [(&str, f64); 2] = match *self {
            ProblemKind::MaxObjective { horizon, budget } => [("T", horizon), ("C1", budget)],
            ProblemKind::MinEffort { horizon, target } => [("T", horizon), ("target", target)],
            ProblemKind::MinTime { budget, target } => [("C1", budget), ("target", target)],
        };
        for (name, v) in values {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// A control problem on a concrete system.
#[derive(Clone)]
pub struct OcProblem {
    pub kind: ProblemKind,
    pub system: Arc<dyn SeparableSystem>,
    pub z0: Vec<f64>,
    pub cost: CostFunction,
    /// Number of control coefficients `q`.
    pub order: usize,
    /// Integration tolerance.
    pub tol: f64,
}

impl OcProblem {
    /// Square cost, `q = 10`, default tolerance.
    pub fn new(kind: ProblemKind, system: Arc<dyn SeparableSystem>, z0: Vec<f64>) -> Result<Self> {
        kind.validate()?;
        if z0.len() != system.dim() {
            return Err(Error::InvalidInput(format!(
                "initial state has {} components, system {} has {}",
                z0.len(),
                system.label(),
                system.dim()
            )));
        }
        Ok(Self {
            kind,
            system,
            z0,
            cost: CostFunction::Square,
            order: DEFAULT_ORDER,
            tol: DEFAULT_TOL,
        })
    }

    pub fn with_cost(mut self, cost: CostFunction) -> Self {
        self.cost = cost;
        self
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order.max(1);
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

impl fmt::Debug for OcProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OcProblem")
            .field("kind", &self.kind)
            .field("system", &self.system.label())
            .field("cost", &self.cost)
            .field("order", &self.order)
            .field("tol", &self.tol)
            .finish()
    }
}

/// A control satisfying the first-order conditions.
#[derive(Debug, Clone)]
pub struct StationaryPoint {
    pub control: ControlPolynomial,
    pub multipliers: Multipliers,
    /// `Phi(z(T))`, `G(mu)` or `T` depending on the problem.
    pub objective: f64,
    /// `Phi(z(T))`, whatever the problem.
    pub terminal_observable: f64,
    /// Lie derivative at the terminal state, recomputed after acceptance.
    pub phi_h: f64,
    /// Infinity norm of the KKT residual.
    pub kkt_residual: f64,
    /// `mu(t) > 0` at every positivity sample.
    pub positive: bool,
    /// Newton iterations of the final stage.
    pub iterations: usize,
}

impl StationaryPoint {
    pub fn horizon(&self) -> f64 {
        self.control.horizon()
    }

    pub fn coeffs(&self) -> &[f64] {
        self.control.coeffs()
    }

    /// `I(mu)`, the rescaled time reached.
    pub fn rescaled_time(&self) -> f64 {
        self.control.integral_i()
    }
}

#[derive(Serialize)]
struct Record<'a> {
    coeffs: &'a [f64],
    multipliers: Vec<f64>,
    objective: f64,
    phi_h: f64,
    residual: f64,
    positivity_flag: bool,
    #[serde(rename = "T")]
    horizon: f64,
}

impl Serialize for StationaryPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        Record {
            coeffs: self.control.coeffs(),
            multipliers: self.multipliers.to_vec(),
            objective: self.objective,
            phi_h: self.phi_h,
            residual: self.kkt_residual,
            positivity_flag: self.positive,
            horizon: self.control.horizon(),
        }
        .serialize(s)
    }
}
