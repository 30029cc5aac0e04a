//! Controls as truncated normalized-Chebyshev expansions, and the integral
//! functionals `I(mu)` and `G(mu)`.
//!
//! With `sigma = 2t/T - 1` the control is
//!
//! ```txt
//! mu(t) = sum_i p_i That_i(sigma),  That_1 = 1/sqrt(pi),  That_i = sqrt(2/pi) T_{i-1}  (i >= 2)
//! ```
//!
//! The scaling of the higher basis functions only rescales coefficients;
//! `mu(t)` itself and every stationary control are unaffected by it.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::quadrature::gauss_legendre;
use crate::{Error, Result};

/// Default expansion order.
pub const DEFAULT_ORDER: usize = 10;

/// Number of uniform samples behind the positivity flag.
pub const POSITIVITY_SAMPLES: usize = 200;

fn first_basis_value() -> f64 {
    1.0 / PI.sqrt()
}

fn higher_basis_scale() -> f64 {
    (2.0 / PI).sqrt()
}

/// A control input `mu(t)` on `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPolynomial {
    coeffs: Vec<f64>,
    horizon: f64,
}

impl ControlPolynomial {
    pub fn new(coeffs: Vec<f64>, horizon: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("control needs at least one coefficient".into()));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("control coefficients must be finite".into()));
        }
        Ok(Self { coeffs, horizon })
    }

    /// The constant control `mu(t) = value` with `order` coefficients.
    pub fn constant(value: f64, order: usize, horizon: f64) -> Result<Self> {
        let mut coeffs = vec![0.0; order.max(1)];
        coeffs[0] = value / first_basis_value();
        Self::new(coeffs, horizon)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Expansion order `q`.
    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        Self::new(self.coeffs.clone(), horizon)
    }

    pub fn sigma(&self, t: f64) -> f64 {
        2.0 * t / self.horizon - 1.0
    }

    /// `mu(t)`, rejecting `t` outside `[0, T]`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let slack = 1e-12 * self.horizon;
        if !(t >= -slack && t <= self.horizon + slack) {
            return Err(Error::OutOfDomain { t, horizon: self.horizon });
        }
        Ok(self.eval_sigma(self.sigma(t).clamp(-1.0, 1.0)))
    }

    /// `mu` as a function of `sigma in [-1, 1]`, by Clenshaw recurrence.
    pub fn eval_sigma(&self, sigma: f64) -> f64 {
        let q = self.coeffs.len();
        let s = higher_basis_scale();
        // Chebyshev coefficients c_0..c_{q-1} of mu(sigma).
        let c = |k: usize| {
            if k == 0 {
                self.coeffs[0] * first_basis_value()
            } else {
                self.coeffs[k] * s
            }
        };
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for k in (1..q).rev() {
            let b0 = 2.0 * sigma * b1 - b2 + c(k);
            b2 = b1;
            b1 = b0;
        }
        sigma * b1 - b2 + c(0)
    }

    /// `mu(T)`.
    pub fn terminal_value(&self) -> f64 {
        self.eval_sigma(1.0)
    }

    /// `I(mu) = int_0^T mu(t) dt` by Gauss-Legendre with `ceil(q/2) + 1` nodes.
    pub fn integral_i(&self) -> f64 {
        let n = self.order().div_ceil(2) + 1;
        let (x, w) = gauss_legendre(n);
        let half = 0.5 * self.horizon;
        x.iter().zip(&w).map(|(&s, &wi)| wi * self.eval_sigma(s)).sum::<f64>() * half
    }

    /// `dI/dp_i = int_0^T That_i dt`, in closed form.
    pub fn integral_i_gradient(&self) -> Vec<f64> {
        basis_integrals(self.order(), self.horizon)
    }

    /// Enough Gauss-Legendre nodes to integrate `mu^k` exactly; general
    /// costs get three nodes per coefficient.
    fn cost_nodes(&self, cost: &CostFunction) -> usize {
        let q = self.order();
        let n = match cost {
            CostFunction::Square => q,
            CostFunction::Power(k) => (*k as usize * (q - 1) + 2) / 2,
            CostFunction::Custom(_) => 3 * q,
        };
        n.max(12)
    }

    /// `G(mu) = int_0^T g(mu(t)) dt` by Gauss-Legendre quadrature, exact for
    /// power costs.
    pub fn integral_g(&self, cost: &CostFunction) -> f64 {
        let (x, w) = gauss_legendre(self.cost_nodes(cost));
        let half = 0.5 * self.horizon;
        x.iter()
            .zip(&w)
            .map(|(&s, &wi)| wi * cost.value(self.eval_sigma(s)))
            .sum::<f64>()
            * half
    }

    /// `dG/dp_i = int_0^T g'(mu) That_i dt` on the same grid as [`Self::integral_g`].
    pub fn integral_g_gradient(&self, cost: &CostFunction) -> Vec<f64> {
        let (x, w) = gauss_legendre(self.cost_nodes(cost));
        let half = 0.5 * self.horizon;
        let mut grad = vec![0.0; self.order()];
        let mut basis = vec![0.0; self.order()];
        for (&s, &wi) in x.iter().zip(&w) {
            let dg = cost.derivative(self.eval_sigma(s));
            basis_values_into(s, &mut basis);
            for (g, b) in grad.iter_mut().zip(&basis) {
                *g += wi * dg * b * half;
            }
        }
        grad
    }

    /// Minimum of `mu` over uniform samples of `[0, T]`.
    pub fn sampled_minimum(&self, samples: usize) -> f64 {
        let samples = samples.max(2);
        (0..samples)
            .map(|k| self.eval_sigma(-1.0 + 2.0 * k as f64 / (samples - 1) as f64))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_positive(&self) -> bool {
        self.sampled_minimum(POSITIVITY_SAMPLES) > 0.0
    }

    /// Largest deviation of sampled `mu(t)` from its mean `I(mu)/T`.
    pub fn deviation_from_constant(&self, samples: usize) -> f64 {
        let mean = self.integral_i() / self.horizon;
        let samples = samples.max(2);
        (0..samples)
            .map(|k| (self.eval_sigma(-1.0 + 2.0 * k as f64 / (samples - 1) as f64) - mean).abs())
            .fold(0.0, f64::max)
    }

    /// Interpolate `f(sigma)` at `q + 1` Chebyshev-Gauss nodes, giving a control of
    /// order `order` whose `mu(sigma)` matches `f` exactly for polynomials of
    /// degree below `order`.
    pub fn fit(f: impl Fn(f64) -> f64, order: usize, horizon: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidInput("order must be positive".into()));
        }
        let n = order + 1;
        let nodes = chebyshev_nodes(n);
        let values: Vec<f64> = nodes.iter().map(|&s| f(s)).collect();
        let mut coeffs = vec![0.0; order];
        for (j, c) in coeffs.iter_mut().enumerate() {
            let sum: f64 = nodes
                .iter()
                .zip(&values)
                .map(|(&s, &v)| v * chebyshev_t(j, s))
                .sum();
            let cheb = if j == 0 { sum / n as f64 } else { 2.0 * sum / n as f64 };
            *c = if j == 0 {
                cheb / first_basis_value()
            } else {
                cheb / higher_basis_scale()
            };
        }
        Self::new(coeffs, horizon)
    }
}

impl fmt::Display for ControlPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "mu[T={}](", self.horizon)?;
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Chebyshev-Gauss nodes `cos(pi (k + 1/2) / n)`, `k = 0..n`.
pub fn chebyshev_nodes(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| (PI * (k as f64 + 0.5) / n as f64).cos())
        .collect()
}

/// `T_n(x)` by the three-term recurrence.
pub fn chebyshev_t(n: usize, x: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut t0, mut t1) = (1.0, x);
            for _ in 2..=n {
                let t2 = 2.0 * x * t1 - t0;
                t0 = t1;
                t1 = t2;
            }
            t1
        }
    }
}

/// Values of the normalized basis `That_1..That_q` at `sigma`.
pub fn basis_values(order: usize, sigma: f64) -> Vec<f64> {
    let mut out = vec![0.0; order];
    basis_values_into(sigma, &mut out);
    out
}

pub(crate) fn basis_values_into(sigma: f64, out: &mut [f64]) {
    let s = higher_basis_scale();
    let (mut t0, mut t1) = (1.0, sigma);
    for (i, v) in out.iter_mut().enumerate() {
        *v = match i {
            0 => first_basis_value(),
            1 => s * sigma,
            _ => {
                let t2 = 2.0 * sigma * t1 - t0;
                t0 = t1;
                t1 = t2;
                s * t2
            }
        };
    }
}

/// `int_0^T That_i(sigma(t)) dt` for `i = 1..=order`.
pub fn basis_integrals(order: usize, horizon: f64) -> Vec<f64> {
    let half = 0.5 * horizon;
    (0..order)
        .map(|i| {
            if i == 0 {
                horizon * first_basis_value()
            } else {
                let n = i as f64;
                let cheb = if i == 1 {
                    0.0
                } else if i % 2 == 0 {
                    2.0 / (1.0 - n * n)
                } else {
                    0.0
                };
                half * higher_basis_scale() * cheb
            }
        })
        .collect()
}

/// The running cost `g(mu)` of `G(mu) = int g(mu(t)) dt`.
#[derive(Clone, Default)]
pub enum CostFunction {
    /// `g(mu) = mu^2`; enables the closed-form reference solutions.
    #[default]
    Square,
    /// `g(mu) = mu^k` for an integer `k >= 2`.
    Power(u32),
    /// User-supplied `g` with derivative.
    Custom(Arc<CustomCost>),
}

pub struct CustomCost {
    pub label: String,
    pub g: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub dg: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Whether `g` is convex; used when classifying minimum-effort solutions.
    pub convex: bool,
}

impl CostFunction {
    pub fn custom(
        label: impl Into<String>,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dg: impl Fn(f64) -> f64 + Send + Sync + 'static,
        convex: bool,
    ) -> Self {
        CostFunction::Custom(Arc::new(CustomCost {
            label: label.into(),
            g: Box::new(g),
            dg: Box::new(dg),
            convex,
        }))
    }

    pub fn power(k: u32) -> Result<Self> {
        match k {
            0 | 1 => Err(Error::InvalidInput(format!(
                "g(mu) = mu^{k} has constant derivative; need k >= 2"
            ))),
            2 => Ok(CostFunction::Square),
            _ => Ok(CostFunction::Power(k)),
        }
    }

    pub fn value(&self, mu: f64) -> f64 {
        match self {
            CostFunction::Square => mu * mu,
            CostFunction::Power(k) => mu.powi(*k as i32),
            CostFunction::Custom(c) => (c.g)(mu),
        }
    }

    pub fn derivative(&self, mu: f64) -> f64 {
        match self {
            CostFunction::Square => 2.0 * mu,
            CostFunction::Power(k) => *k as f64 * mu.powi(*k as i32 - 1),
            CostFunction::Custom(c) => (c.dg)(mu),
        }
    }

    /// `ghat(mu) = g(mu) / mu`.
    pub fn ratio(&self, mu: f64) -> f64 {
        self.value(mu) / mu
    }

    pub fn is_convex(&self) -> bool {
        match self {
            CostFunction::Square => true,
            // even powers are convex on R, odd ones only on R+
            CostFunction::Power(k) => k % 2 == 0,
            CostFunction::Custom(c) => c.convex,
        }
    }

    pub fn is_square(&self) -> bool {
        matches!(self, CostFunction::Square)
    }

    pub fn label(&self) -> String {
        match self {
            CostFunction::Square => "mu^2".into(),
            CostFunction::Power(k) => format!("mu^{k}"),
            CostFunction::Custom(c) => c.label.clone(),
        }
    }
}

impl fmt::Debug for CostFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CostFunction({})", self.label())
    }
}
