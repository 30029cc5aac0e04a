//! Reference problems with integral constraints only.
//!
//! Over controls `mu` on `[0, T]`, with `I(mu) = int mu` and
//! `G(mu) = int g(mu)`:
//!
//! - [`max_rescaled_time`]: maximize `I` subject to `G = C1`, `T` fixed.
//! - [`min_effort`]: minimize `G` subject to `I = C2`, `T` fixed.
//! - [`min_horizon`]: minimize `T` subject to `G = C1` and `I = C2`.
//!
//! Each has a constant optimal control. The original control problems reduce
//! to these by time rescaling, and [`map_multipliers`] converts the
//! multipliers back using the Lie derivative `Phi_h` at the terminal state.

use serde::{Deserialize, Serialize};

use crate::control::CostFunction;
use crate::{Error, Result};

/// Which of the three problem families a solution belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemFamily {
    /// Maximize the observable (reference: maximize `I`) under an effort budget.
    MaxObjective,
    /// Reach a target with least effort (reference: `I` fixed).
    MinEffort,
    /// Reach a target in least time under an effort budget.
    MinTime,
}

/// Lagrange multipliers: one for the fixed-horizon families, two for
/// minimum time. Serialized as a plain array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<f64>", try_from = "Vec<f64>")]
pub enum Multipliers {
    Single(f64),
    Pair(f64, f64),
}

impl Multipliers {
    pub fn to_vec(self) -> Vec<f64> {
        self.into()
    }

    pub fn len(&self) -> usize {
        match self {
            Multipliers::Single(_) => 1,
            Multipliers::Pair(..) => 2,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl From<Multipliers> for Vec<f64> {
    fn from(m: Multipliers) -> Self {
        match m {
            Multipliers::Single(l) => vec![l],
            Multipliers::Pair(a, b) => vec![a, b],
        }
    }
}

impl TryFrom<Vec<f64>> for Multipliers {
    type Error = String;

    fn try_from(v: Vec<f64>) -> std::result::Result<Self, String> {
        match v.as_slice() {
            [l] => Ok(Multipliers::Single(*l)),
            [a, b] => Ok(Multipliers::Pair(*a, *b)),
            _ => Err(format!("expected 1 or 2 multipliers, got {}", v.len())),
        }
    }
}

/// Solution of a reference problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSolution {
    pub family: ProblemFamily,
    /// The constant optimal control.
    pub mu_star: f64,
    /// Echoed for fixed-horizon problems, solved for minimum time.
    pub horizon: f64,
    pub multipliers: Multipliers,
    /// `mu* g'(mu*) - g(mu*)`, minimum time only.
    pub gamma_star: Option<f64>,
    /// Number of roots of the defining scalar equation seen in the search
    /// bracket; the smallest is returned. Always 1 for closed forms.
    pub root_count: usize,
}

impl ReferenceSolution {
    /// `C2 = I(mu*) = mu* T`.
    pub fn rescaled_time(&self) -> f64 {
        self.mu_star * self.horizon
    }

    /// `G(mu*) = T g(mu*)`.
    pub fn effort(&self, cost: &CostFunction) -> f64 {
        self.horizon * cost.value(self.mu_star)
    }
}

const LOWER_BRACKET: f64 = 1e-8;
const INITIAL_UPPER: f64 = 10.0;
const UPPER_CAP: f64 = 1e6;
const SCAN_PER_DECADE: usize = 64;
const DEGENERACY: f64 = 1e-12;

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Maximize `I(mu)` subject to `G(mu) = C1` on a fixed horizon `T`.
///
/// `g(mu*) = C1/T`, `lambda = -1/g'(mu*)`. For `g = mu^2`:
/// `mu* = sqrt(C1/T)`, `lambda = -sqrt(T/C1)/2`.
pub fn max_rescaled_time(horizon: f64, budget: f64, cost: &CostFunction) -> Result<ReferenceSolution> {
    check_positive("T", horizon)?;
    check_positive("C1", budget)?;
    if cost.is_square() {
        let mu = (budget / horizon).sqrt();
        return Ok(ReferenceSolution {
            family: ProblemFamily::MaxObjective,
            mu_star: mu,
            horizon,
            multipliers: Multipliers::Single(-0.5 * (horizon / budget).sqrt()),
            gamma_star: None,
            root_count: 1,
        });
    }
    max_rescaled_time_general(horizon, budget, cost)
}

/// [`max_rescaled_time`] by root finding, ignoring any closed form.
pub fn max_rescaled_time_general(
    horizon: f64,
    budget: f64,
    cost: &CostFunction,
) -> Result<ReferenceSolution> {
    check_positive("T", horizon)?;
    check_positive("C1", budget)?;
    let level = budget / horizon;
    let (mu, root_count) = smallest_root(
        |m| cost.value(m) - level,
        |m| cost.derivative(m),
        &format!("g(mu) = {level} for g = {}", cost.label()),
    )?;
    let slope = cost.derivative(mu);
    if slope.abs() < DEGENERACY {
        return Err(Error::Degenerate(format!("g'(mu*) = {slope:e} at mu* = {mu}")));
    }
    Ok(ReferenceSolution {
        family: ProblemFamily::MaxObjective,
        mu_star: mu,
        horizon,
        multipliers: Multipliers::Single(-1.0 / slope),
        gamma_star: None,
        root_count,
    })
}

/// Minimize `G(mu)` subject to `I(mu) = C2` on a fixed horizon `T`.
///
/// `mu* = C2/T` for every `g`, `lambda = -g'(mu*)`.
pub fn min_effort(horizon: f64, rescaled_time: f64, cost: &CostFunction) -> Result<ReferenceSolution> {
    check_positive("T", horizon)?;
    check_positive("C2", rescaled_time)?;
    let mu = rescaled_time / horizon;
    Ok(ReferenceSolution {
        family: ProblemFamily::MinEffort,
        mu_star: mu,
        horizon,
        multipliers: Multipliers::Single(-cost.derivative(mu)),
        gamma_star: None,
        root_count: 1,
    })
}

/// Minimize `T` subject to `G(mu) = C1` and `I(mu) = C2`.
///
/// `ghat(mu*) = g(mu*)/mu* = C1/C2`, `T = C2/mu*`, `lambda1 = 1/gamma*`,
/// `lambda2 = -g'(mu*)/gamma*` with `gamma* = mu* g'(mu*) - g(mu*)`.
/// For `g = mu^2`: `mu* = C1/C2`, `T = C2^2/C1`, `lambda1 = C2^2/C1^2`,
/// `lambda2 = -2 C2/C1`.
pub fn min_horizon(budget: f64, rescaled_time: f64, cost: &CostFunction) -> Result<ReferenceSolution> {
    check_positive("C1", budget)?;
    check_positive("C2", rescaled_time)?;
    if cost.is_square() {
        let (c1, c2) = (budget, rescaled_time);
        return Ok(ReferenceSolution {
            family: ProblemFamily::MinTime,
            mu_star: c1 / c2,
            horizon: c2 * c2 / c1,
            multipliers: Multipliers::Pair(c2 * c2 / (c1 * c1), -2.0 * c2 / c1),
            gamma_star: Some(c1 * c1 / (c2 * c2)),
            root_count: 1,
        });
    }
    min_horizon_general(budget, rescaled_time, cost)
}

/// [`min_horizon`] by root finding, ignoring any closed form.
pub fn min_horizon_general(
    budget: f64,
    rescaled_time: f64,
    cost: &CostFunction,
) -> Result<ReferenceSolution> {
    check_positive("C1", budget)?;
    check_positive("C2", rescaled_time)?;
    let level = budget / rescaled_time;
    let (mu, root_count) = smallest_root(
        |m| cost.ratio(m) - level,
        |m| (m * cost.derivative(m) - cost.value(m)) / (m * m),
        &format!("g(mu)/mu = {level} for g = {}", cost.label()),
    )?;
    let gamma = mu * cost.derivative(mu) - cost.value(mu);
    if gamma.abs() < DEGENERACY {
        return Err(Error::Degenerate(format!("gamma* = {gamma:e} at mu* = {mu}")));
    }
    Ok(ReferenceSolution {
        family: ProblemFamily::MinTime,
        mu_star: mu,
        horizon: rescaled_time / mu,
        multipliers: Multipliers::Pair(1.0 / gamma, -cost.derivative(mu) / gamma),
        gamma_star: Some(gamma),
        root_count,
    })
}

/// Convert reference multipliers to those of the original problem.
///
/// Max objective: `lambda = lambda_ref Phi_h`. Min effort:
/// `lambda = lambda_ref / Phi_h`. Min time: `lambda1 = lambda1_ref`,
/// `lambda2 = lambda2_ref / Phi_h`.
pub fn map_multipliers(reference: &ReferenceSolution, phi_h: f64) -> Result<Multipliers> {
    if !(phi_h.abs() > 1e-10) {
        return Err(Error::Degenerate(format!("Phi_h = {phi_h:e} is too close to zero")));
    }
    match (reference.family, reference.multipliers) {
        (ProblemFamily::MaxObjective, Multipliers::Single(l)) => Ok(Multipliers::Single(l * phi_h)),
        (ProblemFamily::MinEffort, Multipliers::Single(l)) => Ok(Multipliers::Single(l / phi_h)),
        (ProblemFamily::MinTime, Multipliers::Pair(a, b)) => Ok(Multipliers::Pair(a, b / phi_h)),
        (family, m) => Err(Error::InvalidInput(format!(
            "{} multiplier(s) do not fit the {family:?} family",
            m.len()
        ))),
    }
}

/// Smallest root of `f` on `[LOWER_BRACKET, upper]`, with `upper` doubling
/// from `INITIAL_UPPER` until a sign change appears or `UPPER_CAP` is
/// exceeded. Returns the root and the number of sign changes in the final
/// bracket.
fn smallest_root(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    what: &str,
) -> Result<(f64, usize)> {
    let mut upper = INITIAL_UPPER;
    loop {
        let grid = log_grid(LOWER_BRACKET, upper);
        let values: Vec<f64> = grid.iter().map(|&m| f(m)).collect();
        let mut brackets = Vec::new();
        for k in 0..grid.len() - 1 {
            let (a, b) = (values[k], values[k + 1]);
            if a == 0.0 {
                brackets.push((grid[k], grid[k]));
            } else if a.signum() != b.signum() && b != 0.0 {
                brackets.push((grid[k], grid[k + 1]));
            }
        }
        if *values.last().unwrap() == 0.0 {
            brackets.push((upper, upper));
        }
        if let Some(&(lo, hi)) = brackets.first() {
            return Ok((refine(&f, &df, lo, hi), brackets.len()));
        }
        if upper >= UPPER_CAP {
            return Err(Error::NoRoot(format!(
                "{what} has no sign change on [{LOWER_BRACKET:e}, {UPPER_CAP:e}]"
            )));
        }
        upper = (2.0 * upper).min(UPPER_CAP);
    }
}

fn log_grid(lo: f64, hi: f64) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = (decades * SCAN_PER_DECADE as f64).ceil() as usize;
    let step = (hi / lo).ln() / n as f64;
    let mut grid: Vec<f64> = (0..=n).map(|k| lo * (step * k as f64).exp()).collect();
    grid[n] = hi;
    grid
}

/// Newton steps kept inside a shrinking sign-change bracket, falling back
/// to bisection.
fn refine(f: &impl Fn(f64) -> f64, df: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    if lo == hi {
        return lo;
    }
    let mut flo = f(lo);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let d = df(x);
        if d != 0.0 && (fx / d).abs() <= 2.0 * f64::EPSILON * x.abs() {
            return x;
        }
        let newton = x - fx / d;
        x = if d != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    x
}
