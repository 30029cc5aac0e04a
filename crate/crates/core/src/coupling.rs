//! Scalar root finding along the rescaled flow: the coupling condition
//! `Phi(z_hat(C2)) = target`, and zeros of `Phi_h`.
//!
//! Both scan `tau` on a uniform grid, bracket sign changes, and refine by
//! bisection. Each refinement evaluation integrates afresh from `z0`, so
//! the refined roots do not depend on the scan grid.

use serde::Serialize;

use crate::ode::{integrate_rescaled, lie_derivative_phi, rescaled_state, uniform_grid, Sampling};
use crate::system::SeparableSystem;
use crate::{Error, Result};

/// Scan intervals per call.
pub const SCAN_POINTS: usize = 2000;

const VALUE_TOL: f64 = 1e-10;
const TAU_TOL: f64 = 1e-10;

/// Solution of `Phi(z_hat(C2)) = target`.
#[derive(Debug, Clone, Serialize)]
pub struct CouplingResult {
    /// Smallest positive root.
    pub c2: f64,
    pub phi_at_c2: f64,
    /// `None` where the observable is not differentiable.
    pub phi_h_at_c2: Option<f64>,
    /// Number of roots in `(0, tau_max]`.
    pub branch_count: usize,
    /// All roots, ascending.
    pub roots: Vec<f64>,
}

/// Smallest `tau in (0, tau_max]` with `Phi(z_hat(tau)) = target`.
pub fn solve_c2<S: SeparableSystem + ?Sized>(
    sys: &S,
    z0: &[f64],
    target: f64,
    tau_max: f64,
    tol: f64,
) -> Result<CouplingResult> {
    check_range(tau_max)?;
    let value = |tau: f64| -> Result<f64> { Ok(sys.observable(&rescaled_state(sys, z0, tau, tol)?) - target) };
    let roots = scan_roots(
        |grid| {
            let traj = integrate_rescaled(sys, z0, tau_max, tol, &Sampling::Grid(grid.to_vec()))?;
            Ok(traj.states.iter().map(|z| Some(sys.observable(z) - target)).collect())
        },
        |tau| value(tau).map(Some),
        tau_max,
        VALUE_TOL,
    )?;
    let Some(&c2) = roots.first() else {
        return Err(Error::TargetUnreachable { target, tau_max });
    };
    let z = rescaled_state(sys, z0, c2, tol)?;
    let phi_h_at_c2 = match lie_derivative_phi(sys, &z) {
        Ok(v) => Some(v),
        Err(Error::DegenerateObservable { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(CouplingResult {
        c2,
        phi_at_c2: sys.observable(&z),
        phi_h_at_c2,
        branch_count: roots.len(),
        roots,
    })
}

/// Zeros of `Phi_h` along the rescaled flow in `(0, tau_max]`, ascending.
///
/// Samples where the observable is not differentiable are skipped; a sign
/// change is only bracketed between two adjacent usable samples.
pub fn find_phi_h_roots<S: SeparableSystem + ?Sized>(
    sys: &S,
    z0: &[f64],
    tau_max: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    check_range(tau_max)?;
    let phi_h = |z: &[f64]| -> Result<Option<f64>> {
        match lie_derivative_phi(sys, z) {
            Ok(v) => Ok(Some(v)),
            Err(Error::DegenerateObservable { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    scan_roots(
        |grid| {
            let traj = integrate_rescaled(sys, z0, tau_max, tol, &Sampling::Grid(grid.to_vec()))?;
            traj.states.iter().map(|z| phi_h(z)).collect()
        },
        |tau| phi_h(&rescaled_state(sys, z0, tau, tol)?),
        tau_max,
        f64::INFINITY,
    )
}

fn check_range(tau_max: f64) -> Result<()> {
    if tau_max.is_finite() && tau_max > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("tau_max must be positive, got {tau_max}")))
    }
}

/// Scan, bracket, refine; rescan once at double resolution when two roots
/// are closer than two grid spacings.
fn scan_roots(
    sample: impl Fn(&[f64]) -> Result<Vec<Option<f64>>>,
    eval: impl Fn(f64) -> Result<Option<f64>>,
    tau_max: f64,
    value_tol: f64,
) -> Result<Vec<f64>> {
    let mut points = SCAN_POINTS;
    loop {
        let step = tau_max / points as f64;
        let grid = uniform_grid(tau_max, step);
        let values = sample(&grid)?;
        let mut roots = Vec::new();
        for k in 0..grid.len() - 1 {
            let (Some(a), Some(b)) = (values[k], values[k + 1]) else { continue };
            if b == 0.0 {
                roots.push(grid[k + 1]);
            } else if a != 0.0 && a.signum() != b.signum() {
                if let Some(r) = bisect(&eval, grid[k], a, grid[k + 1], value_tol)? {
                    roots.push(r);
                }
            }
        }
        let crowded = roots.windows(2).any(|w| w[1] - w[0] < 2.0 * step);
        if crowded && points == SCAN_POINTS {
            points *= 2;
            continue;
        }
        return Ok(roots);
    }
}

fn bisect(
    eval: &impl Fn(f64) -> Result<Option<f64>>,
    mut lo: f64,
    mut flo: f64,
    mut hi: f64,
    value_tol: f64,
) -> Result<Option<f64>> {
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let Some(fm) = eval(mid)? else { return Ok(None) };
        if fm == 0.0 || (hi - lo <= TAU_TOL && fm.abs() <= value_tol) {
            return Ok(Some(mid));
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    Ok(Some(mid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::ClosureSystem;

    fn logistic() -> ClosureSystem {
        ClosureSystem::new(
            "logistic",
            1,
            |z, out| out[0] = z[0] * (1.0 - z[0]),
            |z| z[0],
            |_, g| g[0] = 1.0,
        )
        .unwrap()
    }

    #[test]
    fn logistic_crossing_time() {
        // z(tau) = 1 / (1 + 9 e^-tau) from z0 = 0.1; z = 0.5 at tau = ln 9
        let r = solve_c2(&logistic(), &[0.1], 0.5, 5.0, 1e-12).unwrap();
        assert!((r.c2 - 9f64.ln()).abs() < 1e-9);
        assert_eq!(r.branch_count, 1);
        assert!((r.phi_h_at_c2.unwrap() - 0.25).abs() < 1e-9);
    }

    #[test]
    fn initial_value_is_not_a_root() {
        let err = solve_c2(&logistic(), &[0.1], 0.1, 5.0, 1e-10).unwrap_err();
        assert!(matches!(err, Error::TargetUnreachable { .. }));
    }

    #[test]
    fn monotone_curve_has_no_phi_h_roots() {
        assert!(find_phi_h_roots(&logistic(), &[0.1], 5.0, 1e-10).unwrap().is_empty());
    }

    #[test]
    fn oscillator_phi_h_roots() {
        // harmonic oscillator, Phi = x: Phi_h = v vanishes at tau = pi/2 + k pi
        let sys = ClosureSystem::new(
            "harmonic",
            2,
            |z, out| {
                out[0] = z[1];
                out[1] = -z[0];
            },
            |z| z[0],
            |_, g| {
                g[0] = 1.0;
                g[1] = 0.0;
            },
        )
        .unwrap();
        let roots = find_phi_h_roots(&sys, &[0.0, 1.0], 7.0, 1e-12).unwrap();
        assert_eq!(roots.len(), 2);
        assert!((roots[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
        assert!((roots[1] - 1.5 * std::f64::consts::PI).abs() < 1e-9);
    }
}
