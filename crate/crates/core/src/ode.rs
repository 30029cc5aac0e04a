//! Integration of controlled and time-rescaled separable systems.
//!
//! All integrations use a Dormand-Prince 5(4) pair with mixed error control
//! `|err|_inf <= tol (1 + |z|_inf)` and the pair's quartic interpolant for
//! dense output.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::control::{basis_values_into, ControlPolynomial};
use crate::system::SeparableSystem;
use crate::{Error, Result};

/// Which clock a trajectory is sampled on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Clock {
    /// Physical time `t` of the controlled system.
    Physical,
    /// Rescaled time `tau` of the autonomous system.
    Rescaled,
}

/// States sampled on a strictly increasing time grid starting at zero.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub clock: Clock,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn terminal(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least two nodes")
    }

    pub fn terminal_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least two nodes")
    }
}

/// Where to record states.
#[derive(Debug, Clone, Default)]
pub enum Sampling {
    /// Every accepted step.
    Steps,
    /// Only the endpoints.
    #[default]
    Terminal,
    /// User-requested times in `[0, t_end]`, filled by dense output.
    Grid(Vec<f64>),
}

const MAX_STEPS: usize = 2_000_000;

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 1e-13 && tol < 1e-2) {
        return Err(Error::InvalidInput(format!(
            "tolerance must lie in (1e-13, 1e-2), got {tol:e}"
        )));
    }
    Ok(())
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// 5th-order minus embedded 4th-order weights.
const E1: f64 = B1 - 5179.0 / 57600.0;
const E3: f64 = B3 - 7571.0 / 16695.0;
const E4: f64 = B4 - 393.0 / 640.0;
const E5: f64 = B5 - (-92097.0 / 339200.0);
const E6: f64 = B6 - 187.0 / 2100.0;
const E7: f64 = -1.0 / 40.0;

// Quartic dense-output polynomials, one row per stage, columns x..x^4.
const DENSE: [[f64; 4]; 7] = [
    [
        1.0,
        -8048581381.0 / 2820520608.0,
        8663915743.0 / 2820520608.0,
        -12715105075.0 / 11282082432.0,
    ],
    [0.0, 0.0, 0.0, 0.0],
    [
        0.0,
        131558114200.0 / 32700410799.0,
        -68118460800.0 / 10900136933.0,
        87487479700.0 / 32700410799.0,
    ],
    [
        0.0,
        -1754552775.0 / 470086768.0,
        14199869525.0 / 1410260304.0,
        -10690763975.0 / 1880347072.0,
    ],
    [
        0.0,
        127303824393.0 / 49829197408.0,
        -318862633887.0 / 49829197408.0,
        701980252875.0 / 199316789632.0,
    ],
    [
        0.0,
        -282668133.0 / 205662961.0,
        2019193451.0 / 616988883.0,
        -1453857185.0 / 822651844.0,
    ],
    [
        0.0,
        40617522.0 / 29380423.0,
        -110615467.0 / 29380423.0,
        69997945.0 / 29380423.0,
    ],
];

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Integrate `y' = f(t, y)` from `t = 0` to `t_end`.
///
/// Returns the sample times and states requested by `sampling`; the first
/// node is always `(0, y0)`.
pub(crate) fn dopri5<F>(
    mut f: F,
    y0: &[f64],
    t_end: f64,
    tol: f64,
    sampling: &Sampling,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    check_tol(tol)?;
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::InvalidInput(format!("end time must be positive, got {t_end}")));
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("initial state must be finite".into()));
    }
    let grid: &[f64] = match sampling {
        Sampling::Grid(g) => {
            if g.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidInput("sample grid must be strictly increasing".into()));
            }
            if g.first().is_some_and(|&s| s < 0.0) || g.last().is_some_and(|&s| s > t_end * (1.0 + 1e-12)) {
                return Err(Error::InvalidInput(format!("sample grid must lie in [0, {t_end}]")));
            }
            g
        }
        _ => &[],
    };

    let n = y0.len();
    let mut times = vec![0.0];
    let mut states = vec![y0.to_vec()];
    let mut next_sample = grid.iter().position(|&s| s > 0.0).unwrap_or(grid.len());

    let mut t = 0.0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];

    f(t, &y, &mut k[0]);
    let mut h = initial_step(&mut f, &y, &k[0], t_end, tol);
    let mut rejected = false;
    let mut steps = 0usize;

    while t < t_end {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::IntegrationFailure {
                t,
                reason: format!("exceeded {MAX_STEPS} steps"),
            });
        }
        let mut last = false;
        if t + h >= t_end || (t_end - t - h) < 1e-12 * t_end {
            h = t_end - t;
            last = true;
        }

        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k[0][i];
        }
        let (k0, rest) = k.split_at_mut(1);
        f(t + C2 * h, &tmp, &mut rest[0]);
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k0[0][i] + A32 * rest[0][i]);
        }
        f(t + C3 * h, &tmp, &mut rest[1]);
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k0[0][i] + A42 * rest[0][i] + A43 * rest[1][i]);
        }
        f(t + C4 * h, &tmp, &mut rest[2]);
        for i in 0..n {
            tmp[i] = y[i]
                + h * (A51 * k0[0][i] + A52 * rest[0][i] + A53 * rest[1][i] + A54 * rest[2][i]);
        }
        f(t + C5 * h, &tmp, &mut rest[3]);
        for i in 0..n {
            tmp[i] = y[i]
                + h * (A61 * k0[0][i]
                    + A62 * rest[0][i]
                    + A63 * rest[1][i]
                    + A64 * rest[2][i]
                    + A65 * rest[3][i]);
        }
        f(t + h, &tmp, &mut rest[4]);
        for i in 0..n {
            y_new[i] = y[i]
                + h * (B1 * k0[0][i]
                    + B3 * rest[1][i]
                    + B4 * rest[2][i]
                    + B5 * rest[3][i]
                    + B6 * rest[4][i]);
        }
        f(t + h, &y_new, &mut rest[5]);
        for i in 0..n {
            err[i] = h
                * (E1 * k0[0][i]
                    + E3 * rest[1][i]
                    + E4 * rest[2][i]
                    + E5 * rest[3][i]
                    + E6 * rest[4][i]
                    + E7 * rest[5][i]);
        }

        let scale = tol * (1.0 + inf_norm(&y).max(inf_norm(&y_new)));
        let mut err_norm = inf_norm(&err) / scale;
        if !err_norm.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            err_norm = f64::INFINITY;
        }

        if err_norm <= 1.0 {
            let t_new = if last { t_end } else { t + h };
            while next_sample < grid.len() && grid[next_sample] <= t_new * (1.0 + 1e-14) {
                let s = grid[next_sample];
                let x = ((s - t) / h).clamp(0.0, 1.0);
                let state = if (s - t_new).abs() <= 1e-14 * t_new.max(1.0) {
                    y_new.clone()
                } else {
                    dense_eval(&y, &k, h, x)
                };
                times.push(s);
                states.push(state);
                next_sample += 1;
            }
            if matches!(sampling, Sampling::Steps) && !last {
                times.push(t_new);
                states.push(y_new.clone());
            }
            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            // FSAL: last stage is the derivative at the new point.
            k.swap(0, 6);
            let fac = if err_norm == 0.0 {
                5.0
            } else {
                (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= if rejected { fac.min(1.0) } else { fac };
            rejected = false;
        } else {
            let fac = if err_norm.is_finite() {
                (0.9 * err_norm.powf(-0.2)).max(0.2)
            } else {
                0.2
            };
            h *= fac;
            rejected = true;
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::IntegrationFailure {
                t,
                reason: "step size underflow".into(),
            });
        }
    }

    match sampling {
        Sampling::Steps | Sampling::Terminal => {
            times.push(t_end);
            states.push(y);
        }
        Sampling::Grid(_) => {
            if times.len() < 2 {
                times.push(t_end);
                states.push(y);
            }
        }
    }
    Ok((times, states))
}

fn dense_eval(y: &[f64], k: &[Vec<f64>], h: f64, x: f64) -> Vec<f64> {
    let powers = [x, x * x, x * x * x, x * x * x * x];
    let weights: Vec<f64> = DENSE
        .iter()
        .map(|row| row.iter().zip(&powers).map(|(a, p)| a * p).sum())
        .collect();
    (0..y.len())
        .map(|i| y[i] + h * k.iter().zip(&weights).map(|(ks, w)| w * ks[i]).sum::<f64>())
        .collect()
}

fn initial_step<F>(f: &mut F, y0: &[f64], f0: &[f64], t_end: f64, tol: f64) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let sc = tol * (1.0 + inf_norm(y0));
    let d0 = inf_norm(y0) / sc;
    let d1 = inf_norm(f0) / sc;
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(t_end);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, d)| y + h0 * d).collect();
    let mut f1 = vec![0.0; y0.len()];
    f(h0, &y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = inf_norm(&diff) / sc / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(t_end)
}

fn check_state<S: SeparableSystem + ?Sized>(sys: &S, z0: &[f64]) -> Result<()> {
    if z0.len() != sys.dim() {
        return Err(Error::InvalidInput(format!(
            "initial state has length {} but {} expects {}",
            z0.len(),
            sys.label(),
            sys.dim()
        )));
    }
    Ok(())
}

/// Integrate `z' = mu(t) h(z, p)` over `[0, T]`.
pub fn integrate_controlled<S: SeparableSystem + ?Sized>(
    sys: &S,
    mu: &ControlPolynomial,
    z0: &[f64],
    horizon: f64,
    tol: f64,
    sampling: &Sampling,
) -> Result<Trajectory> {
    check_state(sys, z0)?;
    if (horizon - mu.horizon()).abs() > 1e-12 * horizon.abs().max(1.0) {
        return Err(Error::InvalidInput(format!(
            "integration horizon {horizon} does not match control horizon {}",
            mu.horizon()
        )));
    }
    let (times, states) = dopri5(
        |t, z, out| {
            let m = mu.eval_sigma(mu.sigma(t).clamp(-1.0, 1.0));
            sys.vector_field(z, out);
            out.iter_mut().for_each(|v| *v *= m);
        },
        z0,
        horizon,
        tol,
        sampling,
    )?;
    Ok(Trajectory { times, states, clock: Clock::Physical })
}

/// Integrate the autonomous system `z' = h(z, p)` over `[0, tau_end]`.
pub fn integrate_rescaled<S: SeparableSystem + ?Sized>(
    sys: &S,
    z0: &[f64],
    tau_end: f64,
    tol: f64,
    sampling: &Sampling,
) -> Result<Trajectory> {
    check_state(sys, z0)?;
    let (times, states) = dopri5(|_, z, out| sys.vector_field(z, out), z0, tau_end, tol, sampling)?;
    Ok(Trajectory { times, states, clock: Clock::Rescaled })
}

/// `z_hat(tau)`; `tau = 0` returns the initial state.
pub fn rescaled_state<S: SeparableSystem + ?Sized>(
    sys: &S,
    z0: &[f64],
    tau: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    if tau == 0.0 {
        check_state(sys, z0)?;
        return Ok(z0.to_vec());
    }
    Ok(integrate_rescaled(sys, z0, tau, tol, &Sampling::Terminal)?
        .terminal()
        .to_vec())
}

/// `Phi_h(z) = grad Phi(z) . h(z, p)`, the Lie derivative of the observable.
pub fn lie_derivative_phi<S: SeparableSystem + ?Sized>(sys: &S, z: &[f64]) -> Result<f64> {
    check_state(sys, z)?;
    let n = sys.dim();
    let mut grad = vec![0.0; n];
    sys.observable_gradient(z, &mut grad)?;
    let mut h = vec![0.0; n];
    sys.vector_field(z, &mut h);
    Ok(grad.iter().zip(&h).map(|(a, b)| a * b).sum())
}

/// One sample of an observable curve along the rescaled flow.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CurvePoint {
    pub tau: f64,
    pub phi: f64,
    /// `None` where the observable is not differentiable.
    pub phi_h: Option<f64>,
}

/// Uniform `tau`-grid samples of `Phi` and `Phi_h` along the rescaled flow.
pub fn observable_curve<S: SeparableSystem + ?Sized>(
    sys: &S,
    z0: &[f64],
    tau_max: f64,
    dtau: f64,
    tol: f64,
) -> Result<Vec<CurvePoint>> {
    if !(dtau > 0.0 && dtau < tau_max) {
        return Err(Error::InvalidInput(format!(
            "need 0 < dtau < tau_max, got dtau = {dtau}, tau_max = {tau_max}"
        )));
    }
    let grid = uniform_grid(tau_max, dtau);
    let traj = integrate_rescaled(sys, z0, tau_max, tol, &Sampling::Grid(grid))?;
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(&tau, z)| {
            let phi = sys.observable(z);
            let phi_h = match lie_derivative_phi(sys, z) {
                Ok(v) => Some(v),
                Err(Error::DegenerateObservable { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(CurvePoint { tau, phi, phi_h })
        })
        .collect()
}

/// `0, d, 2d, ...` up to `end`, with `end` appended when it is off-grid.
pub fn uniform_grid(end: f64, step: f64) -> Vec<f64> {
    let count = (end / step + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=count).map(|k| k as f64 * step).collect();
    if let Some(last) = grid.last_mut() {
        if (end - *last).abs() <= 1e-9 * step {
            *last = end;
        } else {
            grid.push(end);
        }
    }
    grid
}

/// Terminal state and its sensitivity to the control coefficients.
#[derive(Debug, Clone)]
pub struct Sensitivities {
    pub state: Vec<f64>,
    /// `n x q` matrix `dz(T)/dp_i`.
    pub jacobian: DMatrix<f64>,
}

/// Forward variational equations
/// `S_i' = mu(t) J_h(z) S_i + That_i(sigma(t)) h(z)`, `S_i(0) = 0`.
pub fn forward_sensitivities<S: SeparableSystem + ?Sized>(
    sys: &S,
    mu: &ControlPolynomial,
    z0: &[f64],
    horizon: f64,
    tol: f64,
) -> Result<Sensitivities> {
    check_state(sys, z0)?;
    if (horizon - mu.horizon()).abs() > 1e-12 * horizon.abs().max(1.0) {
        return Err(Error::InvalidInput(format!(
            "integration horizon {horizon} does not match control horizon {}",
            mu.horizon()
        )));
    }
    let n = sys.dim();
    let q = mu.order();
    let mut y0 = vec![0.0; n * (1 + q)];
    y0[..n].copy_from_slice(z0);
    let mut h = vec![0.0; n];
    let mut jac = vec![0.0; n * n];
    let mut basis = vec![0.0; q];
    let (_, states) = dopri5(
        |t, y, out| {
            let sigma = mu.sigma(t).clamp(-1.0, 1.0);
            let m = mu.eval_sigma(sigma);
            basis_values_into(sigma, &mut basis);
            let z = &y[..n];
            sys.vector_field(z, &mut h);
            sys.jacobian(z, &mut jac);
            for i in 0..n {
                out[i] = m * h[i];
            }
            // sensitivity block stored column-major: S[:, c] at n + c n
            for c in 0..q {
                let s = &y[n + c * n..n + (c + 1) * n];
                for i in 0..n {
                    let row = &jac[i * n..(i + 1) * n];
                    let js: f64 = row.iter().zip(s).map(|(a, b)| a * b).sum();
                    out[n + c * n + i] = m * js + basis[c] * h[i];
                }
            }
        },
        &y0,
        horizon,
        tol,
        &Sampling::Terminal,
    )?;
    let y = states.last().expect("terminal state");
    let jacobian = DMatrix::from_column_slice(n, q, &y[n..]);
    Ok(Sensitivities { state: y[..n].to_vec(), jacobian })
}
