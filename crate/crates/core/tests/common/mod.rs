//! Independent oracles shared by the integration tests. Nothing here calls
//! the crate's integrator, quadrature or root finders.

#![allow(dead_code)]

use std::sync::Arc;

use sepoc_core::{ClosureSystem, SeparableSystem};

/// Classic fixed-step RK4 for `y' = f(t, y)` from 0 to `t_end`.
pub fn rk4(f: impl Fn(f64, &[f64], &mut [f64]), y0: &[f64], t_end: f64, dt: f64) -> Vec<f64> {
    rk4_grid(f, y0, t_end, dt).pop().unwrap().1
}

/// RK4 states at every step, including the start.
pub fn rk4_grid(
    f: impl Fn(f64, &[f64], &mut [f64]),
    y0: &[f64],
    t_end: f64,
    dt: f64,
) -> Vec<(f64, Vec<f64>)> {
    let n = y0.len();
    let steps = (t_end / dt).round().max(1.0) as usize;
    let h = t_end / steps as f64;
    let mut y = y0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut out = Vec::with_capacity(steps + 1);
    out.push((0.0, y.clone()));
    for s in 0..steps {
        let t = s as f64 * h;
        f(t, &y, &mut k1);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        f(t + 0.5 * h, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        f(t + 0.5 * h, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + h * k3[i];
        }
        f(t + h, &tmp, &mut k4);
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out.push(((s + 1) as f64 * h, y.clone()));
    }
    out
}

/// RK4 on the autonomous field of `sys`.
pub fn rk4_rescaled(sys: &dyn SeparableSystem, z0: &[f64], tau: f64, dt: f64) -> Vec<f64> {
    rk4(|_, z, o| sys.vector_field(z, o), z0, tau, dt)
}

/// RK4 on `z' = mu(t) h(z)`.
pub fn rk4_controlled(
    sys: &dyn SeparableSystem,
    mu: impl Fn(f64) -> f64,
    z0: &[f64],
    horizon: f64,
    dt: f64,
) -> Vec<f64> {
    rk4(
        |t, z, o| {
            sys.vector_field(z, o);
            let m = mu(t);
            o.iter_mut().for_each(|v| *v *= m);
        },
        z0,
        horizon,
        dt,
    )
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Central difference of a scalar function.
pub fn central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Central-difference gradient of `f` at `x`.
pub fn central_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|j| {
            xp[j] = x[j] + h;
            let up = f(&xp);
            xp[j] = x[j] - h;
            let down = f(&xp);
            xp[j] = x[j];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `|a - b|_inf / max(|a|_inf, floor)`.
pub fn rel_err(a: &[f64], b: &[f64], floor: f64) -> f64 {
    let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(floor);
    diff / scale
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Logistic growth `z' = z (1 - z)` with `Phi = z`, started so that
/// `z(c2) = target`. Closed form `z(tau) = 1 / (1 + e^-tau (1 - z0) / z0)`.
pub fn logistic(c2: f64, target: f64) -> (Arc<dyn SeparableSystem>, Vec<f64>) {
    let odds = (1.0 - target) / target;
    let z0 = 1.0 / (1.0 + odds * c2.exp());
    let sys = ClosureSystem::new(
        "logistic",
        1,
        |z, o| o[0] = z[0] * (1.0 - z[0]),
        |z| z[0],
        |_, g| g[0] = 1.0,
    )
    .unwrap()
    .with_jacobian(|z, j| j[0] = 1.0 - 2.0 * z[0]);
    (Arc::new(sys), vec![z0])
}

pub fn logistic_exact(z0: f64, tau: f64) -> f64 {
    1.0 / (1.0 + (-tau).exp() * (1.0 - z0) / z0)
}

/// Deterministic pseudo-random numbers for tests that must not depend on
/// the crate's RNG choices (SplitMix64).
pub struct Stream(u64);

impl Stream {
    pub fn new(seed: u64) -> Self {
        Stream(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// A random control with `q = 10` that is positive on `[0, T]`.
pub fn positive_control(rng: &mut Stream, horizon: f64) -> sepoc_core::ControlPolynomial {
    loop {
        let coeffs: Vec<f64> = (0..10)
            .map(|i| if i == 0 { rng.uniform(0.3, 1.5) } else { rng.uniform(-0.25, 0.25) / i as f64 })
            .collect();
        let c = sepoc_core::ControlPolynomial::new(coeffs, horizon).unwrap();
        if c.is_positive() {
            return c;
        }
    }
}
