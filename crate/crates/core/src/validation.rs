//! Self-check suite: invariants of every module, evaluated at seeded random
//! inputs. Used by `sepoc validate`.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::control::{ControlPolynomial, CostFunction};
use crate::models;
use crate::ode::{
    forward_sensitivities, integrate_controlled, integrate_rescaled, rescaled_state, Sampling,
};
use crate::reference::{
    max_rescaled_time, max_rescaled_time_general, min_effort, min_horizon, min_horizon_general,
    Multipliers,
};
use crate::system::SeparableSystem;
use crate::{Result, DEFAULT_TOL};

/// Result of one invariant check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub worst: f64,
    pub threshold: f64,
    pub seconds: f64,
    /// Set when the check could not run.
    pub error: Option<String>,
}

type Check = fn(&mut ChaCha8Rng) -> Result<f64>;

const CHECKS: &[(&str, f64, Check)] = &[
    ("models: observable gradients vs central differences", 1e-5, gradients),
    ("models: Jacobians vs central differences", 1e-5, jacobians),
    ("kuramoto: phase sum conserved", 1e-8, phase_sum),
    ("kuramoto: |r| <= 1", 1e-9, kuramoto_bound),
    ("oa: |alpha_i| <= 1 on tau in [0, 10]", 1e-6, oa_bound),
    ("adn: prevalence bounded and non-decreasing", 1e-9, adn_bounds),
    ("ode: controlled terminal state equals rescaled state at I(mu)", 1e-6, rescaling),
    ("ode: sensitivities vs central differences", 1e-4, sensitivities),
    ("control: refit at Chebyshev nodes recovers coefficients", 1e-12, refit),
    ("control: dI/dp and dG/dp vs central differences", 1e-8, functional_gradients),
    ("control: I(mu) <= sqrt(C1 T) on G(mu) = C1", 1e-10, parseval),
    ("reference: stationarity of closed forms", 1e-10, reference_stationarity),
    ("reference: general cost path matches closed forms", 1e-10, reference_general),
];

/// Run every check with the given seed.
pub fn run_suite(seed: u64) -> Vec<CheckOutcome> {
    CHECKS
        .iter()
        .enumerate()
        .map(|(k, (name, threshold, check))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
            let start = Instant::now();
            let result = check(&mut rng);
            let seconds = start.elapsed().as_secs_f64();
            match result {
                Ok(worst) => CheckOutcome {
                    name: name.to_string(),
                    passed: worst <= *threshold,
                    worst,
                    threshold: *threshold,
                    seconds,
                    error: None,
                },
                Err(e) => CheckOutcome {
                    name: name.to_string(),
                    passed: false,
                    worst: f64::NAN,
                    threshold: *threshold,
                    seconds,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

fn systems() -> Result<Vec<(Box<dyn SeparableSystem>, Vec<f64>)>> {
    let (k, kz) = models::default_kuramoto();
    let (o, oz) = models::default_oa(2.2, 0.1)?;
    let (a, az) = models::default_adn();
    Ok(vec![(Box::new(k), kz), (Box::new(o), oz), (Box::new(a), az)])
}

/// A random state where the observable is differentiable.
fn random_state(sys: &dyn SeparableSystem, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = sys.dim();
    loop {
        let z: Vec<f64> = if sys.label().starts_with("kuramoto") {
            (0..n).map(|_| rng.gen_range(0.0..2.0 * PI)).collect()
        } else if sys.label().starts_with("ott-antonsen") {
            (0..n / 2)
                .flat_map(|_| {
                    let (r, th): (f64, f64) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..2.0 * PI));
                    [r * th.cos(), r * th.sin()]
                })
                .collect()
        } else {
            (0..n).map(|_| rng.gen_range(0.0..1.0)).collect()
        };
        let mut g = vec![0.0; n];
        if sys.observable(&z) > 1e-3 && sys.observable_gradient(&z, &mut g).is_ok() {
            return z;
        }
    }
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-3);
    diff / scale
}

fn gradients(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    for (sys, _) in systems()? {
        let n = sys.dim();
        for _ in 0..100 {
            let z = random_state(sys.as_ref(), rng);
            let mut g = vec![0.0; n];
            sys.observable_gradient(&z, &mut g)?;
            let mut fd = vec![0.0; n];
            let mut zp = z.clone();
            for j in 0..n {
                let h = 1e-6;
                zp[j] = z[j] + h;
                let up = sys.observable(&zp);
                zp[j] = z[j] - h;
                let down = sys.observable(&zp);
                zp[j] = z[j];
                fd[j] = (up - down) / (2.0 * h);
            }
            worst = worst.max(rel_err(&g, &fd));
        }
    }
    Ok(worst)
}

fn jacobians(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    for (sys, _) in systems()? {
        let n = sys.dim();
        for _ in 0..100 {
            let z = random_state(sys.as_ref(), rng);
            let mut jac = vec![0.0; n * n];
            sys.jacobian(&z, &mut jac);
            let mut fd = vec![0.0; n * n];
            crate::system::central_difference_jacobian(sys.as_ref(), &z, &mut fd);
            worst = worst.max(rel_err(&jac, &fd));
        }
    }
    Ok(worst)
}

fn random_positive_control(rng: &mut ChaCha8Rng, horizon: f64) -> Result<ControlPolynomial> {
    loop {
        let coeffs: Vec<f64> = (0..10)
            .map(|i| {
                if i == 0 {
                    rng.gen_range(0.3..1.5)
                } else {
                    rng.gen_range(-0.2..0.2) / i as f64
                }
            })
            .collect();
        let c = ControlPolynomial::new(coeffs, horizon)?;
        if c.is_positive() {
            return Ok(c);
        }
    }
}

fn phase_sum(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (sys, z0) = models::default_kuramoto();
    let mu = random_positive_control(rng, 3.0)?;
    let traj = integrate_controlled(&sys, &mu, &z0, 3.0, DEFAULT_TOL, &Sampling::Steps)?;
    let s0: f64 = z0.iter().sum();
    Ok(traj
        .states
        .iter()
        .map(|z| (z.iter().sum::<f64>() - s0).abs())
        .fold(0.0, f64::max))
}

fn kuramoto_bound(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (sys, z0) = models::default_kuramoto();
    let mu = random_positive_control(rng, 4.0)?;
    let traj = integrate_controlled(&sys, &mu, &z0, 4.0, DEFAULT_TOL, &Sampling::Steps)?;
    Ok(traj
        .states
        .iter()
        .map(|z| (sys.observable(z) - 1.0).max(0.0))
        .fold(0.0, f64::max))
}

fn oa_bound(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    for gamma in [0.0, 2.2, 3.0] {
        let (sys, _) = models::default_oa(gamma, 0.1)?;
        let z0: Vec<f64> = (0..10)
            .flat_map(|_| {
                let (r, th): (f64, f64) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..2.0 * PI));
                [r * th.cos(), r * th.sin()]
            })
            .collect();
        let traj = integrate_rescaled(&sys, &z0, 10.0, DEFAULT_TOL, &Sampling::Steps)?;
        for z in &traj.states {
            worst = worst.max(sys.max_modulus(z) - 1.0);
        }
    }
    Ok(worst.max(0.0))
}

fn adn_bounds(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (sys, z0) = models::default_adn();
    let mu = random_positive_control(rng, 6.0)?;
    let traj = integrate_controlled(&sys, &mu, &z0, 6.0, DEFAULT_TOL, &Sampling::Steps)?;
    let mut worst = 0.0f64;
    let mut prev = f64::NEG_INFINITY;
    for z in &traj.states {
        for &i in z {
            worst = worst.max(-i).max(i - 1.0);
        }
        let mean = sys.observable(z);
        worst = worst.max(prev - mean);
        prev = mean;
    }
    if prev >= 1.0 {
        worst = worst.max(1.0);
    }
    Ok(worst.max(0.0))
}

fn rescaling(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    for (sys, z0) in systems()? {
        for _ in 0..5 {
            let horizon = rng.gen_range(1.0..5.0);
            let mu = random_positive_control(rng, horizon)?;
            let z = integrate_controlled(sys.as_ref(), &mu, &z0, horizon, DEFAULT_TOL, &Sampling::Terminal)?;
            let zr = rescaled_state(sys.as_ref(), &z0, mu.integral_i(), DEFAULT_TOL)?;
            let d = z.terminal().iter().zip(&zr).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            worst = worst.max(d);
        }
    }
    Ok(worst)
}

fn sensitivities(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    for (sys, z0) in systems()? {
        let horizon = 2.0;
        let mu = random_positive_control(rng, horizon)?;
        let s = forward_sensitivities(sys.as_ref(), &mu, &z0, horizon, 1e-12)?;
        for i in 0..mu.order() {
            let h = 1e-6;
            let shifted = |d: f64| -> Result<Vec<f64>> {
                let mut c = mu.coeffs().to_vec();
                c[i] += d;
                let m = ControlPolynomial::new(c, horizon)?;
                Ok(integrate_controlled(sys.as_ref(), &m, &z0, horizon, 1e-12, &Sampling::Terminal)?
                    .terminal()
                    .to_vec())
            };
            let (up, down) = (shifted(h)?, shifted(-h)?);
            let fd: Vec<f64> = up.iter().zip(&down).map(|(a, b)| (a - b) / (2.0 * h)).collect();
            let col: Vec<f64> = s.jacobian.column(i).iter().copied().collect();
            worst = worst.max(rel_err(&col, &fd));
        }
    }
    Ok(worst)
}

fn refit(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let coeffs: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c = ControlPolynomial::new(coeffs, 3.0)?;
        let back = ControlPolynomial::fit(|s| c.eval_sigma(s), 10, 3.0)?;
        let d = c.coeffs().iter().zip(back.coeffs()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        worst = worst.max(d);
    }
    Ok(worst)
}

fn functional_gradients(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    let costs = [CostFunction::Square, CostFunction::power(4)?];
    for _ in 0..20 {
        let coeffs: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c = ControlPolynomial::new(coeffs.clone(), rng.gen_range(0.5..5.0))?;
        let shifted = |i: usize, d: f64| {
            let mut v = coeffs.clone();
            v[i] += d;
            ControlPolynomial::new(v, c.horizon())
        };
        let h = 1e-5;
        let gi = c.integral_i_gradient();
        let fd: Vec<f64> = (0..10)
            .map(|i| Ok((shifted(i, h)?.integral_i() - shifted(i, -h)?.integral_i()) / (2.0 * h)))
            .collect::<Result<_>>()?;
        worst = worst.max(rel_err(&gi, &fd));
        for g in &costs {
            let gg = c.integral_g_gradient(g);
            let fd: Vec<f64> = (0..10)
                .map(|i| Ok((shifted(i, h)?.integral_g(g) - shifted(i, -h)?.integral_g(g)) / (2.0 * h)))
                .collect::<Result<_>>()?;
            worst = worst.max(rel_err(&gg, &fd));
        }
    }
    Ok(worst)
}

fn parseval(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let horizon = rng.gen_range(0.5..6.0);
        let budget = rng.gen_range(0.2..3.0);
        let raw: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c = ControlPolynomial::new(raw.clone(), horizon)?;
        let scale = (budget / c.integral_g(&CostFunction::Square)).sqrt();
        let c = ControlPolynomial::new(raw.iter().map(|v| v * scale).collect(), horizon)?;
        worst = worst.max(c.integral_i() - (budget * horizon).sqrt());
    }
    Ok(worst.max(0.0))
}

fn reference_stationarity(rng: &mut ChaCha8Rng) -> Result<f64> {
    let g = CostFunction::Square;
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (t, c1, c2) = (rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0));
        let p4 = max_rescaled_time(t, c1, &g)?;
        let Multipliers::Single(l) = p4.multipliers else { unreachable!() };
        worst = worst.max((g.value(p4.mu_star) - c1 / t).abs()).max((1.0 + l * g.derivative(p4.mu_star)).abs());
        let p5 = min_effort(t, c2, &g)?;
        let Multipliers::Single(l) = p5.multipliers else { unreachable!() };
        worst = worst.max((p5.mu_star * t - c2).abs()).max((l + g.derivative(p5.mu_star)).abs());
        let p6 = min_horizon(c1, c2, &g)?;
        let Multipliers::Pair(l1, l2) = p6.multipliers else { unreachable!() };
        let (m, tt) = (p6.mu_star, p6.horizon);
        worst = worst
            .max((tt * g.value(m) - c1).abs() / c1.max(1.0))
            .max((tt * m - c2).abs() / c2.max(1.0))
            .max((1.0 + l1 * g.value(m) + l2 * m).abs())
            .max((l1 * g.derivative(m) + l2).abs() / l2.abs().max(1.0));
    }
    Ok(worst)
}

fn reference_general(rng: &mut ChaCha8Rng) -> Result<f64> {
    let g = CostFunction::Square;
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (t, c1, c2) = (rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0));
        let a = max_rescaled_time(t, c1, &g)?;
        let b = max_rescaled_time_general(t, c1, &g)?;
        worst = worst.max(rel_err(&[a.mu_star], &[b.mu_star]));
        worst = worst.max(rel_err(&a.multipliers.to_vec(), &b.multipliers.to_vec()));
        let a = min_horizon(c1, c2, &g)?;
        let b = min_horizon_general(c1, c2, &g)?;
        worst = worst.max(rel_err(&[a.mu_star, a.horizon], &[b.mu_star, b.horizon]));
        worst = worst.max(rel_err(&a.multipliers.to_vec(), &b.multipliers.to_vec()));
    }
    Ok(worst)
}
