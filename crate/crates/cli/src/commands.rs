//! Subcommand implementations. Each returns the table to write, the
//! extra sidecar fields, and an error when the run only partly succeeded.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde_json::{json, Value};

use sepoc_core::coupling::solve_c2;
use sepoc_core::ocp::{classify_sp, enumerate_sps, solve_stationary, OcProblem, ProblemKind, StationaryPoint};
use sepoc_core::ode::{integrate_controlled, lie_derivative_phi, observable_curve, rescaled_state, Sampling};
use sepoc_core::reference::{map_multipliers, max_rescaled_time, min_effort, min_horizon, ReferenceSolution};
use sepoc_core::validation::run_suite;
use sepoc_core::{quadrature, ControlPolynomial};

use crate::config::{ExperimentConfig, Problem};
use crate::error::{CliError, Result};
use crate::output::{Cell, Table};

pub struct Outcome {
    pub table: Table,
    pub extra: Value,
    /// Set when some rows are error records.
    pub failure: Option<CliError>,
}

impl Outcome {
    fn ok(table: Table) -> Self {
        Self { table, extra: Value::Null, failure: None }
    }
}

/// Analytic solution: reference problem plus time rescaling.
#[derive(Debug, Clone)]
pub struct Theory {
    pub reference: ReferenceSolution,
    pub c2: f64,
    pub phi: f64,
    pub phi_h: f64,
    pub multipliers: Vec<f64>,
}

impl Theory {
    pub fn mu_star(&self) -> f64 {
        self.reference.mu_star
    }

    pub fn horizon(&self) -> f64 {
        self.reference.horizon
    }
}

fn problem(cfg: &ExperimentConfig) -> Result<OcProblem> {
    let (sys, z0) = cfg.build_model()?;
    Ok(OcProblem::new(cfg.problem_kind(), sys, z0)?
        .with_cost(cfg.cost()?)
        .with_order(cfg.order)
        .with_tol(cfg.tol))
}

/// The rescaled-time budget: given directly or solved from the target.
fn coupled_c2(cfg: &ExperimentConfig, prob: &OcProblem) -> Result<f64> {
    match cfg.rescaled_time {
        Some(c2) => Ok(c2),
        None => Ok(solve_c2(prob.system.as_ref(), &prob.z0, cfg.target, cfg.coupling_tau_max, prob.tol)?.c2),
    }
}

pub fn theory(cfg: &ExperimentConfig, prob: &OcProblem) -> Result<Theory> {
    let reference = match prob.kind {
        ProblemKind::MaxObjective { horizon, budget } => max_rescaled_time(horizon, budget, &prob.cost)?,
        ProblemKind::MinEffort { horizon, .. } => min_effort(horizon, coupled_c2(cfg, prob)?, &prob.cost)?,
        ProblemKind::MinTime { budget, .. } => min_horizon(budget, coupled_c2(cfg, prob)?, &prob.cost)?,
    };
    let c2 = reference.rescaled_time();
    let z = rescaled_state(prob.system.as_ref(), &prob.z0, c2, prob.tol)?;
    let phi = prob.system.observable(&z);
    let phi_h = lie_derivative_phi(prob.system.as_ref(), &z)?;
    let multipliers = map_multipliers(&reference, phi_h)?.to_vec();
    Ok(Theory { reference, c2, phi, phi_h, multipliers })
}

pub fn numeric(cfg: &ExperimentConfig, prob: &OcProblem) -> Result<StationaryPoint> {
    let init = cfg.init.clone().unwrap_or_else(|| vec![1.0]);
    Ok(solve_stationary(prob, &init, &cfg.solver)?)
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

/// Largest relative difference between the analytic and numeric solutions
/// over `mu*`, `T`, `Phi` and the multipliers.
pub fn discrepancy(th: &Theory, sp: &StationaryPoint) -> f64 {
    let mu = sp.coeffs()[0] / PI.sqrt();
    let mut worst = relative(mu, th.mu_star())
        .max(relative(sp.horizon(), th.horizon()))
        .max(relative(sp.terminal_observable, th.phi));
    for (a, b) in sp.multipliers.to_vec().iter().zip(&th.multipliers) {
        worst = worst.max(relative(*a, *b));
    }
    worst
}

fn comparison_columns() -> Vec<(&'static str, &'static str)> {
    vec![
        ("theory_mu_star", "1"),
        ("theory_T", "time"),
        ("theory_C2", "rescaled time"),
        ("theory_Phi", "1"),
        ("theory_Phi_h", "1"),
        ("theory_lambda1", "1"),
        ("theory_lambda2", "1"),
        ("numeric_mu_mean", "1"),
        ("numeric_T", "time"),
        ("numeric_I", "rescaled time"),
        ("numeric_Phi", "1"),
        ("numeric_Phi_h", "1"),
        ("numeric_lambda1", "1"),
        ("numeric_lambda2", "1"),
        ("kkt_residual", "1"),
        ("positive", "bool"),
        ("discrepancy", "1"),
        ("status", "-"),
        ("error", "-"),
    ]
}

fn comparison_row(th: &Theory, sp: &StationaryPoint) -> Vec<Cell> {
    let lam = |v: &[f64], k: usize| Cell::opt(v.get(k).copied());
    let num = sp.multipliers.to_vec();
    vec![
        th.mu_star().into(),
        th.horizon().into(),
        th.c2.into(),
        th.phi.into(),
        th.phi_h.into(),
        lam(&th.multipliers, 0),
        lam(&th.multipliers, 1),
        (sp.coeffs()[0] / PI.sqrt()).into(),
        sp.horizon().into(),
        sp.rescaled_time().into(),
        sp.terminal_observable.into(),
        sp.phi_h.into(),
        lam(&num, 0),
        lam(&num, 1),
        sp.kkt_residual.into(),
        sp.positive.into(),
        discrepancy(th, sp).into(),
        "ok".into(),
        Cell::Empty,
    ]
}

fn error_row(width: usize, err: &CliError) -> Vec<Cell> {
    let mut row = vec![Cell::Empty; width];
    row[width - 2] = "error".into();
    row[width - 1] = err.to_string().into();
    row
}

fn compare(cfg: &ExperimentConfig) -> Result<(Theory, StationaryPoint)> {
    let prob = problem(cfg)?;
    let th = theory(cfg, &prob)?;
    let sp = numeric(cfg, &prob)?;
    Ok((th, sp))
}

pub fn sweep(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg
        .sweep
        .clone()
        .ok_or_else(|| CliError::Usage("sweep needs a `sweep` section or --sweep-param/--sweep-lo/--sweep-hi".into()))?;
    let values = spec.values()?;
    // fail fast on configuration errors rather than once per point
    cfg.build_model()?;
    cfg.cost()?;

    let results: Vec<Result<(Theory, StationaryPoint)>> =
        values.par_iter().map(|&v| compare(&cfg.with_parameter(spec.parameter, v))).collect();

    let (name, unit) = spec.parameter.column();
    let mut columns = vec![(name, unit)];
    columns.extend(comparison_columns());
    let mut table = Table::new(columns);
    let width = table.columns.len();
    let mut errors = Vec::new();
    for (&v, r) in values.iter().zip(&results) {
        let mut row = vec![Cell::Num(v)];
        match r {
            Ok((th, sp)) => row.extend(comparison_row(th, sp)),
            Err(e) => {
                log::warn!("{name} = {v}: {e}");
                errors.push(json!({ "parameter": v, "error": e.to_string() }));
                row.extend(error_row(width - 1, e));
            }
        }
        table.push(row);
    }
    let failed = errors.len();
    if failed == values.len() {
        // nothing usable: report the first error's class
        if let Some(Err(e)) = results.into_iter().next() {
            if !matches!(e, CliError::Numeric(_)) {
                return Err(e);
            }
        }
    }
    Ok(Outcome {
        table,
        extra: json!({ "errors": errors }),
        failure: (failed > 0).then_some(CliError::PartialFailure { failed, total: values.len() }),
    })
}

pub fn solve_ocp(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (th, sp) = compare(cfg)?;
    let mut table = Table::new(comparison_columns());
    table.push(comparison_row(&th, &sp));
    Ok(Outcome { table, extra: json!({ "stationary_point": sp }), failure: None })
}

pub fn solve_ref(cfg: &ExperimentConfig) -> Result<Outcome> {
    let prob = problem(cfg)?;
    let th = theory(cfg, &prob)?;
    let r = &th.reference;
    let base = r.multipliers.to_vec();
    let mut table = Table::new([
        ("mu_star", "1"),
        ("T", "time"),
        ("C2", "rescaled time"),
        ("effort", "effort"),
        ("Phi", "1"),
        ("Phi_h", "1"),
        ("ref_lambda1", "1"),
        ("ref_lambda2", "1"),
        ("lambda1", "1"),
        ("lambda2", "1"),
        ("root_count", "1"),
    ]);
    table.push(vec![
        r.mu_star.into(),
        r.horizon.into(),
        th.c2.into(),
        r.effort(&prob.cost).into(),
        th.phi.into(),
        th.phi_h.into(),
        Cell::opt(base.first().copied()),
        Cell::opt(base.get(1).copied()),
        Cell::opt(th.multipliers.first().copied()),
        Cell::opt(th.multipliers.get(1).copied()),
        Cell::Int(r.root_count as i64),
    ]);
    Ok(Outcome::ok(table))
}

pub fn enumerate(cfg: &ExperimentConfig) -> Result<Outcome> {
    if cfg.problem != Problem::MaxObjective {
        return Err(CliError::Usage("enumerate-sps needs problem = max-objective".into()));
    }
    let prob = problem(cfg)?;
    let points = enumerate_sps(&prob, cfg.phi_lo, cfg.phi_hi, &cfg.solver)?;
    let mut table = Table::new([
        ("index", "1"),
        ("p1", "1"),
        ("p2", "1"),
        ("I", "rescaled time"),
        ("Phi", "1"),
        ("Phi_h", "1"),
        ("lambda", "1"),
        ("kkt_residual", "1"),
        ("positive", "bool"),
        ("class", "-"),
    ]);
    for (k, sp) in points.iter().enumerate() {
        let class = serde_json::to_value(classify_sp(&prob, sp)?).expect("classification serializes");
        table.push(vec![
            Cell::Int(k as i64),
            sp.coeffs()[0].into(),
            Cell::opt(sp.coeffs().get(1).copied()),
            sp.rescaled_time().into(),
            sp.terminal_observable.into(),
            sp.phi_h.into(),
            Cell::opt(sp.multipliers.to_vec().first().copied()),
            sp.kkt_residual.into(),
            sp.positive.into(),
            class["class"].as_str().unwrap_or("unknown").into(),
        ]);
    }
    Ok(Outcome { table, extra: json!({ "stationary_points": points }), failure: None })
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (sys, z0) = cfg.build_model()?;
    if cfg.samples < 2 {
        return Err(CliError::Usage("`samples` must be at least 2".into()));
    }
    let mu = match &cfg.control {
        Some(c) => ControlPolynomial::new(c.clone(), cfg.horizon)?,
        None => ControlPolynomial::constant(1.0, cfg.order, cfg.horizon)?,
    };
    let n = cfg.samples - 1;
    let grid: Vec<f64> = (0..=n).map(|k| cfg.horizon * k as f64 / n as f64).collect();
    let traj = integrate_controlled(sys.as_ref(), &mu, &z0, cfg.horizon, cfg.tol, &Sampling::Grid(grid))?;

    let mut columns = vec![("t".to_string(), "time"), ("tau".into(), "rescaled time"), ("mu".into(), "1"), ("Phi".into(), "1")];
    columns.extend((1..=sys.dim()).map(|i| (format!("z{i}"), "state")));
    let mut table = Table::new(columns);
    let nodes = mu.order().max(2);
    for (&t, z) in traj.times.iter().zip(&traj.states) {
        let tau = quadrature::integrate(|s| mu.eval_sigma(mu.sigma(s)), 0.0, t, nodes);
        let mut row = vec![t.into(), tau.into(), mu.eval(t)?.into(), sys.observable(z).into()];
        row.extend(z.iter().map(|&v| Cell::Num(v)));
        table.push(row);
    }
    Ok(Outcome::ok(table))
}

pub fn rescale_curve(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (sys, z0) = cfg.build_model()?;
    let curve = observable_curve(sys.as_ref(), &z0, cfg.tau_max, cfg.dtau, cfg.tol)?;
    let mut table = Table::new([("tau", "rescaled time"), ("Phi", "1"), ("Phi_h", "1")]);
    for p in curve {
        table.push(vec![p.tau.into(), p.phi.into(), Cell::opt(p.phi_h)]);
    }
    Ok(Outcome::ok(table))
}

pub fn validate(cfg: &ExperimentConfig) -> Result<Outcome> {
    let outcomes = run_suite(cfg.seed);
    let mut table = Table::new([("check", "-"), ("passed", "bool"), ("worst", "1"), ("threshold", "1"), ("error", "-")]);
    let mut failed = 0;
    for o in &outcomes {
        if o.passed {
            log::info!("PASS {}", o.name);
        } else {
            failed += 1;
            log::warn!("FAIL {} (worst {:e}, threshold {:e})", o.name, o.worst, o.threshold);
        }
        table.push(vec![
            o.name.as_str().into(),
            o.passed.into(),
            o.worst.into(),
            o.threshold.into(),
            o.error.clone().map_or(Cell::Empty, Cell::Text),
        ]);
    }
    Ok(Outcome {
        table,
        extra: Value::Null,
        failure: (failed > 0).then_some(CliError::PartialFailure { failed, total: outcomes.len() }),
    })
}
