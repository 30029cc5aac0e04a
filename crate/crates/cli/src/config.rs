//! Experiment configuration: a JSON document, overridden by flags.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use sepoc_core::models::{
    adn_system, default_activity_rates, default_degrees, kuramoto_system, oa_splay_state, oa_system, splay_phases,
    ClassDistribution, Graph,
};
use sepoc_core::ocp::{ProblemKind, SolverOptions};
use sepoc_core::{CostFunction, SeparableSystem};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    #[default]
    Kuramoto,
    Oa,
    Adn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    /// Maximize the terminal observable under an effort budget.
    #[default]
    MaxObjective,
    /// Reach a target observable with least effort.
    MinEffort,
    /// Reach a target observable in least time under an effort budget.
    MinTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Quantity varied by `sweep`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParameter {
    #[serde(alias = "T")]
    Horizon,
    #[serde(alias = "C1")]
    Budget,
    #[serde(alias = "C2")]
    RescaledTime,
    Target,
    Gamma,
    Alpha0,
    I0,
}

impl SweepParameter {
    pub fn column(self) -> (&'static str, &'static str) {
        match self {
            SweepParameter::Horizon => ("T", "time"),
            SweepParameter::Budget => ("C1", "effort"),
            SweepParameter::RescaledTime => ("C2", "rescaled time"),
            SweepParameter::Target => ("target", "1"),
            SweepParameter::Gamma => ("gamma", "1"),
            SweepParameter::Alpha0 => ("alpha0", "1"),
            SweepParameter::I0 => ("I0", "1"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl SweepSpec {
    /// `steps` evenly spaced values from `lo` to `hi`.
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(CliError::Usage(format!("sweep needs lo < hi, got [{}, {}]", self.lo, self.hi)));
        }
        if self.steps < 2 {
            return Err(CliError::Usage(format!("sweep needs at least 2 steps, got {}", self.steps)));
        }
        let n = self.steps - 1;
        Ok((0..=n)
            .map(|k| if k == n { self.hi } else { self.lo + (self.hi - self.lo) * k as f64 / n as f64 })
            .collect())
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Format,
}

/// Everything an experiment needs. Unset scalars fall back to the
/// defaults of the chosen model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    /// Edge list for the Kuramoto model; the shipped 10-node graph if unset.
    pub graph: Option<PathBuf>,
    /// Number of degree / activity classes.
    pub classes: Option<usize>,
    /// Class attributes `k_i` (OA) or `a_i` (ADN).
    pub values: Option<Vec<f64>>,
    /// Power-law exponent of the class distribution.
    pub gamma: f64,
    /// Initial modulus of the OA splay state.
    pub alpha0: f64,
    /// Initial ADN prevalence in every class.
    pub i0: f64,
    /// Explicit initial state, overriding the model default.
    pub initial_state: Option<Vec<f64>>,

    pub problem: Problem,
    /// Horizon `T`.
    pub horizon: f64,
    /// Effort budget `C1`.
    pub budget: f64,
    /// Target observable level.
    pub target: f64,
    /// Rescaled-time budget `C2`; solved from `target` when unset.
    pub rescaled_time: Option<f64>,
    /// Running cost `g(mu) = mu^k`.
    pub cost_power: u32,

    /// Number of control coefficients `q`.
    pub order: usize,
    /// Integration tolerance.
    pub tol: f64,
    pub solver: SolverOptions,
    /// Initial coefficients for the Newton solver.
    pub init: Option<Vec<f64>>,
    /// Control coefficients for `simulate`; constant `mu = 1` if unset.
    pub control: Option<Vec<f64>>,

    /// Search range of the coupling condition.
    pub coupling_tau_max: f64,
    /// `rescale-curve` range and spacing.
    pub tau_max: f64,
    pub dtau: f64,
    /// Output samples for `simulate`.
    pub samples: usize,
    /// Observable window for `enumerate-sps`.
    pub phi_lo: f64,
    pub phi_hi: f64,

    pub sweep: Option<SweepSpec>,
    pub output: OutputSpec,
    pub seed: u64,
    /// Worker threads for sweeps; all cores if unset. Not echoed, since
    /// results do not depend on it.
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Kuramoto,
            graph: None,
            classes: None,
            values: None,
            gamma: 2.2,
            alpha0: 0.1,
            i0: 0.02,
            initial_state: None,
            problem: Problem::MaxObjective,
            horizon: 3.0,
            budget: 1.0,
            target: 0.9,
            rescaled_time: None,
            cost_power: 2,
            order: sepoc_core::control::DEFAULT_ORDER,
            tol: sepoc_core::DEFAULT_TOL,
            solver: SolverOptions::default(),
            init: None,
            control: None,
            coupling_tau_max: 100.0,
            tau_max: 10.0,
            dtau: 0.01,
            samples: 101,
            phi_lo: 0.0,
            phi_hi: 1.0,
            sweep: None,
            output: OutputSpec::default(),
            seed: 1,
            threads: None,
        }
    }
}

/// Flags that override config fields.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Edge-list file for the Kuramoto model.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub alpha0: Option<f64>,
    #[arg(long)]
    pub i0: Option<f64>,
    #[arg(long, value_enum)]
    pub problem: Option<Problem>,
    /// Horizon T.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Effort budget C1.
    #[arg(long)]
    pub budget: Option<f64>,
    /// Target observable level.
    #[arg(long)]
    pub target: Option<f64>,
    /// Rescaled-time budget C2.
    #[arg(long)]
    pub rescaled_time: Option<f64>,
    #[arg(long)]
    pub cost_power: Option<u32>,
    /// Number of control coefficients.
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Comma-separated initial coefficients.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub init: Option<Vec<f64>>,
    /// Comma-separated control coefficients for `simulate`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub control: Option<Vec<f64>>,
    #[arg(long)]
    pub tau_max: Option<f64>,
    #[arg(long)]
    pub dtau: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub phi_lo: Option<f64>,
    #[arg(long)]
    pub phi_hi: Option<f64>,
    #[arg(long, value_enum)]
    pub sweep_param: Option<SweepParameter>,
    #[arg(long, allow_hyphen_values = true)]
    pub sweep_lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub sweep_hi: Option<f64>,
    #[arg(long)]
    pub sweep_steps: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl ExperimentConfig {
    /// Read a config file. Relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(g) = &cfg.graph {
            if g.is_relative() {
                cfg.graph = Some(base.join(g));
            }
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &o.$field {
                    self.$field = v.clone();
                }
            )*};
        }
        macro_rules! set_opt {
            ($($field:ident),*) => {$(
                if let Some(v) = &o.$field {
                    self.$field = Some(v.clone());
                }
            )*};
        }
        set!(model, gamma, alpha0, i0, problem, horizon, budget, target, cost_power, order, tol);
        set!(tau_max, dtau, samples, phi_lo, phi_hi);
        set_opt!(graph, classes, rescaled_time, init, control);
        if let Some(v) = o.max_iters {
            self.solver.max_iters = v;
        }
        if let Some(f) = o.format {
            self.output.format = f;
        }
        let touched = o.sweep_param.is_some() || o.sweep_lo.is_some() || o.sweep_hi.is_some() || o.sweep_steps.is_some();
        if touched {
            let base = self.sweep.clone();
            let pick = |flag: Option<f64>, from: Option<f64>, name: &str| {
                flag.or(from).ok_or_else(|| CliError::Usage(format!("sweep is missing `{name}`")))
            };
            self.sweep = Some(SweepSpec {
                parameter: o
                    .sweep_param
                    .or(base.as_ref().map(|s| s.parameter))
                    .ok_or_else(|| CliError::Usage("sweep is missing `parameter`".into()))?,
                lo: pick(o.sweep_lo, base.as_ref().map(|s| s.lo), "lo")?,
                hi: pick(o.sweep_hi, base.as_ref().map(|s| s.hi), "hi")?,
                steps: o.sweep_steps.or(base.as_ref().map(|s| s.steps)).unwrap_or(2),
            });
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(CliError::Usage(format!("`{name}` must be positive, got {v}")))
            }
        };
        positive("tol", self.tol)?;
        positive("coupling_tau_max", self.coupling_tau_max)?;
        if self.order == 0 {
            return Err(CliError::Usage("`order` must be at least 1".into()));
        }
        if let Some(g) = &self.graph {
            if !g.exists() {
                return Err(CliError::io(
                    g,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "graph file not found"),
                ));
            }
        }
        if let Some(s) = &self.sweep {
            s.values()?;
        }
        Ok(())
    }

    pub fn cost(&self) -> Result<CostFunction> {
        Ok(CostFunction::power(self.cost_power)?)
    }

    pub fn problem_kind(&self) -> ProblemKind {
        match self.problem {
            Problem::MaxObjective => ProblemKind::MaxObjective { horizon: self.horizon, budget: self.budget },
            Problem::MinEffort => ProblemKind::MinEffort { horizon: self.horizon, target: self.target },
            Problem::MinTime => ProblemKind::MinTime { budget: self.budget, target: self.target },
        }
    }

    pub fn with_parameter(&self, p: SweepParameter, v: f64) -> Self {
        let mut c = self.clone();
        match p {
            SweepParameter::Horizon => c.horizon = v,
            SweepParameter::Budget => c.budget = v,
            SweepParameter::RescaledTime => c.rescaled_time = Some(v),
            SweepParameter::Target => c.target = v,
            SweepParameter::Gamma => c.gamma = v,
            SweepParameter::Alpha0 => c.alpha0 = v,
            SweepParameter::I0 => c.i0 = v,
        }
        c
    }

    /// The configured system and its initial state.
    pub fn build_model(&self) -> Result<(Arc<dyn SeparableSystem>, Vec<f64>)> {
        let (sys, z0): (Arc<dyn SeparableSystem>, Vec<f64>) = match self.model {
            ModelKind::Kuramoto => {
                let graph = match &self.graph {
                    Some(p) => Graph::from_file(p).map_err(|e| match e {
                        sepoc_core::Error::Io(source) => CliError::io(p, source),
                        other => CliError::Usage(format!("{}: {other}", p.display())),
                    })?,
                    None => Graph::default10(),
                };
                let n = graph.node_count();
                (Arc::new(kuramoto_system(graph)), splay_phases(n))
            }
            ModelKind::Oa => {
                let dist = self.distribution(10, default_degrees)?;
                let m = dist.len();
                (Arc::new(oa_system(dist)), oa_splay_state(m, self.alpha0))
            }
            ModelKind::Adn => {
                let dist = self.distribution(5, default_activity_rates)?;
                let m = dist.len();
                (Arc::new(adn_system(dist)), vec![self.i0; m])
            }
        };
        match &self.initial_state {
            Some(z) if z.len() != sys.dim() => Err(CliError::Usage(format!(
                "initial_state has {} entries, {} needs {}",
                z.len(),
                sys.label(),
                sys.dim()
            ))),
            Some(z) => Ok((sys, z.clone())),
            None => Ok((sys, z0)),
        }
    }

    fn distribution(&self, default_classes: usize, defaults: fn(usize) -> Vec<f64>) -> Result<ClassDistribution> {
        let values = match (&self.values, self.classes) {
            (Some(v), Some(m)) if v.len() != m => {
                return Err(CliError::Usage(format!("{} class values given but classes = {m}", v.len())))
            }
            (Some(v), _) => v.clone(),
            (None, m) => defaults(m.unwrap_or(default_classes)),
        };
        Ok(ClassDistribution::power_law(values, self.gamma)?)
    }
}
