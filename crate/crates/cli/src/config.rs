use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use vertexlab::criterion::{CriterionKind, GradientModel, M2Form, VerdictThresholds};
use vertexlab::funcs::{kappa_by_name, phi_by_name, Kappa, SlowGrowthFn};
use vertexlab::pdesim::InitialShape;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Validate,
    Kernel,
    Blayer,
    Criterion,
    Petrovskii,
    Simulate,
    Compare,
    Sweep,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Validate => "validate",
            Task::Kernel => "kernel",
            Task::Blayer => "blayer",
            Task::Criterion => "criterion",
            Task::Petrovskii => "petrovskii",
            Task::Simulate => "simulate",
            Task::Compare => "compare",
            Task::Sweep => "sweep",
        }
    }
}

/// A catalog function, by name or as `{ name, param }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FnSpec {
    Name(String),
    Full { name: String, param: Option<f64> },
}

impl FnSpec {
    pub fn named(name: &str, param: Option<f64>) -> Self {
        match param {
            None => FnSpec::Name(name.into()),
            Some(p) => FnSpec::Full { name: name.into(), param: Some(p) },
        }
    }

    pub fn name(&self) -> &str {
        match self {
            FnSpec::Name(n) | FnSpec::Full { name: n, .. } => n,
        }
    }

    pub fn param(&self) -> Option<f64> {
        match self {
            FnSpec::Name(_) => None,
            FnSpec::Full { param, .. } => *param,
        }
    }

    fn with_param(&self, p: f64) -> Self {
        FnSpec::Full { name: self.name().into(), param: Some(p) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegralForm {
    Integral,
    DiniOsgood,
    Biharmonic,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSpec {
    pub min_decades: Option<f64>,
    pub drop: Option<f64>,
    pub trend_slope: Option<f64>,
    pub plateau: Option<f64>,
}

impl ThresholdSpec {
    pub fn resolve(&self) -> VerdictThresholds {
        let d = VerdictThresholds::default();
        VerdictThresholds {
            min_decades: self.min_decades.unwrap_or(d.min_decades),
            drop: self.drop.unwrap_or(d.drop),
            trend_slope: self.trend_slope.unwrap_or(d.trend_slope),
            plateau: self.plateau.unwrap_or(d.plateau),
            tail: d.tail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub task: Task,
    /// One of `phi.param`, `kappa.param`, `tau_max`, `ln_a0`.
    pub parameter: String,
    pub values: Vec<f64>,
}

pub const SWEEP_PARAMETERS: &[&str] = &["phi.param", "kappa.param", "tau_max", "ln_a0"];

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    pub task: Option<Task>,
    pub m: Option<u32>,
    pub kind: Option<CriterionKind>,
    pub gradient_model: Option<GradientModel>,
    pub m2_form: Option<M2Form>,
    pub radial_exponent: Option<u32>,
    pub phi: Option<FnSpec>,
    pub kappa: Option<FnSpec>,
    pub tau0: Option<f64>,
    pub tau_max: Option<f64>,
    pub tol: Option<f64>,
    pub ln_a0: Option<f64>,
    /// Run the irregularity iteration with this many iterates.
    pub iterations: Option<usize>,
    pub osgood: Option<bool>,
    /// Horizon of the gradient-negligibility ratio.
    pub gradient_window: Option<[f64; 2]>,
    pub form: Option<IntegralForm>,
    pub k_max: Option<usize>,
    pub fit_window: Option<[f64; 2]>,
    pub grid_points: Option<usize>,
    pub dtau: Option<f64>,
    pub tau_span: Option<[f64; 2]>,
    pub initial: Option<InitialShape>,
    pub amplitude: Option<f64>,
    pub diag_interval: Option<f64>,
    pub snapshots: Option<usize>,
    pub validation: Option<bool>,
    pub window: Option<[f64; 2]>,
    /// Repeat the simulation with halved dz and dτ and report the change in a₀(τ₁).
    pub refine: Option<bool>,
    pub thresholds: Option<ThresholdSpec>,
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    #[serde(rename = "scenario", default)]
    pub scenarios: Vec<Scenario>,
}

impl Scenario {
    pub fn new(id: &str, task: Task) -> Self {
        Self { id: id.into(), task: Some(task), ..Default::default() }
    }

    pub fn task(&self) -> Task {
        self.task.expect("validated scenario has a task")
    }

    pub fn m(&self) -> u32 {
        self.m.unwrap_or(1)
    }

    pub fn phi(&self) -> vertexlab::Result<SlowGrowthFn> {
        let default = if self.m() == 2 { "biharmonic-critical" } else { "petrovskii-critical" };
        let spec = self.phi.clone().unwrap_or(FnSpec::Name(default.into()));
        phi_by_name(spec.name(), spec.param())
    }

    pub fn kappa(&self) -> vertexlab::Result<Kappa> {
        let spec = self.kappa.clone().unwrap_or(FnSpec::Name("zero-kappa".into()));
        kappa_by_name(spec.name(), spec.param())
    }

    /// The scenario with `parameter` set to `value`, as a plain task scenario.
    pub fn sweep_point(&self, value: f64, index: usize) -> Scenario {
        let sw = self.sweep.as_ref().expect("sweep scenario");
        let mut s = self.clone();
        s.sweep = None;
        s.task = Some(sw.task);
        s.id = format!("{}-{index}", self.id);
        match sw.parameter.as_str() {
            "phi.param" => s.phi = Some(s.phi.clone().unwrap_or(FnSpec::Name("petrovskii-eps".into())).with_param(value)),
            "kappa.param" => s.kappa = Some(s.kappa.clone().unwrap_or(FnSpec::Name("zero-kappa".into())).with_param(value)),
            "tau_max" => s.tau_max = Some(value),
            "ln_a0" => s.ln_a0 = Some(value),
            _ => unreachable!("sweep parameter validated"),
        }
        s
    }

    fn check(&self, idx: usize) -> Result<(), CliError> {
        let at = |field: &str, msg: String| CliError::Config(format!("scenario[{idx}] '{}': field `{field}`: {msg}", self.id));
        let task = self.task.ok_or_else(|| at("task", "missing".into()))?;
        if self.id.is_empty() || self.id.contains(['/', '\\']) || self.id.starts_with('.') {
            return Err(at("id", "must be a non-empty name without path separators".into()));
        }
        if !(1..=2).contains(&self.m()) {
            return Err(at("m", format!("unsupported order {}", self.m())));
        }
        if let Some(p) = &self.phi {
            phi_by_name(p.name(), p.param()).map_err(|e| at("phi.name", e.to_string()))?;
        }
        if let Some(k) = &self.kappa {
            kappa_by_name(k.name(), k.param()).map_err(|e| at("kappa.name", e.to_string()))?;
        }
        if let Some(n) = self.grid_points {
            if n < 201 || n % 2 == 0 {
                return Err(at("grid_points", format!("{n} must be odd and at least 201")));
            }
        }
        if let Some(t) = self.tol {
            if !(1e-12..=1e-6).contains(&t) {
                return Err(at("tol", format!("{t} outside [1e-12, 1e-6]")));
            }
        }
        if let Some(f) = self.form {
            if (f == IntegralForm::Biharmonic) != (self.m() == 2) {
                return Err(at("form", format!("{f:?} does not match m = {}", self.m())));
            }
        }
        match (task, &self.sweep) {
            (Task::Sweep, None) => return Err(at("sweep", "missing for a sweep task".into())),
            (Task::Sweep, Some(sw)) => {
                if sw.task == Task::Sweep {
                    return Err(at("sweep.task", "nested sweeps are not supported".into()));
                }
                if !SWEEP_PARAMETERS.contains(&sw.parameter.as_str()) {
                    return Err(at("sweep.parameter", format!("'{}' is not one of {SWEEP_PARAMETERS:?}", sw.parameter)));
                }
                if sw.values.is_empty() {
                    return Err(at("sweep.values", "empty".into()));
                }
                for (i, &v) in sw.values.iter().enumerate() {
                    self.sweep_point(v, i).check(idx)?;
                }
            }
            (_, Some(_)) => return Err(at("sweep", format!("only valid with task = \"sweep\", not {}", task.name()))),
            _ => {}
        }
        Ok(())
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Config = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "field `schema_version`: {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let mut seen = HashSet::new();
        for (i, s) in self.scenarios.iter().enumerate() {
            s.check(i)?;
            if !seen.insert(s.id.as_str()) {
                return Err(CliError::Config(format!("scenario[{i}]: field `id`: duplicate id '{}'", s.id)));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
