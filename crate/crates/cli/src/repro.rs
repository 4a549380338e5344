//! Canonical configs reproducing the acceptance criteria, one file each.

use std::fs;
use std::path::{Path, PathBuf};

use vertexlab::criterion::{CriterionKind, GradientModel};
use vertexlab::pdesim::InitialShape;

use crate::config::{Config, FnSpec, IntegralForm, Scenario, SweepSpec, Task, SCHEMA_VERSION};
use crate::CliError;

fn phi(name: &str, param: Option<f64>) -> Option<FnSpec> {
    Some(FnSpec::named(name, param))
}

fn criterion(id: &str, p: Option<FnSpec>, k: Option<FnSpec>) -> Scenario {
    Scenario { phi: p, kappa: k, tau0: Some(10.0), tau_max: Some(1e12), tol: Some(1e-10), ..Scenario::new(id, Task::Criterion) }
}

fn petrovskii(id: &str, p: Option<FnSpec>, form: IntegralForm) -> Scenario {
    Scenario { phi: p, form: Some(form), tau0: Some(10.0), tau_max: Some(1e12), ..Scenario::new(id, Task::Petrovskii) }
}

fn catalog() -> Vec<(&'static str, Option<FnSpec>)> {
    vec![
        ("phi-star", phi("petrovskii-critical", None)),
        ("eps-0.05", phi("petrovskii-eps", Some(0.05))),
        ("eps-0.1", phi("petrovskii-eps", Some(0.1))),
        ("log-0.75", phi("log-power", Some(0.75))),
        ("log-1", phi("log-power", Some(1.0))),
        ("log-2", phi("log-power", Some(2.0))),
        ("biharmonic-critical", phi("biharmonic-critical", None)),
    ]
}

fn matching(id: &str, grid: usize, dtau: f64, refine: bool) -> Scenario {
    Scenario {
        phi: phi("petrovskii-critical", None),
        tau_span: Some([1e4, 1e4 + 20.0]),
        window: Some([1e4 + 5.0, 1e4 + 15.0]),
        grid_points: Some(grid),
        dtau: Some(dtau),
        initial: Some(InitialShape::Plateau),
        refine: Some(refine),
        ..Scenario::new(id, Task::Compare)
    }
}

fn vertex(id: &str, p: Option<FnSpec>, refine: bool) -> Scenario {
    Scenario {
        phi: p,
        tau_span: Some([100.0, 200.0]),
        grid_points: Some(801),
        dtau: Some(2.5e-3),
        diag_interval: Some(0.25),
        initial: Some(InitialShape::Plateau),
        refine: Some(refine),
        ..Scenario::new(id, Task::Simulate)
    }
}

pub fn suite() -> Vec<(&'static str, Config)> {
    let cfg = |scenarios: Vec<Scenario>| Config { schema_version: SCHEMA_VERSION, scenarios };
    let zero = || Some(FnSpec::named("zero-kappa", None));
    let neg = || Some(FnSpec::named("neg-inverse-log", None));

    let mut dichotomy = Vec::new();
    for (tag, p) in catalog().into_iter().take(3) {
        dichotomy.push(criterion(&format!("criterion-{tag}"), p.clone(), zero()));
        dichotomy.push(petrovskii(&format!("petrovskii-{tag}"), p, IntegralForm::Integral));
    }
    dichotomy.push(Scenario {
        task: Some(Task::Sweep),
        sweep: Some(SweepSpec { task: Task::Criterion, parameter: "phi.param".into(), values: vec![0.0, 0.05, 0.1] }),
        ..criterion("eps-sweep", phi("petrovskii-eps", None), zero())
    });

    let decay = vec![Scenario { tau_max: Some(1e6), ..criterion("decay-phi-star", phi("petrovskii-critical", None), zero()) }];

    let mut equivalence = Vec::new();
    for (tag, p) in catalog() {
        equivalence.push(petrovskii(&format!("integral-{tag}"), p.clone(), IntegralForm::Integral));
        equivalence.push(petrovskii(&format!("dini-osgood-{tag}"), p, IntegralForm::DiniOsgood));
    }

    let mut negative: Vec<Scenario> = catalog()
        .into_iter()
        .map(|(tag, p)| Scenario { osgood: Some(true), ..criterion(&format!("neg-kappa-{tag}"), p, neg()) })
        .collect();
    negative.push(criterion("zero-kappa-log-2", phi("log-power", Some(2.0)), zero()));

    let mut flip: Vec<Scenario> = [1.0, 10.0, 100.0]
        .into_iter()
        .map(|c| Scenario {
            iterations: Some(8),
            ..criterion(&format!("critical-kappa-c{c}"), phi("petrovskii-critical", None), Some(FnSpec::named("critical-kappa", Some(c))))
        })
        .collect();
    flip.push(criterion("zero-kappa-phi-star", phi("petrovskii-critical", None), zero()));

    let mut gradient = vec![Scenario {
        tau0: Some(1e2),
        ln_a0: Some((1e-3f64).ln()),
        ..criterion("zero-kappa-phi-star", phi("petrovskii-critical", None), zero())
    }];
    for (tag, k) in [("constant", FnSpec::named("constant-kappa", Some(1.0))), ("critical", FnSpec::named("critical-kappa", Some(1.0)))] {
        for model in [GradientModel::Equality, GradientModel::Bound] {
            let m = if model == GradientModel::Equality { "equality" } else { "bound" };
            gradient.push(Scenario {
                kind: Some(CriterionKind::Gradient),
                gradient_model: Some(model),
                tau0: Some(1e2),
                ln_a0: Some((1e-3f64).ln()),
                gradient_window: Some([1e2, 1e6]),
                ..criterion(&format!("gradient-{tag}-{m}"), phi("petrovskii-critical", None), Some(k.clone()))
            });
        }
    }

    let kernel = |id: &str, m: u32| Scenario { m: Some(m), k_max: Some(6), ..Scenario::new(id, Task::Kernel) };
    let blayer = |id: &str, m: u32| Scenario { m: Some(m), ..Scenario::new(id, Task::Blayer) };

    let biharmonic = vec![
        kernel("kernel-m2", 2),
        Scenario { m: Some(2), ..petrovskii("envelope-c2.5", phi("biharmonic-scaled", Some(2.5)), IntegralForm::Biharmonic) },
        Scenario { m: Some(2), ..petrovskii("envelope-critical", phi("biharmonic-critical", None), IntegralForm::Biharmonic) },
        Scenario { m: Some(2), ..petrovskii("envelope-c3.5", phi("biharmonic-scaled", Some(3.5)), IntegralForm::Biharmonic) },
    ];

    vec![
        ("petrovskii-dichotomy", cfg(dichotomy)),
        ("closed-form-decay", cfg(decay)),
        ("criterion-form-equivalence", cfg(equivalence)),
        ("negative-kappa-universality", cfg(negative)),
        ("critical-nonlinearity-flip", cfg(flip)),
        ("gradient-negligibility", cfg(gradient)),
        ("biorthonormality-m2", cfg(vec![kernel("spectral-m1", 1), kernel("spectral-m2", 2)])),
        ("kernel-asymptotics", cfg(vec![kernel("kernel-m1", 1), kernel("kernel-m2", 2)])),
        ("boundary-layer-profiles", cfg(vec![blayer("blayer-m1", 1), blayer("blayer-m2", 2)])),
        ("biharmonic-critical-constant", cfg(biharmonic)),
        ("pde-vs-ode-matching", cfg(vec![matching("matching-phi-star", 801, 2.5e-3, false)])),
        (
            "direct-vertex-behaviour",
            cfg(vec![vertex("vertex-phi-star", phi("petrovskii-critical", None), false), vertex("vertex-eps-0.1", phi("petrovskii-eps", Some(0.1)), false)]),
        ),
        (
            "determinism-and-convergence",
            cfg(vec![
                matching("matching-refined", 801, 2.5e-3, true),
                vertex("vertex-phi-star-refined", phi("petrovskii-critical", None), true),
                vertex("vertex-eps-0.1-refined", phi("petrovskii-eps", Some(0.1)), true),
            ]),
        ),
    ]
}

/// Writes `<name>.toml` for every suite entry under `dir`.
pub fn emit_reproduction_suite(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.into(), source })?;
    let mut out = Vec::new();
    for (i, (name, cfg)) in suite().into_iter().enumerate() {
        cfg.validate()?;
        let path = dir.join(format!("{name}.toml"));
        let body = format!("# Acceptance criterion {}: {name}\n{}", i + 1, cfg.to_toml());
        fs::write(&path, body).map_err(|source| CliError::Io { path: path.clone(), source })?;
        out.push(path);
    }
    Ok(out)
}
