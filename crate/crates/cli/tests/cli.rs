use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;
use vertexlab_cli::config::Config;
use vertexlab_cli::repro::{emit_reproduction_suite, suite};
use vertexlab_cli::{comparable, run_config, run_scenarios, CliError, RunOptions, Status};

const DICHOTOMY: &str = r#"
schema_version = 1

[[scenario]]
id = "petrovskii-star"
task = "petrovskii"
phi = "petrovskii-critical"
form = "integral"

[[scenario]]
id = "criterion-star"
task = "criterion"
phi = "petrovskii-critical"
kappa = "zero-kappa"
tau0 = 10.0
tau_max = 1e12
"#;

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let p = dir.join("scenarios.toml");
    fs::write(&p, body).unwrap();
    p
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn petrovskii_and_criterion_agree_for_the_critical_phi() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), DICHOTOMY);
    let out = dir.path().join("out");
    let report = run_scenarios(&cfg, &out, &RunOptions::default()).unwrap();
    assert!(!report.failed());
    let json = read_json(&out.join("report.json"));
    assert_eq!(json["reports"][0]["payload"]["vertex"], "regular");
    assert_eq!(json["reports"][1]["payload"]["verdict"]["verdict"], "regular");
    let c = &json["consistency"];
    assert_eq!(c.as_array().unwrap().len(), 1);
    assert_eq!(c[0]["consistent"], true);
    assert!(out.join("criterion-star/trajectory.csv").exists());
}

#[test]
fn unknown_phi_is_a_config_error_naming_the_field() {
    let body = DICHOTOMY.replacen("petrovskii-critical", "no-such-phi", 1);
    let err = Config::parse(&body).unwrap_err();
    let CliError::Config(msg) = err else { panic!("expected a config error") };
    assert!(msg.contains("phi.name"), "{msg}");
    assert!(msg.contains("petrovskii-star"), "{msg}");
}

#[test]
fn unknown_fields_and_versions_are_rejected() {
    assert!(Config::parse(&DICHOTOMY.replace("form = \"integral\"", "frm = \"integral\"")).is_err());
    let e = Config::parse(&DICHOTOMY.replace("schema_version = 1", "schema_version = 7")).unwrap_err();
    assert!(e.to_string().contains("schema_version"));
    let dup = DICHOTOMY.replace("criterion-star", "petrovskii-star");
    assert!(Config::parse(&dup).unwrap_err().to_string().contains("duplicate"));
}

#[test]
fn eps_sweep_flips_after_zero() {
    let body = r#"
schema_version = 1

[[scenario]]
id = "eps"
task = "sweep"
phi = "petrovskii-eps"
kappa = "zero-kappa"

[scenario.sweep]
task = "criterion"
parameter = "phi.param"
values = [0.0, 0.05, 0.1]
"#;
    let (report, files) = run_config(&Config::parse(body).unwrap(), &RunOptions::default()).unwrap();
    assert_eq!(report.reports[0].status, Status::Ok);
    let verdicts = &report.reports[0].payload["verdicts"];
    assert_eq!(verdicts, &serde_json::json!(["regular", "irregular", "irregular"]));
    assert_eq!(files.len(), 3);
}

#[test]
fn reproduction_suite_is_complete_and_parses() {
    let names: Vec<&str> = suite().iter().map(|s| s.0).collect();
    assert_eq!(names.len(), 13);
    for n in ["petrovskii-dichotomy", "biorthonormality-m2", "pde-vs-ode-matching"] {
        assert!(names.contains(&n), "{n}");
    }
    let dir = tempfile::tempdir().unwrap();
    let paths = emit_reproduction_suite(dir.path()).unwrap();
    assert_eq!(paths.len(), 13);
    for (i, p) in paths.iter().enumerate() {
        let text = fs::read_to_string(p).unwrap();
        assert!(text.starts_with(&format!("# Acceptance criterion {}:", i + 1)));
        let cfg = Config::parse(&text).unwrap();
        assert!(!cfg.scenarios.is_empty());
    }
}

#[test]
fn repeated_runs_are_identical_apart_from_the_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), DICHOTOMY);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_scenarios(&cfg, &a, &RunOptions::default()).unwrap();
    run_scenarios(&cfg, &b, &RunOptions { workers: 4, ..RunOptions::default() }).unwrap();
    let csv = "criterion-star/trajectory.csv";
    assert_eq!(fs::read(a.join(csv)).unwrap(), fs::read(b.join(csv)).unwrap());
    let ra = fs::read_to_string(a.join("report.json")).unwrap();
    let rb = fs::read_to_string(b.join("report.json")).unwrap();
    assert_eq!(comparable(&ra), comparable(&rb));
}

#[test]
fn a_failing_scenario_leaves_the_others_intact() {
    let body = format!(
        "{DICHOTOMY}\n[[scenario]]\nid = \"too-far\"\ntask = \"criterion\"\ntau0 = 10.0\ntau_max = 1e13\n"
    );
    let (report, _) = run_config(&Config::parse(&body).unwrap(), &RunOptions { workers: 3, ..RunOptions::default() }).unwrap();
    assert!(report.failed());
    let by_id = |id: &str| report.reports.iter().find(|r| r.id == id).unwrap();
    assert_eq!(by_id("too-far").status, Status::Error);
    assert!(by_id("too-far").error.as_deref().unwrap().contains("tau_max"));
    assert_eq!(by_id("petrovskii-star").status, Status::Ok);
    assert_eq!(by_id("criterion-star").payload["verdict"]["verdict"], "regular");
    assert_eq!(report.reports.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(), ["petrovskii-star", "criterion-star", "too-far"]);
}

#[test]
fn task_filter_selects_matching_scenarios() {
    let cfg = Config::parse(DICHOTOMY).unwrap();
    let opts = RunOptions { task: Some(vertexlab_cli::Task::Petrovskii), ..RunOptions::default() };
    let (report, _) = run_config(&cfg, &opts).unwrap();
    assert_eq!(report.reports.len(), 1);
    assert!(report.consistency.is_empty());
}

#[test]
fn floats_keep_seventeen_significant_digits() {
    let s = vertexlab_cli::to_json(&serde_json::json!({ "x": 0.1, "y": f64::NAN }));
    assert!(s.contains("1.0000000000000001e-1"), "{s}");
    assert!(s.contains("null"));
}

#[test]
fn exit_status_reflects_the_outcome() {
    let bin = env!("CARGO_BIN_EXE_vertexlab");
    let dir = tempfile::tempdir().unwrap();
    let ok = write_config(dir.path(), DICHOTOMY);
    let out = dir.path().join("out");
    let st = Command::new(bin).args(["run", "--config"]).arg(&ok).arg("--out").arg(&out).output().unwrap().status;
    assert!(st.success());

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, DICHOTOMY.replace("petrovskii-critical", "nope")).unwrap();
    let st = Command::new(bin).args(["run", "--config"]).arg(&bad).arg("--out").arg(&out).output().unwrap().status;
    assert_eq!(st.code(), Some(2));

    let failing = dir.path().join("failing.toml");
    fs::write(&failing, format!("{DICHOTOMY}\n[[scenario]]\nid = \"x\"\ntask = \"criterion\"\ntau_max = 1e13\n")).unwrap();
    let st = Command::new(bin).args(["criterion", "--config"]).arg(&failing).arg("--out").arg(&out).output().unwrap().status;
    assert_eq!(st.code(), Some(1));

    let st = Command::new(bin).args(["repro", "--out"]).arg(dir.path().join("repro")).output().unwrap().status;
    assert!(st.success());
}
