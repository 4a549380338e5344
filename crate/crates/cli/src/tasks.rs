use serde::Serialize;
use serde_json::{json, Value};
use vertexlab::blayer::{bl_profile, solve_limit_equation, LimitConfig};
use vertexlab::criterion::*;
use vertexlab::funcs::{validate_kappa, validate_slow_growth};
use vertexlab::pdesim::{compare_with_criterion, extract_boundary_layer, run, InitialData, InitialShape, PdeTrajectory, SimConfig};
use vertexlab::petrovskii::{biharmonic_linear_criterion, dini_osgood_form, petrovskii_integral, Density, IntegralTrace};
use vertexlab::spectral::*;
use vertexlab::{Error, Result};

use crate::config::{IntegralForm, Scenario, Task};

pub struct TaskOutput {
    pub payload: Value,
    pub thresholds: Value,
    pub artifacts: Vec<(String, String)>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("payload serializes")
}

fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| (a.ln() + (b.ln() - a.ln()) * i as f64 / (n - 1) as f64).exp()).collect()
}

pub fn execute(s: &Scenario) -> Result<TaskOutput> {
    match s.task() {
        Task::Validate => validate(s),
        Task::Kernel => kernel(s),
        Task::Blayer => blayer(s),
        Task::Criterion => criterion(s),
        Task::Petrovskii => petrovskii(s),
        Task::Simulate => simulate(s),
        Task::Compare => compare(s),
        Task::Sweep => sweep(s),
    }
}

fn validate(s: &Scenario) -> Result<TaskOutput> {
    let phi = s.phi()?;
    let kappa = s.kappa()?;
    let t0 = s.tau0.unwrap_or(phi.tau_min.max(10.0));
    let t1 = s.tau_max.unwrap_or(1e12);
    let phi_report = validate_slow_growth(&phi, &log_grid(t0, t1, 40))?;
    let u_lo = 1e-300f64;
    let kappa_report = validate_kappa(&kappa, &log_grid(u_lo, kappa.u_max, 60))?;
    Ok(TaskOutput {
        payload: json!({
            "phi": phi.name,
            "kappa": kappa.name,
            "phi_valid": phi_report.passed(),
            "kappa_valid": kappa_report.passed(),
            "phi_report": to_value(&phi_report),
            "kappa_report": to_value(&kappa_report),
        }),
        thresholds: json!({ "tau_samples": [t0, t1, 40], "u_samples": [u_lo, kappa.u_max, 60] }),
        artifacts: Vec::new(),
    })
}

fn kernel(s: &Scenario) -> Result<TaskOutput> {
    let m = s.m();
    let k = build_kernel(m, QuadSettings::default())?;
    let y_max = integration_radius(&k.constants, 1e-22);
    let n = 8000;
    let h = 2.0 * y_max / n as f64;
    let mass: f64 = (0..=n).map(|i| k.value(-y_max + i as f64 * h)).sum::<f64>() * h;
    let k_max = s.k_max.unwrap_or(6);
    let bio = biorthonormality_matrix(&k, k_max)?;
    let mut identities = Vec::new();
    for j in 0..=k_max.max(8) {
        let p = adjoint_polynomial(m, j)?;
        identities.push(json!({
            "k": j,
            "polynomial": p.render(),
            "eigenvalue": p.lambda_f64(),
            "exact_identity": eigen_identity_holds(&p),
        }));
    }
    let window = s.fit_window.map(|w| (w[0], w[1])).unwrap_or((5.0, 15.0));
    let fit = if m >= 2 { Some(kernel_asymptotic_fit(&k, window)?) } else { None };
    let critical = if m == 2 { Some(k.constants.d0.powf(-0.75)) } else { None };
    let mut csv = String::from("y,F,dF\n");
    for i in 0..=400 {
        let y = 0.05 * i as f64;
        csv.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", y, k.value(y), k.deriv(y, 1)));
    }
    Ok(TaskOutput {
        payload: json!({
            "m": m,
            "constants": to_value(&k.constants),
            "normalizer": k.normalizer,
            "trapezoid_mass": mass,
            "asymptotic_fit": fit.map(|f| to_value(&f)),
            "critical_coefficient": critical,
            "biorthonormality": to_value(&bio),
            "adjoint_polynomials": identities,
        }),
        thresholds: json!({ "fit_window": [window.0, window.1], "mass_radius_eps": 1e-22, "k_max": k_max }),
        artifacts: vec![("kernel.csv".into(), csv)],
    })
}

fn blayer(s: &Scenario) -> Result<TaskOutput> {
    let m = s.m();
    let p = bl_profile(m)?;
    let residual = (0..=2000).map(|i| p.residual(0.01 * i as f64).abs()).fold(0.0, f64::max);
    let initial: Vec<(&str, Box<dyn Fn(f64) -> f64>)> = if m == 1 {
        vec![
            ("one-minus-exp", Box::new(|x: f64| 1.0 - (-x).exp())),
            ("scaled-tanh", Box::new(|x: f64| (x / 8.0).tanh() / (60.0f64 / 8.0).tanh())),
        ]
    } else {
        vec![
            ("tanh-square", Box::new(|x: f64| (x * x / 25.0).tanh())),
            ("damped-linear", Box::new(|x: f64| 1.0 - (1.0 + x / 3.0) * (-x / 3.0).exp())),
        ]
    };
    let cfg = LimitConfig::default_for(m);
    let mut runs = Vec::new();
    let mut artifacts = Vec::new();
    for (name, h0) in initial {
        let t = solve_limit_equation(m, h0, &cfg)?;
        let monotone = t.lyapunov.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + t.lyapunov_floor);
        runs.push(json!({
            "initial": name,
            "lyapunov_monotone": monotone,
            "final_sup_distance": t.final_sup_distance,
            "steps": t.s.len(),
        }));
        let mut csv = String::from("s,lyapunov,distance\n");
        for ((s, l), d) in t.s.iter().zip(&t.lyapunov).zip(&t.distance) {
            csv.push_str(&format!("{s:.16e},{l:.16e},{d:.16e}\n"));
        }
        artifacts.push((format!("limit-{name}.csv"), csv));
    }
    let mut csv = String::from("xi,g0\n");
    for i in 0..=400 {
        let xi = 0.05 * i as f64;
        csv.push_str(&format!("{:.16e},{:.16e}\n", xi, p.g0(xi)));
    }
    artifacts.push(("profile.csv".into(), csv));
    Ok(TaskOutput {
        payload: json!({
            "m": m,
            "profile": to_value(&p),
            "gamma1": p.gamma1(),
            "gamma2": p.gamma2(),
            "max_residual": residual,
            "limit_runs": runs,
        }),
        thresholds: json!({ "residual_range": [0.0, 20.0], "monotonicity_slack": 1e-12, "xi_max": cfg.xi_max }),
        artifacts,
    })
}

fn criterion_options(s: &Scenario) -> Result<CriterionOptions> {
    let mut opts = if s.m() == 2 { CriterionOptions::with_shared_kernel()? } else { CriterionOptions::default() };
    if let Some(g) = s.gradient_model {
        opts.gradient_model = g;
    }
    if let Some(f) = s.m2_form {
        opts.m2_form = f;
    }
    if let Some(n) = s.radial_exponent {
        opts.radial_exponent = n;
    }
    Ok(opts)
}

fn criterion(s: &Scenario) -> Result<TaskOutput> {
    let phi = s.phi()?;
    let kappa = s.kappa()?;
    let kind = s.kind.unwrap_or(CriterionKind::Multiplicative);
    let ode = build_criterion(s.m(), kind, phi.clone(), kappa.clone(), &criterion_options(s)?)?;
    let t0 = s.tau0.unwrap_or(phi.tau_min.max(10.0));
    let t1 = s.tau_max.unwrap_or(1e12);
    let tol = s.tol.unwrap_or(1e-10);
    let l0 = s.ln_a0.unwrap_or_else(|| if s.iterations.is_some() { iteration_start(&kappa) } else { -1.0 });
    let th = s.thresholds.unwrap_or_default().resolve();
    let mut payload = json!({ "m": s.m(), "kind": kind, "phi": phi.name, "kappa": kappa.name });
    let mut artifacts = Vec::new();
    match integrate(&ode, l0, t0, t1, tol) {
        Ok(traj) => {
            let fin = traj.final_point();
            payload["verdict"] = to_value(&verdict(&traj, &th));
            payload["termination"] = to_value(&traj.termination);
            payload["final_tau"] = json!(fin.tau);
            payload["final_ln_a0"] = json!(fin.ln_a0);
            payload["accepted_steps"] = json!(traj.accepted_steps);
            payload["rejected_steps"] = json!(traj.rejected_steps);
            payload["form_switch_tau"] = json!(traj.form_switch_tau);
            if kappa.linear && s.m() == 1 {
                let cf = linear_closed_form(1, &phi, t0, fin.tau, None)?;
                let dl = fin.ln_a0 - l0;
                payload["closed_form_change"] = json!(cf);
                payload["integrated_change"] = json!(dl);
                payload["log_power_coefficient"] = json!(dl / (fin.tau.ln().powf(1.5) - t0.ln().powf(1.5)));
            }
            artifacts.push(("trajectory.csv".into(), traj.to_csv()));
        }
        // growth past a0 = 1 is itself the outcome the iteration certifies
        Err(e @ Error::Domain { .. }) if s.iterations.is_some() => payload["integration_error"] = json!(e.to_string()),
        Err(e) => return Err(e),
    }
    if let Some(n) = s.iterations {
        payload["iteration"] = match irregularity_iteration(&ode, n, t0, t1, l0) {
            Ok(o) => {
                let mut csv = String::from("iterate,tau,ln_a\n");
                for (i, it) in o.iterates.iter().enumerate() {
                    for (t, l) in it {
                        csv.push_str(&format!("{i},{t:.16e},{l:.16e}\n"));
                    }
                }
                artifacts.push(("iterates.csv".into(), csv));
                json!({
                    "certificate": o.certificate,
                    "iterations": o.iterations,
                    "trends": o.trends,
                    "ln_a0_initial": o.ln_a0_initial,
                    "tail": to_value(&o.tail),
                })
            }
            Err(e) => json!({ "certificate": Value::Null, "error": e.to_string() }),
        };
    }
    if s.osgood.unwrap_or(false) {
        payload["osgood_dini"] = to_value(&osgood_dini_check(&kappa));
    }
    if let Some(w) = s.gradient_window {
        let r = gradient_negligibility(&phi, &kappa, (w[0], w[1]), l0)?;
        let mut csv = String::from("tau,ratio\n");
        for (t, q) in &r.series {
            csv.push_str(&format!("{t:.16e},{q:.16e}\n"));
        }
        artifacts.push(("gradient-ratio.csv".into(), csv));
        payload["gradient_ratio"] = json!({ "max_ratio": r.max_ratio, "tau_at_max": r.tau_at_max, "window": w });
    }
    Ok(TaskOutput {
        payload,
        thresholds: json!({ "verdict": to_value(&th), "tol": tol, "tau0": t0, "tau_max": t1, "ln_a0_initial": l0 }),
        artifacts,
    })
}

fn trace_payload(t: &IntegralTrace) -> Value {
    json!({
        "label": t.label,
        "classification": t.classification,
        "vertex": t.vertex(),
        "fit": to_value(&t.fit),
        "envelope_exponent": t.envelope_exponent,
        "note": t.note,
        "final_partial": t.partial_values.last().map(|p| p.1),
    })
}

fn petrovskii(s: &Scenario) -> Result<TaskOutput> {
    let phi = s.phi()?;
    let t0 = s.tau0.unwrap_or(phi.tau_min.max(10.0));
    let t1 = s.tau_max.unwrap_or(1e12);
    let form = s.form.unwrap_or(if s.m() == 2 { IntegralForm::Biharmonic } else { IntegralForm::Integral });
    let trace = match form {
        IntegralForm::Integral => petrovskii_integral(&phi, s.radial_exponent.unwrap_or(1), t0, t1)?,
        IntegralForm::DiniOsgood => dini_osgood_form(&Density::from_phi(&phi), t0, t1)?,
        IntegralForm::Biharmonic => biharmonic_linear_criterion(&phi, &*BiharmonicContext::shared()?, t0, t1)?,
    };
    let mut payload = trace_payload(&trace);
    payload["phi"] = json!(phi.name);
    payload["form"] = to_value(&form);
    Ok(TaskOutput {
        payload,
        thresholds: json!({ "tail_rule": to_value(&vertexlab::numerics::tail::TailRule::default()), "tau0": t0, "tau_max": t1 }),
        artifacts: vec![("partial.csv".into(), trace.to_csv())],
    })
}

fn sim_config(s: &Scenario) -> Result<SimConfig> {
    let phi = s.phi()?;
    let span = s.tau_span.map(|t| (t[0], t[1])).unwrap_or((100.0, 120.0));
    let mut cfg = SimConfig::new(s.m(), phi, span);
    cfg.kappa = s.kappa()?;
    cfg.kind = s.kind.unwrap_or(CriterionKind::Multiplicative);
    if let Some(n) = s.grid_points {
        cfg.grid_points = n;
    }
    if let Some(d) = s.dtau {
        cfg.dtau = d;
    }
    cfg.initial = InitialData {
        shape: s.initial.unwrap_or(InitialShape::BoundaryLayer),
        amplitude: s.amplitude.unwrap_or(1.0),
    };
    if let Some(d) = s.diag_interval {
        cfg.diag_interval = d;
    }
    if let Some(k) = s.snapshots {
        cfg.snapshots = k;
    }
    cfg.validation = s.validation.unwrap_or(false);
    Ok(cfg)
}

fn sim_artifacts(tr: &PdeTrajectory) -> Vec<(String, String)> {
    let mut bd = String::from("tau,first,second\n");
    for b in &tr.boundary_derivs {
        bd.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", b.tau, b.first, b.second.unwrap_or(f64::NAN)));
    }
    let mut bl = String::from("tau,rho_opt,sup_deviation\n");
    for (r, d) in tr.rho_series.iter().zip(&tr.bl_deviation) {
        bl.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", r.0, r.1, d.1));
    }
    vec![
        ("series.csv".into(), tr.series_csv()),
        ("snapshots.csv".into(), tr.snapshots_csv()),
        ("boundary.csv".into(), bd),
        ("boundary-layer.csv".into(), bl),
    ]
}

fn sim_summary(cfg: &SimConfig, tr: &PdeTrajectory) -> Value {
    // Vertex values after a transient of three τ units.
    let t_post = cfg.tau_span.0 + 3.0;
    let post: Vec<f64> = tr.vertex_values.iter().filter(|p| p.0 >= t_post).map(|p| p.1).collect();
    let monotone = post.windows(2).all(|w| w[1] < w[0]);
    let min_ratio = post.first().map(|&v0| post.iter().copied().fold(f64::INFINITY, f64::min) / v0);
    json!({
        "m": cfg.m,
        "phi": cfg.phi.name,
        "kappa": cfg.kappa.name,
        "steps": tr.steps,
        "dtau": tr.dtau,
        "grid_points": cfg.grid_points,
        "final_a0": tr.a0_series.last().map(|p| p.1),
        "final_vertex": tr.vertex_values.last().map(|p| p.1),
        "final_bl_deviation": tr.bl_deviation.last().map(|p| p.1),
        "final_rho": tr.rho_series.last().map(|p| p.1),
        "max_asymmetry": tr.max_asymmetry,
        "vertex_monotone_after_transient": monotone,
        "vertex_min_ratio_after_transient": min_ratio,
        "vertex_final_ratio_after_transient": post.first().map(|&v0| post[post.len() - 1] / v0),
    })
}

fn refinement(cfg: &SimConfig, tr: &PdeTrajectory) -> Result<Value> {
    let mut fine = cfg.clone();
    fine.grid_points = 2 * cfg.grid_points - 1;
    fine.dtau = 0.5 * cfg.effective_dtau();
    let f = run(&fine)?;
    let (a, b) = (tr.a0_series.last().unwrap().1, f.a0_series.last().unwrap().1);
    Ok(json!({ "grid_points": fine.grid_points, "dtau": f.dtau, "a0_coarse": a, "a0_fine": b, "relative_change": (b / a - 1.0).abs() }))
}

fn simulate(s: &Scenario) -> Result<TaskOutput> {
    let cfg = sim_config(s)?;
    let tr = run(&cfg)?;
    let mut payload = sim_summary(&cfg, &tr);
    if s.refine.unwrap_or(false) {
        payload["refinement"] = refinement(&cfg, &tr)?;
    }
    Ok(TaskOutput {
        payload,
        thresholds: json!({ "transient": 3.0, "blowup_sup": 1e6, "tau_span": [cfg.tau_span.0, cfg.tau_span.1] }),
        artifacts: sim_artifacts(&tr),
    })
}

fn compare(s: &Scenario) -> Result<TaskOutput> {
    let cfg = sim_config(s)?;
    let tr = run(&cfg)?;
    let opts = criterion_options(s)?;
    let ode = build_criterion(cfg.m, cfg.kind, cfg.phi.clone(), cfg.kappa.clone(), &opts)?;
    let (t0, t1) = cfg.tau_span;
    let window = s.window.map(|w| (w[0], w[1])).unwrap_or((t0 + 5.0, (t0 + 15.0).min(t1)));
    let rep = compare_with_criterion(&tr, &ode, window);
    let mid = 0.5 * (window.0 + window.1);
    let snap = tr
        .snapshots
        .iter()
        .min_by(|a, b| (a.tau - mid).abs().total_cmp(&(b.tau - mid).abs()))
        .ok_or_else(|| Error::Precondition("no snapshots".into()))?;
    let blp = bl_profile(cfg.m)?;
    let bl = extract_boundary_layer(&snap.w, cfg.phi.phi(snap.tau), &blp)?;
    let a0 = tr.a0_at(snap.tau);
    let mut csv = String::from("tau,sim_slope,rhs\n");
    for x in &rep.samples {
        csv.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", x.0, x.1, x.2));
    }
    let mut artifacts = sim_artifacts(&tr);
    artifacts.push(("compare.csv".into(), csv));
    let mut payload = sim_summary(&cfg, &tr);
    payload["comparison"] = json!({
        "window": [window.0, window.1],
        "valid": rep.valid,
        "note": rep.note,
        "max_relative": rep.max_relative,
        "mean_relative": rep.mean_relative,
        "mean_ratio": rep.mean_ratio,
        "samples": rep.samples.len(),
    });
    payload["boundary_layer"] = json!({
        "tau": snap.tau,
        "rho_opt": bl.rho_opt,
        "sup_deviation": bl.sup_deviation,
        "points": bl.points,
        "rho_over_a0": a0.map(|a| bl.rho_opt / a),
    });
    if s.refine.unwrap_or(false) {
        payload["refinement"] = refinement(&cfg, &tr)?;
    }
    Ok(TaskOutput {
        payload,
        thresholds: json!({ "window": [window.0, window.1], "bl_xi_max": 10.0, "bl_min_points": 20, "transient": 3.0 }),
        artifacts,
    })
}

fn sweep(s: &Scenario) -> Result<TaskOutput> {
    let sw = s.sweep.as_ref().expect("validated sweep");
    let mut entries = Vec::new();
    let mut artifacts = Vec::new();
    let mut thresholds = Value::Null;
    for (i, &v) in sw.values.iter().enumerate() {
        let point = s.sweep_point(v, i);
        match execute(&point) {
            Ok(out) => {
                let verdict = out.payload.pointer("/verdict/verdict").or_else(|| out.payload.get("vertex")).cloned();
                entries.push(json!({ "value": v, "status": "ok", "verdict": verdict, "payload": out.payload }));
                thresholds = out.thresholds;
                for (name, body) in out.artifacts {
                    artifacts.push((format!("{i}-{name}"), body));
                }
            }
            Err(e) => entries.push(json!({ "value": v, "status": "error", "error": e.to_string() })),
        }
    }
    let failed = entries.iter().filter(|e| e["status"] == "error").count();
    let verdicts: Vec<Value> = entries.iter().map(|e| e.get("verdict").cloned().unwrap_or(Value::Null)).collect();
    let payload = json!({ "task": sw.task, "parameter": sw.parameter, "values": sw.values, "verdicts": verdicts, "entries": entries });
    if failed > 0 {
        return Err(Error::Precondition(format!("{failed} of {} sweep points failed", sw.values.len())));
    }
    Ok(TaskOutput { payload, thresholds, artifacts })
}
