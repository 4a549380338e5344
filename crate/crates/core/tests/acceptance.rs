//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::f64::consts::PI;
use std::time::Instant;

use vertexlab::blayer::{bl_profile, solve_limit_equation, LimitConfig};
use vertexlab::criterion::*;
use vertexlab::funcs::{biharmonic_critical_coefficient, builtin_catalog, Kappa, SlowGrowthFn};
use vertexlab::pdesim::{compare_with_criterion, extract_boundary_layer, run, InitialShape, SimConfig};
use vertexlab::petrovskii::*;
use vertexlab::spectral::*;

const T0: f64 = 10.0;
const T1: f64 = 1e12;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn ode(m: u32, kind: CriterionKind, phi: SlowGrowthFn, kappa: Kappa) -> CriterionODE {
    build_criterion(m, kind, phi, kappa, &CriterionOptions::default()).unwrap()
}

fn ode_verdict(phi: &SlowGrowthFn, kappa: Kappa) -> Verdict {
    let o = ode(1, CriterionKind::Multiplicative, phi.clone(), kappa);
    verdict(&integrate(&o, -1.0, phi.tau_min.max(T0), T1, 1e-10).unwrap(), &VerdictThresholds::default()).verdict
}

fn c1_dichotomy() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (phi, want) in [
        (SlowGrowthFn::petrovskii_critical(), (Verdict::Regular, VertexClass::Regular)),
        (SlowGrowthFn::petrovskii_eps(0.05), (Verdict::Irregular, VertexClass::Irregular)),
        (SlowGrowthFn::petrovskii_eps(0.1), (Verdict::Irregular, VertexClass::Irregular)),
    ] {
        let v = ode_verdict(&phi, Kappa::zero());
        let c = petrovskii_integral(&phi, 1, T0, T1).unwrap().vertex();
        ok &= (v, c) == want;
        parts.push(format!("{}: {v:?}/{c:?}", phi.name));
    }
    outcome(ok, parts.join(", "))
}

fn c2_decay_law() -> Outcome {
    let o = ode(1, CriterionKind::Multiplicative, SlowGrowthFn::petrovskii_critical(), Kappa::zero());
    let t = integrate(&o, -1.0, T0, 1e6, 1e-10).unwrap();
    let dl = t.final_point().ln_a0 - t.ln_a0_initial;
    let coef = dl / (1e6f64.ln().powf(1.5) - T0.ln().powf(1.5));
    let exact = -1.0 / (3.0 * PI.sqrt());
    let rel = (coef / exact - 1.0).abs();
    outcome(rel < 0.02, format!("coefficient {coef:.8} vs {exact:.8}, relative {rel:.2e} (tol 2e-2)"))
}

fn c3_form_equivalence() -> Outcome {
    let phis = builtin_catalog().phis;
    let mut bad = Vec::new();
    for phi in &phis {
        let a = petrovskii_integral(phi, 1, T0, T1).unwrap().classification;
        let b = dini_osgood_form(&Density::from_phi(phi), T0, T1).unwrap().classification;
        if a != b {
            bad.push(format!("{}: {a:?} vs {b:?}", phi.name));
        }
    }
    outcome(phis.len() >= 6 && bad.is_empty(), format!("{} catalog entries, disagreements {:?}", phis.len(), bad))
}

fn c4_negative_kappa() -> Outcome {
    let k = Kappa::inverse_log(true, 1.0);
    let mut bad = Vec::new();
    for phi in builtin_catalog().phis {
        let v = ode_verdict(&phi, k.clone());
        if v != Verdict::Regular {
            bad.push(format!("{}: {v:?}", phi.name));
        }
    }
    let wide = ode_verdict(&SlowGrowthFn::log_power(2.0), Kappa::zero());
    let od = osgood_dini_check(&k);
    outcome(
        bad.is_empty() && wide == Verdict::Irregular && od.diverges,
        format!("non-regular {bad:?}; (ln tau)^2 with zero kappa {wide:?}; Osgood-Dini diverges {}", od.diverges),
    )
}

fn c5_critical_flip() -> Outcome {
    let phi = SlowGrowthFn::petrovskii_critical();
    let mut flipped = Vec::new();
    for c in [1.0, 10.0, 100.0] {
        let k = Kappa::critical(c);
        let l0 = iteration_start(&k);
        let o = ode(1, CriterionKind::Multiplicative, phi.clone(), k);
        if irregularity_iteration(&o, 8, T0, T1, l0).is_ok() {
            flipped.push(c);
        }
    }
    let base = ode_verdict(&phi, Kappa::zero());
    outcome(
        !flipped.is_empty() && base == Verdict::Regular,
        format!("certificates for c in {flipped:?}; zero kappa {base:?}"),
    )
}

fn c6_gradient() -> Outcome {
    let phi = SlowGrowthFn::petrovskii_critical();
    let l0 = (1e-3f64).ln();
    let th = VerdictThresholds::default();
    let base = verdict(
        &integrate(&ode(1, CriterionKind::Multiplicative, phi.clone(), Kappa::zero()), l0, 1e2, T1, 1e-10).unwrap(),
        &th,
    )
    .verdict;
    let mut ok = true;
    let mut parts = Vec::new();
    for k in [Kappa::constant(1.0, 1.0), Kappa::critical(1.0)] {
        let r = gradient_negligibility(&phi, &k, (1e2, 1e6), l0).unwrap();
        let v = verdict(&integrate(&ode(1, CriterionKind::Gradient, phi.clone(), k.clone()), l0, 1e2, T1, 1e-10).unwrap(), &th)
            .verdict;
        ok &= r.max_ratio < 1e-3 && v == base;
        parts.push(format!("{}: max ratio {:.3e}, verdict {v:?}", k.name, r.max_ratio));
    }
    outcome(ok, format!("{} (zero kappa {base:?})", parts.join("; ")))
}

fn c7_spectral() -> Outcome {
    let mut ok = true;
    for m in [1, 2] {
        for k in 0..=8 {
            ok &= eigen_identity_holds(&adjoint_polynomial(m, k).unwrap());
        }
    }
    let table = [
        ("1", 1u32),
        ("y", 1),
        ("y^2", 2),
        ("y^3", 6),
        ("(y^4 + 24)", 24),
        ("(y^5 + 120 y)", 120),
        ("(y^6 + 360 y^2)", 720),
    ];
    let mut table_ok = true;
    for (k, (body, norm)) in table.iter().enumerate() {
        let p = adjoint_polynomial(2, k).unwrap();
        table_ok &= p.render().starts_with(body) && p.norm_square == num_bigint::BigUint::from(*norm);
    }
    let mut dev = 0.0f64;
    for m in [1, 2] {
        let kern = build_kernel(m, QuadSettings::default()).unwrap();
        dev = dev.max(biorthonormality_matrix(&kern, 6).unwrap().max_deviation);
    }
    outcome(
        ok && table_ok && dev < 1e-6,
        format!("exact eigen-identities {ok}, m=2 table {table_ok}, bi-orthonormality deviation {dev:.2e} (tol 1e-6)"),
    )
}

fn c8_kernel() -> Outcome {
    let k2 = build_kernel(2, QuadSettings::default()).unwrap();
    let fit = kernel_asymptotic_fit(&k2, (5.0, 15.0)).unwrap();
    let d0 = 3.0 * 2f64.powf(-11.0 / 3.0);
    let b0 = 3f64.powf(1.5) * 2f64.powf(-11.0 / 3.0);
    let (ed, eb) = ((fit.d_fit / d0 - 1.0).abs(), (fit.b_fit / b0 - 1.0).abs());
    let mut mass_err = 0.0f64;
    for m in [1, 2] {
        let k = build_kernel(m, QuadSettings::default()).unwrap();
        let y_max = integration_radius(&k.constants, 1e-22);
        let n = 8000;
        let h = 2.0 * y_max / n as f64;
        let mass: f64 = (0..=n).map(|i| k.value(-y_max + i as f64 * h)).sum::<f64>() * h;
        mass_err = mass_err.max((mass - 1.0).abs());
    }
    let k1 = build_kernel(1, QuadSettings::default()).unwrap();
    let gauss = (0..=400)
        .map(|i| {
            let y = -20.0 + 0.1 * i as f64;
            (k1.value(y) - (-y * y / 4.0).exp() / (2.0 * PI.sqrt())).abs()
        })
        .fold(0.0, f64::max);
    outcome(
        ed < 0.05 && eb < 0.05 && mass_err < 1e-10 && gauss < 1e-12,
        format!("d, b relative errors {ed:.2e}, {eb:.2e} (tol 5e-2); mass error {mass_err:.2e}; Gaussian error {gauss:.2e}"),
    )
}

fn c9_boundary_layer() -> Outcome {
    let mut residual = 0.0f64;
    for m in [1, 2] {
        let p = bl_profile(m).unwrap();
        residual = residual.max((0..=2000).map(|i| p.residual(0.01 * i as f64).abs()).fold(0.0, f64::max));
    }
    let (p1, p2) = (bl_profile(1).unwrap(), bl_profile(2).unwrap());
    let g_err = [
        (p1.gamma1() - 0.5).abs(),
        (p2.gamma1() - 2f64.powf(-4.0 / 3.0)).abs(),
        (p2.gamma2().unwrap() + 0.25).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let mut limit_ok = true;
    let profiles: [(u32, Vec<Box<dyn Fn(f64) -> f64>>); 2] = [
        (1, vec![Box::new(|x: f64| 1.0 - (-x).exp()), Box::new(|x: f64| (x / 8.0).tanh() / (60.0f64 / 8.0).tanh())]),
        (2, vec![Box::new(|x: f64| (x * x / 25.0).tanh()), Box::new(|x: f64| 1.0 - (1.0 + x / 3.0) * (-x / 3.0).exp())]),
    ];
    for (m, hs) in profiles {
        let cfg = LimitConfig::default_for(m);
        for h0 in hs {
            let t = solve_limit_equation(m, h0, &cfg).unwrap();
            let mono = t.lyapunov.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + t.lyapunov_floor);
            limit_ok &= mono && t.final_sup_distance < 1e-4;
        }
    }
    outcome(
        residual < 1e-10 && g_err < 1e-12 && limit_ok,
        format!("residual {residual:.2e}; gamma error {g_err:.2e}; limit solver monotone and convergent {limit_ok}"),
    )
}

fn c10_biharmonic_constant() -> Outcome {
    let d0 = kernel_constants(2).d0;
    let e1 = (d0.powf(-0.75) - 3f64.powf(-0.75) * 2f64.powf(2.75)).abs();
    let e1b = (d0.powf(-0.75) - biharmonic_critical_coefficient()).abs();
    let ctx = BiharmonicContext::shared().unwrap();
    let mut e2 = 0.0f64;
    for c in [2.5, biharmonic_critical_coefficient(), 3.5] {
        let t = biharmonic_linear_criterion(&SlowGrowthFn::biharmonic_scaled(c), &ctx, T0, T1).unwrap();
        e2 = e2.max((t.envelope_exponent.unwrap() - d0 * c.powf(4.0 / 3.0)).abs());
    }
    outcome(
        e1 < 1e-12 && e1b < 1e-12 && e2 < 1e-10,
        format!("critical constant error {e1:.2e}; envelope exponent error {e2:.2e}"),
    )
}

const TAU_MATCH: f64 = 1e4;

fn matching_config(grid: usize, dtau: f64) -> SimConfig {
    let mut cfg = SimConfig::new(1, SlowGrowthFn::petrovskii_critical(), (TAU_MATCH, TAU_MATCH + 20.0));
    cfg.grid_points = grid;
    cfg.dtau = dtau;
    cfg.initial.shape = InitialShape::Plateau;
    cfg
}

fn c11_matching() -> Outcome {
    let start = Instant::now();
    let phi = SlowGrowthFn::petrovskii_critical();
    let tr = run(&matching_config(801, 2.5e-3)).unwrap();
    let o = ode(1, CriterionKind::Multiplicative, phi.clone(), Kappa::zero());
    let rep = compare_with_criterion(&tr, &o, (TAU_MATCH + 5.0, TAU_MATCH + 15.0));
    let blp = bl_profile(1).unwrap();
    let snap = tr.snapshots.iter().min_by(|a, b| {
        (a.tau - TAU_MATCH - 10.0).abs().partial_cmp(&(b.tau - TAU_MATCH - 10.0).abs()).unwrap()
    });
    let snap = snap.unwrap();
    let fit = extract_boundary_layer(&snap.w, phi.phi(snap.tau), &blp).unwrap();
    let ratio = fit.rho_opt / tr.a0_at(snap.tau).unwrap();
    // Diagnostic: the same slopes against the flux through both walls.
    let two_sided = rep.samples.iter().map(|s| ((s.1 - 2.0 * s.2) / (2.0 * s.2)).abs()).sum::<f64>()
        / rep.samples.len() as f64;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        rep.valid && rep.mean_relative < 0.2 && fit.sup_deviation < 0.05 && (0.8..=1.25).contains(&ratio) && secs <= 300.0,
        format!(
            "mean discrepancy {:.3} (tol 0.2), mean slope ratio {:.3}; BL deviation {:.3e} (tol 0.05); rho/a0 {:.4}; \
             runtime {secs:.1}s; against twice the rhs the mean discrepancy is {two_sided:.3}",
            rep.mean_relative, rep.mean_ratio, fit.sup_deviation, ratio
        ),
    )
}

const TAU_VERTEX: f64 = 100.0;

fn vertex_config(phi: SlowGrowthFn, grid: usize, dtau: f64) -> SimConfig {
    let mut cfg = SimConfig::new(1, phi, (TAU_VERTEX, TAU_VERTEX + 100.0));
    cfg.grid_points = grid;
    cfg.dtau = dtau;
    cfg.diag_interval = 0.25;
    cfg.initial.shape = InitialShape::Plateau;
    cfg
}

fn c12_vertex() -> Outcome {
    let post = |v: &[(f64, f64)]| v.iter().position(|p| p.0 >= TAU_VERTEX + 3.0).unwrap();
    let crit = run(&vertex_config(SlowGrowthFn::petrovskii_critical(), 801, 2.5e-3)).unwrap();
    let v = &crit.vertex_values;
    let i = post(v);
    let mono = v[i..].windows(2).all(|w| w[1].1 < w[0].1);
    let drop = v.last().unwrap().1 / v[i].1;
    let wide = run(&vertex_config(SlowGrowthFn::petrovskii_eps(0.1), 801, 2.5e-3)).unwrap();
    let u = &wide.vertex_values;
    let j = post(u);
    let floor = u[j..].iter().map(|p| p.1).fold(f64::INFINITY, f64::min) / u[j].1;
    outcome(
        mono && drop < 1.0 && floor > 0.5,
        format!("critical: monotone {mono}, w(0) ratio over window {drop:.4}; eps 0.1: minimum ratio {floor:.4} (tol 0.5)"),
    )
}

fn c13_determinism() -> Outcome {
    let a = run(&matching_config(801, 2.5e-3)).unwrap();
    let b = run(&matching_config(801, 2.5e-3)).unwrap();
    let same = a.series_csv() == b.series_csv() && a.snapshots_csv() == b.snapshots_csv();
    let fine = run(&matching_config(1601, 1.25e-3)).unwrap();
    let end = |t: &vertexlab::pdesim::PdeTrajectory| t.a0_series.last().unwrap().1;
    let mut worst = (end(&fine) / end(&a) - 1.0).abs();
    for phi in [SlowGrowthFn::petrovskii_critical(), SlowGrowthFn::petrovskii_eps(0.1)] {
        let c = run(&vertex_config(phi.clone(), 801, 2.5e-3)).unwrap();
        let f = run(&vertex_config(phi, 1601, 1.25e-3)).unwrap();
        worst = worst.max((end(&f) / end(&c) - 1.0).abs());
    }
    outcome(same && worst < 0.01, format!("byte-identical {same}; refinement change in a0(tau1) {worst:.2e} (tol 1e-2)"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("dichotomy for the heat equation", c1_dichotomy),
        ("closed-form decay law", c2_decay_law),
        ("criterion-form equivalence", c3_form_equivalence),
        ("negative-kappa universality", c4_negative_kappa),
        ("critical-nonlinearity flip", c5_critical_flip),
        ("gradient-nonlinearity negligibility", c6_gradient),
        ("spectral identities", c7_spectral),
        ("kernel asymptotics", c8_kernel),
        ("boundary-layer profiles", c9_boundary_layer),
        ("bi-harmonic critical constant", c10_biharmonic_constant),
        ("PDE-vs-ODE matching", c11_matching),
        ("direct vertex behaviour", c12_vertex),
        ("determinism and convergence", c13_determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {tag} {name} ({:.1}s): {}", i + 1, t.elapsed().as_secs_f64(), o.detail);
        if !o.pass {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 13 criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
