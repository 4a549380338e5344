use std::f64::consts::PI;

use vertexlab::criterion::*;
use vertexlab::funcs::{biharmonic_critical_coefficient, Kappa, SlowGrowthFn};
use vertexlab::spectral::kernel_constants;

fn ode(phi: SlowGrowthFn, kappa: Kappa) -> CriterionODE {
    build_criterion(1, CriterionKind::Multiplicative, phi, kappa, &CriterionOptions::default()).unwrap()
}

fn closed_form_phi_star(tau0: f64, tau: f64) -> f64 {
    -(tau.ln().powf(1.5) - tau0.ln().powf(1.5)) / (3.0 * PI.sqrt())
}

#[test]
fn linear_rhs_for_critical_parabola() {
    let o = ode(SlowGrowthFn::petrovskii_critical(), Kappa::zero());
    for tau in [10.0f64, 1e3, 1e8] {
        let exact = -(1.0 / (4.0 * PI.sqrt())) * 2.0 * tau.ln().sqrt() / tau;
        assert!((o.rhs(tau, -3.0) - exact).abs() < 1e-14 * exact.abs());
        assert_eq!(o.rhs(tau, -3.0), o.rhs(tau, -300.0));
    }
}

#[test]
fn nonlinear_rhs_adds_kappa() {
    let o = ode(SlowGrowthFn::petrovskii_critical(), Kappa::inverse_log(true, 1.0));
    let (lin, non) = o.rhs_parts(100.0, -5.0);
    assert!((non + 1.0 / 5.0).abs() < 1e-14);
    assert!((o.rhs(100.0, -5.0) - lin - non).abs() < 1e-16);
}

#[test]
fn decay_law_three_halves() {
    let o = ode(SlowGrowthFn::petrovskii_critical(), Kappa::zero());
    let t = integrate(&o, -1.0, 10.0, 1e6, 1e-10).unwrap();
    let got = t.final_point().ln_a0 + 1.0;
    let exact = closed_form_phi_star(10.0, 1e6);
    assert!((got / exact - 1.0).abs() < 0.02);
    // Scaling consistency against the quadrature form.
    for p in t.points.iter().step_by(17) {
        let q = linear_closed_form(1, &o.phi, 10.0, p.tau, None).unwrap();
        assert!(((p.ln_a0 + 1.0) - q).abs() <= 1e-6 * q.abs().max(1e-3), "tau {}", p.tau);
    }
}

#[test]
fn closed_form_at_e100() {
    let phi = SlowGrowthFn::petrovskii_critical();
    let v = linear_closed_form(1, &phi, 10.0, 100f64.exp(), None).unwrap();
    let exact = closed_form_phi_star(10.0, 100f64.exp());
    assert!((v / exact - 1.0).abs() < 1e-10, "{v} vs {exact}");
}

#[test]
fn wide_parabola_integral_converges() {
    let phi = SlowGrowthFn::log_power(2.0);
    let a = linear_closed_form(1, &phi, 10.0, 1e6, None).unwrap();
    let b = linear_closed_form(1, &phi, 10.0, 1e12, None).unwrap();
    assert!((a - b).abs() < 1e-12 && a < 0.0);
}

#[test]
fn dichotomy_verdicts() {
    let th = VerdictThresholds::default();
    let reg = integrate(&ode(SlowGrowthFn::petrovskii_critical(), Kappa::zero()), -1.0, 10.0, 1e12, 1e-10).unwrap();
    assert_eq!(verdict(&reg, &th).verdict, Verdict::Regular);
    for eps in [0.05, 0.1] {
        let t = integrate(&ode(SlowGrowthFn::petrovskii_eps(eps), Kappa::zero()), -1.0, 10.0, 1e12, 1e-10).unwrap();
        let v = verdict(&t, &th);
        assert_eq!(v.verdict, Verdict::Irregular, "eps {eps}: {v:?}");
    }
    let short = integrate(&ode(SlowGrowthFn::petrovskii_critical(), Kappa::zero()), -1.0, 10.0, 100.0, 1e-10).unwrap();
    assert_eq!(verdict(&short, &th).verdict, Verdict::Inconclusive);
}

#[test]
fn eps_limit_is_finite() {
    let t = integrate(&ode(SlowGrowthFn::petrovskii_eps(0.1), Kappa::zero()), -1.0, 10.0, 1e12, 1e-10).unwrap();
    let b = t.final_point().ln_a0;
    // Remaining tail beyond the horizon, by quadrature out to τ = e^{400}.
    let rest = linear_closed_form(1, &SlowGrowthFn::petrovskii_eps(0.1), 1e12, 400f64.exp(), None).unwrap();
    let further = linear_closed_form(1, &SlowGrowthFn::petrovskii_eps(0.1), 1e12, 700f64.exp(), None).unwrap();
    assert!(rest > -0.05 && (rest - further).abs() < 1e-12);
    assert!(b.is_finite() && b > -10.0);
}

#[test]
fn negative_kappa_alone_follows_square_root_law() {
    // dℓ/dτ = −1/|ℓ| ⇒ ℓ² = ℓ₀² + 2(τ − τ₀).
    let mut o = ode(SlowGrowthFn::log_power(2.0), Kappa::inverse_log(true, 1.0));
    o.phi = SlowGrowthFn::constant(1e3);
    let t = integrate(&o, -2.0, 10.0, 1e4, 1e-10).unwrap();
    for p in &t.points {
        let exact = -(4.0 + 2.0 * (p.tau - 10.0)).sqrt();
        assert!((p.ln_a0 - exact).abs() < 1e-6 * exact.abs(), "tau {}: {} vs {exact}", p.tau, p.ln_a0);
    }
}

#[test]
fn negative_kappa_regularizes_every_catalog_boundary() {
    let th = VerdictThresholds::default();
    for phi in vertexlab::funcs::builtin_catalog().phis {
        let o = ode(phi.clone(), Kappa::inverse_log(true, 1.0));
        let t = integrate(&o, -1.0, phi.tau_min.max(10.0), 1e12, 1e-10).unwrap();
        assert_eq!(verdict(&t, &th).verdict, Verdict::Regular, "{}", phi.name);
    }
}

#[test]
fn comparison_monotonicity() {
    let o = ode(SlowGrowthFn::petrovskii_critical(), Kappa::inverse_log(true, 1.0));
    let a = integrate(&o, -3.0, 10.0, 1e8, 1e-10).unwrap();
    let b = integrate(&o, -2.0, 10.0, 1e8, 1e-10).unwrap();
    let floor = vertexlab::criterion::LN_A0_FLOOR;
    for (p, q) in a.points.iter().zip(&b.points).filter(|(p, q)| p.tau == q.tau && p.ln_a0 > floor) {
        assert!(p.ln_a0 < q.ln_a0, "{p:?} {q:?}");
    }
    // The lower trajectory reaches the floor first.
    let stop = |t: &Trajectory| match t.termination {
        Termination::Underflow { tau } => tau,
        Termination::Completed => f64::INFINITY,
    };
    assert!(stop(&a) < stop(&b));
}

#[test]
fn verdict_stability_under_tolerance_and_horizon() {
    for phi in [SlowGrowthFn::petrovskii_critical(), SlowGrowthFn::petrovskii_eps(0.1)] {
        let o = ode(phi, Kappa::zero());
        let th = VerdictThresholds::default();
        let v = |tol, tmax| verdict(&integrate(&o, -1.0, 10.0, tmax, tol).unwrap(), &th).verdict;
        let base = v(1e-10, 5e11);
        assert_eq!(base, v(1e-8, 5e11));
        assert_eq!(base, v(1e-10, 1e12));
    }
}

#[test]
fn critical_kappa_iteration_scan() {
    let phi = SlowGrowthFn::petrovskii_critical();
    let mut flipped = 0;
    for c in [1.0, 10.0, 100.0] {
        let k = Kappa::critical(c);
        let l0 = iteration_start(&k);
        if irregularity_iteration(&ode(phi.clone(), k), 8, 10.0, 1e12, l0).is_ok() {
            flipped += 1;
        }
    }
    assert!(flipped >= 1);
}

#[test]
fn identity_kappa_has_no_certificate_from_small_amplitude() {
    let k = Kappa::family("identity", false, 1.0, 1.0, 0.0, 0.0, 1.0, (-1f64).exp());
    let o = ode(SlowGrowthFn::petrovskii_critical(), k);
    let r = irregularity_iteration(&o, 6, 10.0, 1e12, (1e-6f64).ln());
    assert!(matches!(r, Err(vertexlab::Error::NoConvergence { .. })), "{r:?}");
}

#[test]
fn iteration_rejects_negative_kappa() {
    let o = ode(SlowGrowthFn::petrovskii_critical(), Kappa::inverse_log(true, 1.0));
    assert!(matches!(irregularity_iteration(&o, 3, 10.0, 1e6, -1.0), Err(vertexlab::Error::Precondition(_))));
}

#[test]
fn osgood_dini_examples() {
    assert!(osgood_dini_check(&Kappa::inverse_log(true, 1.0)).diverges);
    assert!(osgood_dini_check(&Kappa::neg_power(1.0)).diverges);
    assert!(osgood_dini_check(&Kappa::constant(-1.0, 1.0)).diverges);
}

#[test]
fn gradient_ratio_decays() {
    let phi = SlowGrowthFn::petrovskii_critical();
    let l0 = (1e-3f64).ln();
    for k in [Kappa::constant(1.0, 1.0), Kappa::critical(1.0)] {
        let r = gradient_negligibility(&phi, &k, (1e2, 1e6), l0).unwrap();
        assert!(r.max_ratio < 1e-3, "{}: {}", k.name, r.max_ratio);
        let last = r.series.last().unwrap().1;
        assert!(last < r.series[0].1);
    }
    // Frozen â₀ = 1: the bound-form ratio is φ²/2 and grows.
    let opts = CriterionOptions { gradient_model: GradientModel::Bound, ..Default::default() };
    let o = build_criterion(1, CriterionKind::Gradient, phi.clone(), Kappa::constant(1.0, 1.0), &opts).unwrap();
    for tau in [1e2f64, 1e6] {
        let (lin, non) = o.rhs_parts(tau, 0.0);
        let p = phi.phi(tau);
        assert!((non / lin.abs() - p * p / 2.0).abs() < 1e-12 * p * p);
    }
}

#[test]
fn gradient_models_share_the_linear_verdict() {
    let th = VerdictThresholds::default();
    let phi = SlowGrowthFn::petrovskii_critical();
    let base = verdict(&integrate(&ode(phi.clone(), Kappa::zero()), (1e-3f64).ln(), 1e2, 1e12, 1e-10).unwrap(), &th);
    for model in [GradientModel::Equality, GradientModel::Bound] {
        let opts = CriterionOptions { gradient_model: model, ..Default::default() };
        let o = build_criterion(1, CriterionKind::Gradient, phi.clone(), Kappa::constant(1.0, 1.0), &opts).unwrap();
        let v = verdict(&integrate(&o, (1e-3f64).ln(), 1e2, 1e12, 1e-10).unwrap(), &th);
        assert_eq!(v.verdict, base.verdict);
    }
}

#[test]
fn biharmonic_exact_and_practical_forms() {
    let opts = CriterionOptions::with_shared_kernel().unwrap();
    let phi = SlowGrowthFn::biharmonic_critical();
    let o = build_criterion(2, CriterionKind::Multiplicative, phi.clone(), Kappa::zero(), &opts).unwrap();
    let c = o.m2_constants.unwrap();
    let k = kernel_constants(2);
    // Practical form with the WKBJ rates.
    let po = build_criterion(
        2,
        CriterionKind::Multiplicative,
        phi.clone(),
        Kappa::zero(),
        &CriterionOptions { m2_form: M2Form::Practical, ..opts.clone() },
    )
    .unwrap();
    let tau = 1e9;
    let p = phi.phi(tau);
    let expect = p.powf(2.0 / 3.0) * c.c3 * (k.b0 * p.powf(4.0 / 3.0) + c.c4).cos() * (-k.d0 * p.powf(4.0 / 3.0)).exp();
    assert!((po.rhs(tau, -1.0) - expect).abs() <= 1e-14 * expect.abs().max(1e-300));
    // The exact form approaches the practical one where both are used.
    let y = 18.0;
    let t = (y / biharmonic_critical_coefficient()).powf(4.0 / 3.0).exp();
    let ex = o.rhs(t, -1.0);
    let env = c.log_envelope(y).exp();
    assert!((ex - c.practical(y)).abs() < 0.15 * env, "{ex} vs {}", c.practical(y));
}

#[test]
fn biharmonic_critical_envelope_is_inverse_tau() {
    let k = kernel_constants(2);
    let c = biharmonic_critical_coefficient();
    assert!((k.d0.powf(-0.75) - c).abs() < 1e-12);
    assert!((k.d0 * c.powf(4.0 / 3.0) - 1.0).abs() < 1e-12);
}

#[test]
fn practical_sign_pattern_follows_phase() {
    let opts = CriterionOptions { m2_form: M2Form::Practical, ..CriterionOptions::with_shared_kernel().unwrap() };
    let phi = SlowGrowthFn::biharmonic_scaled(3.5);
    let o = build_criterion(2, CriterionKind::Multiplicative, phi.clone(), Kappa::zero(), &opts).unwrap();
    let c = o.m2_constants.unwrap();
    let n = 200_000;
    let (u0, u1) = (10f64.ln(), 1e12f64.ln());
    let mut crossings = 0;
    let mut prev = o.rhs(10.0, -1.0);
    for i in 1..=n {
        let t = (u0 + (u1 - u0) * i as f64 / n as f64).exp();
        let v = o.rhs(t, -1.0);
        if v * prev < 0.0 {
            crossings += 1;
        }
        prev = v;
    }
    let phases = (c.phase(phi.phi(1e12)) - c.phase(phi.phi(10.0))) / PI;
    assert!((crossings as f64 - phases).abs() <= (0.01 * phases).max(1.0), "{crossings} vs {phases}");
}

#[test]
fn biharmonic_gradient_system_builds() {
    let opts = CriterionOptions::with_shared_kernel().unwrap();
    let o = build_criterion(2, CriterionKind::Gradient, SlowGrowthFn::biharmonic_critical(), Kappa::constant(1.0, 1.0), &opts)
        .unwrap();
    let (_, n) = o.rhs_parts(1e4, -1.0);
    assert!(n.is_finite() && n != 0.0);
    let t = integrate(&o, -1.0, 10.0, 1e8, 1e-9).unwrap();
    assert!(t.conditional_on_genericity && t.form_switch_tau.is_some());
}
