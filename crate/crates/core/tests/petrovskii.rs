use vertexlab::criterion::*;
use vertexlab::funcs::{biharmonic_critical_coefficient, builtin_catalog, Kappa, SlowGrowthFn};
use vertexlab::petrovskii::*;
use vertexlab::spectral::kernel_constants;

const T0: f64 = 10.0;
const T1: f64 = 1e12;

#[test]
fn dichotomy_classifications() {
    let t = petrovskii_integral(&SlowGrowthFn::petrovskii_critical(), 1, T0, T1).unwrap();
    assert_eq!(t.classification, Classification::Divergent);
    assert_eq!(t.vertex(), VertexClass::Regular);
    let q = t.fit.unwrap().q.unwrap();
    assert!((q - 0.5).abs() < 0.05, "refinement exponent {q}");
    for eps in [0.05, 0.1] {
        let t = petrovskii_integral(&SlowGrowthFn::petrovskii_eps(eps), 1, T0, T1).unwrap();
        assert_eq!(t.classification, Classification::Convergent, "eps {eps}");
        // Oracle: g ~ √ln τ · τ^{−(1+ε)²}.
        let p = t.fit.unwrap().p;
        assert!((p - (1.0 + eps) * (1.0 + eps)).abs() < 0.03, "p {p}");
    }
    let t = petrovskii_integral(&SlowGrowthFn::log_power(0.25), 1, T0, T1).unwrap();
    assert_eq!(t.classification, Classification::Divergent);
}

#[test]
fn partial_values_nondecreasing() {
    for phi in builtin_catalog().phis {
        let t = petrovskii_integral(&phi, 1, T0, T1).unwrap();
        assert!(t.partial_values.windows(2).all(|w| w[1].1 >= w[0].1), "{}", phi.name);
    }
}

#[test]
fn closed_form_partials_for_critical_parabola() {
    // ∫ 2√ln τ /τ dτ = (4/3)(ln τ)^{3/2}.
    let t = petrovskii_integral(&SlowGrowthFn::petrovskii_critical(), 1, T0, 1e6).unwrap();
    let (tau, v) = *t.partial_values.last().unwrap();
    let exact = 4.0 / 3.0 * (tau.ln().powf(1.5) - T0.ln().powf(1.5));
    assert!((v / exact - 1.0).abs() < 1e-10);
}

#[test]
fn dini_osgood_examples() {
    let t = dini_osgood_form(&Density::inverse_log(), 10.0, 1e12).unwrap();
    assert_eq!(t.vertex(), VertexClass::Regular);
    let t = dini_osgood_form(&Density::identity(), 2.0, 1e6).unwrap();
    assert_eq!(t.vertex(), VertexClass::Irregular);
}

#[test]
fn form_equivalence_on_catalog() {
    let phis = builtin_catalog().phis;
    assert!(phis.len() >= 6);
    for phi in phis {
        let a = petrovskii_integral(&phi, 1, T0, T1).unwrap();
        let b = dini_osgood_form(&Density::from_phi(&phi), T0, T1).unwrap();
        assert_eq!(a.classification, b.classification, "{}", phi.name);
    }
}

#[test]
fn criterion_consistency_for_linear_heat_equation() {
    let th = VerdictThresholds::default();
    for phi in builtin_catalog().phis {
        let cls = petrovskii_integral(&phi, 1, T0, T1).unwrap().vertex();
        let o = build_criterion(1, CriterionKind::Multiplicative, phi.clone(), Kappa::zero(), &CriterionOptions::default())
            .unwrap();
        let v = verdict(&integrate(&o, -1.0, T0, T1, 1e-10).unwrap(), &th).verdict;
        let expect = match cls {
            VertexClass::Regular => Verdict::Regular,
            VertexClass::Irregular => Verdict::Irregular,
            VertexClass::Undetermined => Verdict::Inconclusive,
        };
        assert_eq!(v, expect, "{}", phi.name);
    }
}

#[test]
fn integrand_dominance_for_wider_parabolas() {
    // x ↦ x e^{−x²/4} decreases for x ≥ √2.
    let narrow = SlowGrowthFn::petrovskii_critical();
    let wide = SlowGrowthFn::petrovskii_eps(0.1);
    for i in 0..100 {
        let tau = 10f64.powf(1.0 + 0.11 * i as f64);
        let (a, b) = (wide.phi(tau), narrow.phi(tau));
        assert!(a >= b && b >= 2.0);
        assert!(a * (-a * a / 4.0).exp() <= b * (-b * b / 4.0).exp());
    }
}

#[test]
fn radial_factor() {
    let t1 = petrovskii_integral(&SlowGrowthFn::petrovskii_critical(), 1, T0, 1e6).unwrap();
    let t3 = petrovskii_integral(&SlowGrowthFn::petrovskii_critical(), 3, T0, 1e6).unwrap();
    assert!(t3.partial_values.last().unwrap().1 > t1.partial_values.last().unwrap().1);
    assert_eq!(t3.classification, Classification::Divergent);
}

#[test]
fn biharmonic_envelope_exponent() {
    let ctx = BiharmonicContext::shared().unwrap();
    let d0 = kernel_constants(2).d0;
    for c in [2.5, biharmonic_critical_coefficient(), 3.5] {
        let t = biharmonic_linear_criterion(&SlowGrowthFn::biharmonic_scaled(c), &ctx, T0, T1).unwrap();
        let q = t.envelope_exponent.unwrap();
        assert!((q - d0 * c.powf(4.0 / 3.0)).abs() < 1e-10, "c {c}: {q}");
    }
}

#[test]
fn biharmonic_classifications() {
    let ctx = BiharmonicContext::shared().unwrap();
    let wide = biharmonic_linear_criterion(&SlowGrowthFn::biharmonic_scaled(3.5), &ctx, T0, T1).unwrap();
    assert_eq!(wide.classification, Classification::Bounded);
    let crit = biharmonic_linear_criterion(&SlowGrowthFn::biharmonic_critical(), &ctx, T0, T1).unwrap();
    assert_eq!(crit.classification, Classification::Undetermined);
    let flat = biharmonic_linear_criterion(&SlowGrowthFn::constant(5.0), &ctx, T0, T1).unwrap();
    assert_eq!(flat.classification, Classification::Undetermined);
    assert!(flat.note.unwrap().contains("bounded"));
}

#[test]
fn biharmonic_period_sums_match_direct_quadrature() {
    let ctx = BiharmonicContext::shared().unwrap();
    let phi = SlowGrowthFn::biharmonic_scaled(3.5);
    let t = biharmonic_linear_criterion(&phi, &ctx, T0, 1e8).unwrap();
    // Oracle: plain trapezoid in ln τ on a very fine grid.
    let c = ctx.constants;
    let n = 400_000;
    let (u0, u1) = (T0.ln(), 1e8f64.ln());
    let h = (u1 - u0) / n as f64;
    let f = |u: f64| u.exp() * c.practical(phi.phi(u.exp()));
    let direct: f64 = (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            w * f(u0 + i as f64 * h)
        })
        .sum::<f64>()
        * h;
    let got = t.partial_values.last().unwrap().1;
    assert!((got - direct).abs() < 1e-8 * direct.abs().max(1.0), "{got} vs {direct}");
}
