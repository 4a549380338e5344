//! Boundary-shape functions φ(τ) and nonlinear coefficients κ(u).
//!
//! Both are stored as shared analytic evaluators so criterion right-hand
//! sides stay smooth far into the e^{−φ²/4} tail.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Coefficient of the critical bi-harmonic parabola c(ln τ)^{3/4}.
pub fn biharmonic_critical_coefficient() -> f64 {
    3f64.powf(-0.75) * 2f64.powf(2.75)
}

#[derive(Clone)]
pub struct SlowGrowthFn {
    pub name: String,
    phi: RealFn,
    dphi: RealFn,
    pub tau_min: f64,
}

impl fmt::Debug for SlowGrowthFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SlowGrowthFn")
            .field("name", &self.name)
            .field("tau_min", &self.tau_min)
            .finish()
    }
}

impl SlowGrowthFn {
    pub fn new(name: impl Into<String>, phi: RealFn, dphi: RealFn, tau_min: f64) -> Self {
        Self { name: name.into(), phi, dphi, tau_min }
    }

    pub fn phi(&self, tau: f64) -> f64 {
        (self.phi)(tau)
    }

    pub fn dphi(&self, tau: f64) -> f64 {
        (self.dphi)(tau)
    }

    /// φ(τ) = c·τ^a·(ln τ)^p·(ln ln τ)^q.
    pub fn power_log(name: impl Into<String>, c: f64, a: f64, p: f64, q: f64) -> Self {
        let phi = move |t: f64| {
            let l = t.ln();
            let mut v = c * t.powf(a);
            if p != 0.0 {
                v *= l.powf(p);
            }
            if q != 0.0 {
                v *= l.ln().powf(q);
            }
            v
        };
        let dphi = move |t: f64| {
            let l = t.ln();
            let mut elasticity = a;
            if p != 0.0 {
                elasticity += p / l;
            }
            if q != 0.0 {
                elasticity += q / (l * l.ln());
            }
            phi(t) * elasticity / t
        };
        let tau_min = if q != 0.0 { std::f64::consts::E.exp() } else { std::f64::consts::E };
        Self::new(name, Arc::new(phi), Arc::new(dphi), tau_min)
    }

    /// φ*(τ) = 2√(ln τ).
    pub fn petrovskii_critical() -> Self {
        Self::power_log("petrovskii-critical", 2.0, 0.0, 0.5, 0.0)
    }

    /// φ_ε(τ) = 2(1+ε)√(ln τ).
    pub fn petrovskii_eps(eps: f64) -> Self {
        Self::power_log(format!("petrovskii-eps-{eps}"), 2.0 * (1.0 + eps), 0.0, 0.5, 0.0)
    }

    pub fn log_power(p: f64) -> Self {
        Self::power_log(format!("log-power-{p}"), 1.0, 0.0, p, 0.0)
    }

    pub fn biharmonic_scaled(c: f64) -> Self {
        Self::power_log(format!("biharmonic-scaled-{c}"), c, 0.0, 0.75, 0.0)
    }

    pub fn biharmonic_critical() -> Self {
        let mut f = Self::power_log("biharmonic-critical", biharmonic_critical_coefficient(), 0.0, 0.75, 0.0);
        f.name = "biharmonic-critical".into();
        f
    }

    /// φ ≡ value. Not slow-growing; used for frozen-domain validation runs.
    pub fn constant(value: f64) -> Self {
        Self::new(format!("constant-{value}"), Arc::new(move |_| value), Arc::new(|_| 0.0), 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KappaSign {
    Negative,
    PositiveIncreasing,
    Mixed,
}

#[derive(Clone)]
pub struct Kappa {
    pub name: String,
    kappa: RealFn,
    pub u_max: f64,
    pub sign: KappaSign,
    /// κ ≡ 0, the heat-equation baseline.
    pub linear: bool,
}

impl fmt::Debug for Kappa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kappa")
            .field("name", &self.name)
            .field("u_max", &self.u_max)
            .field("sign", &self.sign)
            .field("linear", &self.linear)
            .finish()
    }
}

const INV_E: f64 = 0.36787944117144233;

impl Kappa {
    pub fn new(name: impl Into<String>, kappa: RealFn, u_max: f64, sign: KappaSign) -> Self {
        Self { name: name.into(), kappa, u_max, sign, linear: false }
    }

    /// Raw evaluation; callers are responsible for the domain.
    pub fn value(&self, u: f64) -> f64 {
        if self.linear {
            0.0
        } else {
            (self.kappa)(u)
        }
    }

    pub fn checked(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u <= self.u_max) {
            return Err(Error::Domain { what: format!("kappa '{}'", self.name), value: u });
        }
        let v = self.value(u);
        if !v.is_finite() {
            return Err(Error::Evaluation { what: format!("kappa '{}'", self.name), at: u });
        }
        Ok(v)
    }

    /// κ(min(|u|, u_max)), with κ(0) = 0.
    pub fn clamped(&self, u: f64) -> f64 {
        let a = u.abs().min(self.u_max);
        if a == 0.0 || self.linear {
            0.0
        } else {
            (self.kappa)(a)
        }
    }

    pub fn zero() -> Self {
        Self { name: "zero-kappa".into(), kappa: Arc::new(|_| 0.0), u_max: 1.0, sign: KappaSign::Mixed, linear: true }
    }

    /// κ(u) = s·c·u^q·|ln u|^p·exp(−(b|ln u|)^r); the sign is `s`.
    pub fn family(name: impl Into<String>, negative: bool, c: f64, q: f64, p: f64, b: f64, r: f64, u_max: f64) -> Self {
        let s = if negative { -1.0 } else { 1.0 };
        let f = move |u: f64| {
            let l = u.ln().abs();
            let mut v = s * c;
            if q != 0.0 {
                v *= u.powf(q);
            }
            if p != 0.0 {
                v *= l.powf(p);
            }
            if b != 0.0 {
                v *= (-(b * l).powf(r)).exp();
            }
            v
        };
        let sign = if negative {
            KappaSign::Negative
        } else {
            let increasing = (1..=24)
                .map(|k| u_max * 10f64.powf(-(k as f64) / 2.0))
                .collect::<Vec<_>>()
                .windows(2)
                .all(|w| f(w[1]) <= f(w[0]));
            if increasing { KappaSign::PositiveIncreasing } else { KappaSign::Mixed }
        };
        Self::new(name, Arc::new(f), u_max, sign)
    }

    /// ±c/|ln u| on (0, 1/e].
    pub fn inverse_log(negative: bool, c: f64) -> Self {
        let name = if negative { "neg-inverse-log" } else { "pos-inverse-log" };
        Self::family(name, negative, c, 0.0, -1.0, 0.0, 1.0, INV_E)
    }

    /// c·|ln u|^{1/3}·exp(−(3√π|ln u|)^{2/3}), the critical positive coefficient.
    /// `u_max` shrinks below 1/e when needed to keep |κ| ≤ 1.
    pub fn critical(c: f64) -> Self {
        let b = 3.0 * std::f64::consts::PI.sqrt();
        let probe = Self::family("critical-kappa", false, c, 0.0, 1.0 / 3.0, b, 2.0 / 3.0, INV_E);
        let u_max = if probe.value(INV_E) <= 1.0 {
            INV_E
        } else {
            // κ is increasing on (0, 1/e]; bisect ln u for κ = 1.
            let (mut lo, mut hi) = (-700.0f64, -1.0f64);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if probe.value(mid.exp()) <= 1.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo.exp()
        };
        let mut k = Self::family("critical-kappa", false, c, 0.0, 1.0 / 3.0, b, 2.0 / 3.0, u_max);
        k.sign = KappaSign::PositiveIncreasing;
        k
    }

    /// −u^q on (0, 1].
    pub fn neg_power(q: f64) -> Self {
        Self::family(format!("neg-power-{q}"), true, 1.0, q, 0.0, 0.0, 1.0, 1.0)
    }

    /// κ ≡ value on (0, u_max]; violates κ → 0, for guard tests and bound models.
    pub fn constant(value: f64, u_max: f64) -> Self {
        let sign = if value < 0.0 { KappaSign::Negative } else { KappaSign::Mixed };
        Self::new(format!("constant-{value}"), Arc::new(move |_| value), u_max, sign)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// (argument, measured value) pairs supporting the outcome.
    pub witness: Vec<(f64, f64)>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityReport {
    pub subject: String,
    pub checks: Vec<Check>,
}

impl ValidityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

fn finite_at(what: &str, tau: f64, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation { what: what.into(), at: tau })
    }
}

/// d/dτ (φ/φ′) by a central difference.
pub fn growth_derivative(f: &SlowGrowthFn, tau: f64) -> f64 {
    let h = 1e-4 * tau;
    let g = |t: f64| f.phi(t) / f.dphi(t);
    (g(tau + h) - g(tau - h)) / (2.0 * h)
}

pub fn validate_slow_growth(f: &SlowGrowthFn, tau_samples: &[f64]) -> Result<ValidityReport> {
    if tau_samples.len() < 4 {
        return Err(Error::Precondition("at least 4 tau samples required".into()));
    }
    if !strictly_increasing(tau_samples) {
        return Err(Error::Precondition("tau samples must be increasing".into()));
    }
    let (first, last) = (tau_samples[0], tau_samples[tau_samples.len() - 1]);
    if first < f.tau_min {
        return Err(Error::Domain { what: format!("phi '{}'", f.name), value: first });
    }
    if (last / first).log10() < 3.0 - 1e-12 {
        return Err(Error::Precondition("tau samples must span at least 3 decades".into()));
    }

    let mut phi = Vec::new();
    let mut dphi = Vec::new();
    let mut growth = Vec::new();
    for &t in tau_samples {
        phi.push(finite_at("phi", t, f.phi(t))?);
        dphi.push(finite_at("dphi", t, f.dphi(t))?);
        growth.push(finite_at("(phi/dphi)'", t, growth_derivative(f, t))?);
    }
    let ratio: Vec<f64> = phi.iter().zip(&dphi).map(|(a, b)| b / a).collect();
    let elasticity: Vec<f64> = tau_samples.iter().zip(&ratio).map(|(t, r)| t * r).collect();
    let pairs = |v: &[f64]| tau_samples.iter().copied().zip(v.iter().copied()).collect::<Vec<_>>();

    let mut checks = vec![
        Check {
            name: "phi-positive-increasing".into(),
            passed: phi.iter().all(|&p| p > 0.0) && dphi.iter().all(|&d| d > 0.0) && strictly_increasing(&phi),
            witness: pairs(&phi),
            note: "phi > 0, phi' > 0".into(),
        },
        Check {
            name: "dphi-decays".into(),
            passed: strictly_decreasing(&dphi),
            witness: pairs(&dphi),
            note: "phi' decreasing across samples".into(),
        },
        Check {
            name: "log-derivative-decays".into(),
            passed: strictly_decreasing(&ratio),
            witness: pairs(&ratio),
            note: "phi'/phi decreasing across samples".into(),
        },
        Check {
            name: "slow-growth".into(),
            passed: growth.windows(2).all(|w| w[1] > w[0] * (1.0 + 1e-6)),
            witness: pairs(&growth),
            note: "(phi/phi')' increasing across samples (finite differences)".into(),
        },
    ];
    for alpha in [0.1, 0.5, 1.0] {
        let below = elasticity[elasticity.len() - 1] < alpha;
        checks.push(Check {
            name: format!("sub-power-{alpha}"),
            passed: strictly_decreasing(&elasticity),
            witness: pairs(&elasticity),
            note: format!(
                "elasticity tau*phi'/phi decreasing toward 0; {} alpha at the last sample",
                if below { "already below" } else { "still above" }
            ),
        });
    }
    Ok(ValidityReport { subject: f.name.clone(), checks })
}

pub fn validate_kappa(k: &Kappa, u_samples: &[f64]) -> Result<ValidityReport> {
    if u_samples.len() < 2 || !strictly_decreasing(u_samples) {
        return Err(Error::Precondition("u samples must be a decreasing sequence".into()));
    }
    let mut values = Vec::new();
    for &u in u_samples {
        values.push(k.checked(u)?);
    }
    let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let pairs: Vec<(f64, f64)> = u_samples.iter().copied().zip(values.iter().copied()).collect();
    let n = abs.len();
    let tail = &abs[n.saturating_sub(3)..];
    let vanishes = abs[n - 1] < abs[0] && tail.windows(2).all(|w| w[1] <= w[0]) || abs.iter().all(|&a| a == 0.0);
    let at_max = k.value(k.u_max);
    let bounded = abs.iter().all(|&a| a <= 1.0) && at_max.abs() <= 1.0;
    let mut bound_witness = pairs.clone();
    bound_witness.insert(0, (k.u_max, at_max));
    let nonzero = values.iter().all(|&v| v != 0.0);
    Ok(ValidityReport {
        subject: k.name.clone(),
        checks: vec![
            Check { name: "vanishes-at-zero".into(), passed: vanishes, witness: pairs.clone(), note: "|kappa| decreasing toward u -> 0+".into() },
            Check { name: "bounded-by-one".into(), passed: bounded, witness: bound_witness, note: "|kappa| <= 1 on (0, u_max]".into() },
            Check {
                name: "nonzero".into(),
                passed: nonzero,
                witness: pairs,
                note: if k.linear { "linear member (kappa = 0)".into() } else { "kappa != 0 away from 0".into() },
            },
        ],
    })
}

/// A named boundary function together with its catalog key.
#[derive(Debug, Clone)]
pub struct Catalog {
    pub phis: Vec<SlowGrowthFn>,
    pub kappas: Vec<Kappa>,
}

pub fn builtin_catalog() -> Catalog {
    Catalog {
        phis: vec![
            SlowGrowthFn::petrovskii_critical(),
            SlowGrowthFn::petrovskii_eps(0.05),
            SlowGrowthFn::petrovskii_eps(0.1),
            SlowGrowthFn::log_power(0.75),
            SlowGrowthFn::log_power(1.0),
            SlowGrowthFn::log_power(2.0),
            SlowGrowthFn::biharmonic_critical(),
        ],
        kappas: vec![
            Kappa::zero(),
            Kappa::inverse_log(true, 1.0),
            Kappa::inverse_log(false, 1.0),
            Kappa::critical(1.0),
            Kappa::neg_power(1.0),
        ],
    }
}

/// Catalog lookup by name; `param` feeds parametric members (ε, c, p, q).
pub fn phi_by_name(name: &str, param: Option<f64>) -> Result<SlowGrowthFn> {
    match name {
        "petrovskii-critical" => Ok(SlowGrowthFn::petrovskii_critical()),
        "petrovskii-eps" => Ok(SlowGrowthFn::petrovskii_eps(param.unwrap_or(0.1))),
        "log-power" => Ok(SlowGrowthFn::log_power(param.unwrap_or(1.0))),
        "biharmonic-critical" => Ok(SlowGrowthFn::biharmonic_critical()),
        "biharmonic-scaled" => Ok(SlowGrowthFn::biharmonic_scaled(param.unwrap_or_else(biharmonic_critical_coefficient))),
        "constant" => Ok(SlowGrowthFn::constant(param.unwrap_or(10.0))),
        _ => Err(Error::Config(format!("unknown phi '{name}'"))),
    }
}

pub fn kappa_by_name(name: &str, param: Option<f64>) -> Result<Kappa> {
    match name {
        "zero-kappa" => Ok(Kappa::zero()),
        "neg-inverse-log" => Ok(Kappa::inverse_log(true, param.unwrap_or(1.0))),
        "pos-inverse-log" => Ok(Kappa::inverse_log(false, param.unwrap_or(1.0))),
        "critical-kappa" => Ok(Kappa::critical(param.unwrap_or(1.0))),
        "neg-power" => Ok(Kappa::neg_power(param.unwrap_or(1.0))),
        "constant-kappa" => Ok(Kappa::constant(param.unwrap_or(1.0), 1.0)),
        _ => Err(Error::Config(format!("unknown kappa '{name}'"))),
    }
}

pub const PHI_NAMES: &[&str] = &["petrovskii-critical", "petrovskii-eps", "log-power", "biharmonic-critical", "biharmonic-scaled", "constant"];
pub const KAPPA_NAMES: &[&str] = &["zero-kappa", "neg-inverse-log", "pos-inverse-log", "critical-kappa", "neg-power", "constant-kappa"];

#[cfg(test)]
mod tests {
    use super::*;

    const TAUS: [f64; 5] = [10.0, 1e2, 1e3, 1e4, 1e6];

    #[test]
    fn critical_phi_passes() {
        let r = validate_slow_growth(&SlowGrowthFn::petrovskii_critical(), &TAUS).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn linear_growth_fails_slow_growth_only_there() {
        let f = SlowGrowthFn::power_log("linear", 1.0, 1.0, 0.0, 0.0);
        let r = validate_slow_growth(&f, &TAUS).unwrap();
        assert!(!r.check("slow-growth").unwrap().passed);
        for (_, g) in &r.check("slow-growth").unwrap().witness {
            assert!((g - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn log_square_growth_derivative_matches_closed_form() {
        let f = SlowGrowthFn::log_power(2.0);
        let r = validate_slow_growth(&f, &TAUS).unwrap();
        assert!(r.passed());
        for &t in &TAUS {
            let exact = (t.ln() + 1.0) / 2.0;
            assert!((growth_derivative(&f, t) - exact).abs() < 1e-6 * exact);
        }
    }

    #[test]
    fn catalog_members_valid_and_derivatives_consistent() {
        let cat = builtin_catalog();
        assert!(cat.phis.len() >= 6);
        for f in &cat.phis {
            assert!(validate_slow_growth(f, &TAUS).unwrap().passed(), "{}", f.name);
            for t in [1e2, 1e4] {
                let h = 1e-5 * t;
                let fd = (f.phi(t + h) - f.phi(t - h)) / (2.0 * h);
                assert!((fd - f.dphi(t)).abs() < 1e-6 * f.dphi(t).abs(), "{}", f.name);
            }
            assert!(f.dphi(1e6) / f.phi(1e6) < f.dphi(1e3) / f.phi(1e3));
        }
        let us: Vec<f64> = (1..=12).map(|k| 10f64.powi(-k)).collect();
        for k in cat.kappas.iter().filter(|k| !k.linear) {
            assert!(validate_kappa(k, &us).unwrap().passed(), "{}", k.name);
        }
    }

    #[test]
    fn kappa_examples() {
        let us: Vec<f64> = (1..=12).map(|k| 10f64.powi(-k)).collect();
        let k = Kappa::inverse_log(true, 1.0);
        assert_eq!(k.sign, KappaSign::Negative);
        assert!(validate_kappa(&k, &us).unwrap().passed());

        let lin = |u_max| Kappa::new("two-u", Arc::new(|u| 2.0 * u), u_max, KappaSign::PositiveIncreasing);
        assert!(!validate_kappa(&lin(1.0), &us).unwrap().check("bounded-by-one").unwrap().passed);
        assert!(validate_kappa(&lin(0.5), &us).unwrap().passed());

        let crit = Kappa::critical(1.0);
        assert_eq!(crit.sign, KappaSign::PositiveIncreasing);
        assert!(validate_kappa(&crit, &us).unwrap().passed());

        assert!(matches!(validate_kappa(&k, &[0.5, 0.1]), Err(Error::Domain { .. })));
        let zero = validate_kappa(&Kappa::zero(), &us).unwrap();
        assert!(!zero.check("nonzero").unwrap().passed);
    }

    #[test]
    fn named_lookup() {
        let f = phi_by_name("petrovskii-critical", None).unwrap();
        assert!((f.phi(1e4) - 2.0 * (1e4f64).ln().sqrt()).abs() < 1e-14);
        let b = phi_by_name("biharmonic-critical", None).unwrap();
        let c = 3f64.powf(-0.75) * 2f64.powf(2.75);
        assert!((b.phi(1e4) - c * (1e4f64).ln().powf(0.75)).abs() < 1e-12);
        assert!(kappa_by_name("zero-kappa", None).unwrap().linear);
        assert!(matches!(phi_by_name("nope", None), Err(Error::Config(_))));
    }

    #[test]
    fn strong_critical_kappa_respects_bound() {
        let k = Kappa::critical(100.0);
        assert!(k.u_max < INV_E);
        assert!(k.value(k.u_max) <= 1.0 + 1e-12);
    }
}
