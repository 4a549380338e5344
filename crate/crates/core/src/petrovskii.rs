//! Classical integral tests for the heat equation and the bi-harmonic
//! linear criterion.

use std::f64::consts::LN_10;
use std::sync::Arc;

use serde::Serialize;

use crate::criterion::{practical_period_sums, BiharmonicContext};
use crate::error::{Error, Result};
use crate::funcs::SlowGrowthFn;
use crate::numerics::fit::linear_fit;
use crate::numerics::quad::gauss16;
use crate::numerics::tail::{classify_tail, TailClass, TailFit, TailRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Divergent,
    Convergent,
    Undetermined,
    DivergentToMinusInfinity,
    Bounded,
}

impl From<TailClass> for Classification {
    fn from(c: TailClass) -> Self {
        match c {
            TailClass::Divergent => Self::Divergent,
            TailClass::Convergent => Self::Convergent,
            TailClass::Undetermined => Self::Undetermined,
        }
    }
}

/// What the classification says about the vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VertexClass {
    Regular,
    Irregular,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralTrace {
    pub label: String,
    /// Name of the integration variable in `partial_values`.
    pub variable: String,
    pub partial_values: Vec<(f64, f64)>,
    pub classification: Classification,
    pub fit: Option<TailFit>,
    /// d(ln envelope)/d(ln τ) negated, for the bi-harmonic criterion.
    pub envelope_exponent: Option<f64>,
    pub note: Option<String>,
}

impl IntegralTrace {
    pub fn vertex(&self) -> VertexClass {
        match self.classification {
            Classification::Divergent | Classification::DivergentToMinusInfinity => VertexClass::Regular,
            Classification::Convergent | Classification::Bounded => VertexClass::Irregular,
            Classification::Undetermined => VertexClass::Undetermined,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{},partial\n", self.variable);
        for (x, v) in &self.partial_values {
            s.push_str(&format!("{x:.16e},{v:.16e}\n"));
        }
        s
    }
}

const PER_DECADE: usize = 50;

fn log_nodes(x0: f64, x1: f64) -> Vec<f64> {
    let (u0, u1) = (x0.ln(), x1.ln());
    let n = (((u1 - u0) / LN_10) * PER_DECADE as f64).ceil().max(8.0) as usize;
    (0..=n).map(|i| u0 + (u1 - u0) * i as f64 / n as f64).collect()
}

/// ∫ g(x) dx on a log grid, given ln g as a function of u = ln x.
fn accumulate(us: &[f64], log_g: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
    let mut acc = 0.0;
    let mut out = vec![(us[0].exp(), 0.0)];
    for w in us.windows(2) {
        acc += gauss16().integrate(w[0], w[1], |u| (u + log_g(u)).exp());
        out.push((w[1].exp(), acc));
    }
    out
}

/// ∫_{τ₀}^{τ_max} φᴺe^{−φ²/4} dτ with tail classification.
pub fn petrovskii_integral(phi: &SlowGrowthFn, n: u32, tau0: f64, tau_max: f64) -> Result<IntegralTrace> {
    if n < 1 {
        return Err(Error::Precondition("radial exponent N must be at least 1".into()));
    }
    if tau0 < phi.tau_min || !(tau_max > tau0 && tau_max.is_finite()) {
        return Err(Error::Precondition(format!("bad horizon [{tau0}, {tau_max}]")));
    }
    let nf = n as f64;
    let log_g = |u: f64| {
        let p = phi.phi(u.exp());
        nf * p.ln() - p * p / 4.0
    };
    let us = log_nodes(tau0, tau_max);
    let partial_values = accumulate(&us, log_g);
    let lg: Vec<f64> = us.iter().map(|&u| log_g(u)).collect();
    let fit = classify_tail(&us, &lg, &TailRule::default());
    IntegralTrace {
        label: format!("petrovskii {} N={n}", phi.name),
        variable: "tau".into(),
        partial_values,
        classification: fit.map_or(Classification::Undetermined, |f| f.class.into()),
        fit,
        envelope_exponent: None,
        note: None,
    }
    .checked()
}

impl IntegralTrace {
    fn checked(self) -> Result<Self> {
        if self.partial_values.iter().any(|(_, v)| v.is_nan()) {
            return Err(Error::Quadrature(format!("{}: NaN partial value", self.label)));
        }
        Ok(self)
    }
}

/// Dini–Osgood density ρ(h) given through s = ln(1/h) ↦ ln ρ, so that
/// h far below the floating-point range stays representable.
#[derive(Clone)]
pub struct Density {
    pub name: String,
    log_rho: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for Density {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Density").field("name", &self.name).finish()
    }
}

impl Density {
    pub fn new(name: impl Into<String>, log_rho: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), log_rho: Arc::new(log_rho) }
    }

    pub fn log_rho(&self, s: f64) -> f64 {
        (self.log_rho)(s)
    }

    /// ρ(h) = 1/|ln h|.
    pub fn inverse_log() -> Self {
        Self::new("inverse-log", |s: f64| -s.ln())
    }

    /// ρ(h) = h.
    pub fn identity() -> Self {
        Self::new("identity", |s: f64| -s)
    }

    /// ρ(h) = e^{−φ²(τ)/4} with h = e^{−τ}.
    pub fn from_phi(phi: &SlowGrowthFn) -> Self {
        let phi = phi.clone();
        Self::new(format!("rho-of-{}", phi.name), move |s: f64| {
            let p = phi.phi(s);
            -p * p / 4.0
        })
    }
}

/// ∫ ρ(h)√|ln ρ(h)| dh/h near h = 0⁺, over h ∈ [e^{−s_max}, e^{−s0}].
pub fn dini_osgood_form(rho: &Density, s0: f64, s_max: f64) -> Result<IntegralTrace> {
    if !(s0 > 0.0 && s_max > s0 && s_max.is_finite()) {
        return Err(Error::Precondition(format!("bad range s in [{s0}, {s_max}]")));
    }
    let us = log_nodes(s0, s_max);
    for &u in &us {
        let l = rho.log_rho(u.exp());
        if !(l < 0.0 && l.is_finite()) {
            return Err(Error::Domain { what: format!("density '{}' at h = e^-{:e}", rho.name, u.exp()), value: l.exp() });
        }
    }
    let log_g = |u: f64| {
        let l = rho.log_rho(u.exp());
        l + 0.5 * (-l).ln()
    };
    let partial_values = accumulate(&us, log_g);
    let lg: Vec<f64> = us.iter().map(|&u| log_g(u)).collect();
    let fit = classify_tail(&us, &lg, &TailRule::default());
    IntegralTrace {
        label: format!("dini-osgood {}", rho.name),
        variable: "ln(1/h)".into(),
        partial_values,
        classification: fit.map_or(Classification::Undetermined, |f| f.class.into()),
        fit,
        envelope_exponent: None,
        note: None,
    }
    .checked()
}

/// ∫ G₄(φ(τ), 0) dτ in the practical form, summed between zeros of the phase.
pub fn biharmonic_linear_criterion(
    phi: &SlowGrowthFn,
    ctx: &BiharmonicContext,
    tau0: f64,
    tau_max: f64,
) -> Result<IntegralTrace> {
    if tau0 < phi.tau_min || !(tau_max > tau0 && tau_max.is_finite()) {
        return Err(Error::Precondition(format!("bad horizon [{tau0}, {tau_max}]")));
    }
    let c = &ctx.constants;
    let label = format!("biharmonic-linear {}", phi.name);
    let (p0, p1) = (phi.phi(tau0), phi.phi(tau_max));
    if !(p1 > p0 * (1.0 + 1e-9)) {
        return Ok(IntegralTrace {
            label,
            variable: "tau".into(),
            partial_values: vec![(tau0, 0.0)],
            classification: Classification::Undetermined,
            fit: None,
            envelope_exponent: None,
            note: Some(format!("phi is bounded on the horizon ({p0} -> {p1}); the integrand does not decay")),
        });
    }
    let partial_values = practical_period_sums(phi, c, tau0, tau_max)?;

    let us = log_nodes(tau0, tau_max);
    let start = us[us.len() - 1] - 2.0 * LN_10;
    let (x, y): (Vec<f64>, Vec<f64>) = us
        .iter()
        .filter(|&&u| u >= start)
        .map(|&u| (u, -c.d0 * phi.phi(u.exp()).powf(4.0 / 3.0)))
        .unzip();
    let q = -linear_fit(&x, &y).ok_or_else(|| Error::Fit("envelope fit failed".into()))?.slope;

    let margin = TailRule::default().p_margin;
    let (classification, note) = if q > 1.0 + margin {
        (Classification::Bounded, format!("envelope tau^-{q:.6}: absolutely integrable"))
    } else if q >= 1.0 - margin {
        (Classification::Undetermined, format!("envelope tau^-{q:.6}: marginal, needs an oscillatory cut-off"))
    } else {
        let acc = accelerated(&partial_values);
        let tail = &acc[acc.len().saturating_sub(6)..];
        let falling = tail.len() >= 4 && tail.windows(2).all(|w| w[1] < w[0]);
        if falling && tail[tail.len() - 1] < -1.0 {
            (Classification::DivergentToMinusInfinity, format!("envelope tau^-{q:.6}: averaged sums decrease"))
        } else {
            (Classification::Undetermined, format!("envelope tau^-{q:.6}: growing oscillation"))
        }
    };
    IntegralTrace {
        label,
        variable: "tau".into(),
        partial_values,
        classification,
        fit: None,
        envelope_exponent: Some(q),
        note: Some(note),
    }
    .checked()
}

/// Two levels of neighbour averaging of the partial sums at consecutive zeros.
fn accelerated(sums: &[(f64, f64)]) -> Vec<f64> {
    let mut v: Vec<f64> = sums.iter().map(|s| s.1).collect();
    for _ in 0..2 {
        if v.len() < 2 {
            break;
        }
        v = v.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    v
}
