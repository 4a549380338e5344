//! Projected ODEs for ln a₀(τ), their integration on a logarithmic τ grid and
//! finite-horizon regularity verdicts.

use std::f64::consts::{LN_10, PI};
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::blayer::{bl_profile, BLProfile};
use crate::error::{Error, Result};
use crate::funcs::{Kappa, KappaSign, SlowGrowthFn};
use crate::numerics::fit::linear_fit;
use crate::numerics::ode::{integrate_scalar, Dopri5Options, OdeFailure};
use crate::numerics::quad::{gauss16, gauss8};
use crate::numerics::tail::{classify_tail, TailClass, TailFit, TailRule};
use crate::spectral::{
    build_kernel, kernel_asymptotic_fit, kernel_tail_amplitudes, KernelModel, KernelTable, QuadSettings,
};

const INV_4_SQRT_PI: f64 = 0.14104739588693907;
const INV_8_SQRT_PI: f64 = 0.07052369794346953;
/// ln a₀ below this is an effective zero.
pub const LN_A0_FLOOR: f64 = -745.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriterionKind {
    Multiplicative,
    Gradient,
}

/// How the inequality of the m = 1 gradient system is turned into an ODE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientModel {
    /// Projection of κ(a₀)a₀²φ²g₀′² onto the Gaussian, kept exactly.
    Equality,
    /// The upper bound (1/(8√π))κa₀²φ³e^{−φ²/4}.
    Bound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum M2Form {
    /// Exact for φ ≤ switch_phi, practical beyond.
    Auto,
    Exact,
    Practical,
}

/// Constants of the practical m = 2 linear term φ^{2/3}C₃cos(b₀φ^{4/3}+C₄)e^{−d₀φ^{4/3}}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct M2Constants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub d0: f64,
    pub b0: f64,
    pub fit_window: (f64, f64),
}

pub const M2_FIT_WINDOW: (f64, f64) = (8.0, 20.0);

impl M2Constants {
    /// C₁, C₂ from the kernel tail, then C₃, C₄ from the leading order of
    /// γ₂φF(φ) + γ₁φ^{2/3}F′(φ).
    pub fn from_kernel(model: &KernelModel) -> Result<Self> {
        let k = model.constants;
        let fit = kernel_asymptotic_fit(model, M2_FIT_WINDOW)?;
        if (fit.d_fit - k.d0).abs() > 0.05 * k.d0 || (fit.b_fit - k.b0).abs() > 0.05 * k.b0 {
            return Err(Error::Fit(format!(
                "kernel tail rates ({}, {}) disagree with the WKBJ constants",
                fit.d_fit, fit.b_fit
            )));
        }
        let (c1, c2) = kernel_tail_amplitudes(model, M2_FIT_WINDOW)?;
        let bl = bl_profile(2)?;
        let g1 = bl.gamma1();
        let g2 = bl.gamma2().unwrap_or(-0.25);
        Ok(Self::from_amplitudes(c1, c2, g1, g2, k.d0, k.b0, M2_FIT_WINDOW))
    }

    pub fn from_amplitudes(c1: f64, c2: f64, gamma1: f64, gamma2: f64, d0: f64, b0: f64, window: (f64, f64)) -> Self {
        let a = gamma2 * c1 - 4.0 / 3.0 * gamma1 * (d0 * c1 + b0 * c2);
        let b = gamma2 * c2 + 4.0 / 3.0 * gamma1 * (b0 * c1 - d0 * c2);
        Self { c1, c2, c3: a.hypot(b), c4: (-a).atan2(b), gamma1, gamma2, d0, b0, fit_window: window }
    }

    pub fn phase(&self, phi: f64) -> f64 {
        self.b0 * phi.powf(4.0 / 3.0) + self.c4
    }

    /// ln of φ^{2/3}C₃e^{−d₀φ^{4/3}}.
    pub fn log_envelope(&self, phi: f64) -> f64 {
        self.c3.ln() + 2.0 / 3.0 * phi.ln() - self.d0 * phi.powf(4.0 / 3.0)
    }

    pub fn practical(&self, phi: f64) -> f64 {
        self.log_envelope(phi).exp() * self.phase(phi).cos()
    }

    /// Two-term tail of F for arguments beyond the tabulated range.
    pub fn asymptotic_kernel(&self, y: f64) -> f64 {
        let y = y.abs();
        let x = y.powf(4.0 / 3.0);
        y.powf(-1.0 / 3.0) * (-self.d0 * x).exp() * (self.c1 * (self.b0 * x).sin() + self.c2 * (self.b0 * x).cos())
    }
}

/// Kernel, its lookup table and practical constants for m = 2.
#[derive(Debug)]
pub struct BiharmonicContext {
    pub kernel: KernelModel,
    pub table: KernelTable,
    pub constants: M2Constants,
}

pub const KERNEL_TABLE_RADIUS: f64 = 25.0;
pub const KERNEL_TABLE_STEP: f64 = 0.01;

impl BiharmonicContext {
    pub fn new(kernel: KernelModel) -> Result<Self> {
        if kernel.m() != 2 {
            return Err(Error::Config(format!("bi-harmonic context needs an m = 2 kernel, got m = {}", kernel.m())));
        }
        let constants = M2Constants::from_kernel(&kernel)?;
        let table = KernelTable::build(&kernel, KERNEL_TABLE_RADIUS, KERNEL_TABLE_STEP)?;
        Ok(Self { kernel, table, constants })
    }

    /// Process-wide context for the default quadrature settings.
    pub fn shared() -> Result<Arc<Self>> {
        static CTX: OnceLock<std::result::Result<Arc<BiharmonicContext>, String>> = OnceLock::new();
        CTX.get_or_init(|| {
            build_kernel(2, QuadSettings::default())
                .and_then(Self::new)
                .map(Arc::new)
                .map_err(|e| e.to_string())
        })
        .clone()
        .map_err(Error::Quadrature)
    }

    pub fn kernel_value(&self, y: f64) -> f64 {
        if self.table.contains(y) {
            self.table.value(y)
        } else {
            self.constants.asymptotic_kernel(y)
        }
    }
}

#[derive(Debug, Clone)]
pub struct CriterionOptions {
    pub radial_exponent: u32,
    pub gradient_model: GradientModel,
    pub m2_form: M2Form,
    pub switch_phi: f64,
    pub biharmonic: Option<Arc<BiharmonicContext>>,
    /// Suffices for `M2Form::Practical` without a kernel.
    pub m2_constants: Option<M2Constants>,
}

impl Default for CriterionOptions {
    fn default() -> Self {
        Self {
            radial_exponent: 1,
            gradient_model: GradientModel::Equality,
            m2_form: M2Form::Auto,
            switch_phi: 20.0,
            biharmonic: None,
            m2_constants: None,
        }
    }
}

impl CriterionOptions {
    /// Options with the shared default m = 2 kernel attached.
    pub fn with_shared_kernel() -> Result<Self> {
        Ok(Self { biharmonic: Some(BiharmonicContext::shared()?), ..Self::default() })
    }
}

#[derive(Debug, Clone)]
pub struct CriterionODE {
    pub m: u32,
    pub kind: CriterionKind,
    pub phi: SlowGrowthFn,
    pub kappa: Kappa,
    pub radial_exponent: u32,
    pub gradient_model: GradientModel,
    pub m2_form: M2Form,
    pub switch_phi: f64,
    pub m2_constants: Option<M2Constants>,
    biharmonic: Option<Arc<BiharmonicContext>>,
    profile: Option<BLProfile>,
}

pub fn build_criterion(
    m: u32,
    kind: CriterionKind,
    phi: SlowGrowthFn,
    kappa: Kappa,
    opts: &CriterionOptions,
) -> Result<CriterionODE> {
    let mut ode = CriterionODE {
        m,
        kind,
        phi,
        kappa,
        radial_exponent: opts.radial_exponent,
        gradient_model: opts.gradient_model,
        m2_form: opts.m2_form,
        switch_phi: opts.switch_phi,
        m2_constants: None,
        biharmonic: None,
        profile: None,
    };
    match m {
        1 => {}
        2 => {
            if let Some(ctx) = &opts.biharmonic {
                ode.m2_constants = Some(ctx.constants);
                ode.biharmonic = Some(ctx.clone());
            } else if opts.m2_form == M2Form::Practical && opts.m2_constants.is_some() {
                ode.m2_constants = opts.m2_constants;
            } else {
                return Err(Error::Config(
                    "m = 2 needs a kernel model, or the practical form with fitted (C3, C4)".into(),
                ));
            }
            if kind == CriterionKind::Gradient {
                ode.profile = Some(bl_profile(2)?);
            }
        }
        _ => return Err(Error::Config(format!("unsupported criterion order m = {m}"))),
    }
    if opts.radial_exponent == 0 {
        return Err(Error::Config("radial exponent N must be at least 1".into()));
    }
    Ok(ode)
}

/// ∫₀¹ e^{−φ²t(2+t)/4} dt, clustered where the integrand lives.
fn gradient_projection(phi: f64) -> f64 {
    let p2 = phi * phi;
    let cut = if p2 > 60.0 { 60.0 / p2 } else { 1.0 };
    let f = |t: f64| (-p2 * t * (2.0 + t) / 4.0).exp();
    let mut v = gauss16().composite(0.0, cut, 8, f);
    if cut < 1.0 {
        v += gauss8().composite(cut, 1.0, 4, f);
    }
    v
}

impl CriterionODE {
    /// Form used for the m = 2 linear term at boundary value φ.
    pub fn form_at(&self, phi: f64) -> M2Form {
        match self.m2_form {
            M2Form::Auto if self.biharmonic.is_some() && phi <= self.switch_phi => M2Form::Exact,
            M2Form::Auto => M2Form::Practical,
            M2Form::Exact if self.biharmonic.is_some() => M2Form::Exact,
            _ => M2Form::Practical,
        }
    }

    fn radial(&self, phi: f64) -> f64 {
        if self.radial_exponent == 1 {
            1.0
        } else {
            phi.powi(self.radial_exponent as i32 - 1)
        }
    }

    pub fn linear_term(&self, tau: f64) -> f64 {
        let phi = self.phi.phi(tau);
        let base = match self.m {
            1 => -INV_4_SQRT_PI * phi * (-phi * phi / 4.0).exp(),
            _ => {
                let c = self.m2_constants.as_ref().expect("m = 2 criterion carries its constants");
                match (self.form_at(phi), &self.biharmonic) {
                    (M2Form::Exact, Some(ctx)) => {
                        c.gamma2 * phi * ctx.table.value(phi) + c.gamma1 * phi.powf(2.0 / 3.0) * ctx.table.d1(phi)
                    }
                    _ => c.practical(phi),
                }
            }
        };
        base * self.radial(phi)
    }

    /// ln of the magnitude (m = 1) or envelope (m = 2) of the linear term.
    pub fn log_linear_envelope(&self, tau: f64) -> f64 {
        let phi = self.phi.phi(tau);
        let n = self.radial_exponent as f64;
        match self.m {
            1 => INV_4_SQRT_PI.ln() + n * phi.ln() - phi * phi / 4.0,
            _ => {
                let c = self.m2_constants.as_ref().expect("m = 2 criterion carries its constants");
                c.log_envelope(phi) + (n - 1.0) * phi.ln()
            }
        }
    }

    /// φ∫₀^{min(φ^{4/3}, 40)} g₀′(ξ)⁴F(φ − ξφ^{−1/3}) dξ.
    fn quartic_gradient_weight(&self, phi: f64) -> f64 {
        let profile = self.profile.as_ref().expect("gradient m = 2 carries the BL profile");
        let top = phi.powf(4.0 / 3.0).min(40.0);
        let shrink = phi.powf(-1.0 / 3.0);
        let kernel = |y: f64| match &self.biharmonic {
            Some(ctx) => ctx.kernel_value(y),
            None => self.m2_constants.as_ref().map_or(0.0, |c| c.asymptotic_kernel(y)),
        };
        let panels = (top / 1.25).ceil().max(1.0) as usize;
        phi * gauss8().composite(0.0, top, panels, |xi| {
            let g = profile.deriv(xi, 1);
            let g2 = g * g;
            g2 * g2 * kernel(phi - xi * shrink)
        })
    }

    pub fn nonlinear_term(&self, tau: f64, ln_a0: f64) -> f64 {
        if self.kappa.linear {
            return 0.0;
        }
        let a = ln_a0.exp();
        let k = self.kappa.clamped(a);
        match (self.kind, self.m) {
            (CriterionKind::Multiplicative, _) => k,
            (CriterionKind::Gradient, 1) => {
                let phi = self.phi.phi(tau);
                let bound = INV_8_SQRT_PI * k * a * a * phi.powi(3) * (-phi * phi / 4.0).exp();
                match self.gradient_model {
                    GradientModel::Bound => bound,
                    GradientModel::Equality => bound * gradient_projection(phi),
                }
            }
            (CriterionKind::Gradient, _) => {
                let a2 = a * a;
                k * a2 * a2 * self.quartic_gradient_weight(self.phi.phi(tau))
            }
        }
    }

    /// d(ln a₀)/dτ split into (linear, nonlinear) parts.
    pub fn rhs_parts(&self, tau: f64, ln_a0: f64) -> (f64, f64) {
        (self.linear_term(tau), self.nonlinear_term(tau, ln_a0))
    }

    pub fn rhs(&self, tau: f64, ln_a0: f64) -> f64 {
        let (l, n) = self.rhs_parts(tau, ln_a0);
        l + n
    }

    /// Verdicts for m = 2 hold only for generic solutions.
    pub fn conditional_on_genericity(&self) -> bool {
        self.m == 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub tau: f64,
    pub ln_a0: f64,
    pub rhs_linear: f64,
    pub rhs_nonlinear: f64,
    /// ln|rhs|, finite even where the linear term underflows.
    pub log_abs_rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Termination {
    Completed,
    /// ln a₀ fell below the floor at τ.
    Underflow { tau: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub id: String,
    pub m: u32,
    pub tau0: f64,
    pub tau_max: f64,
    pub tol: f64,
    pub ln_a0_initial: f64,
    pub points: Vec<TrajectoryPoint>,
    pub termination: Termination,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// First checkpoint at which the m = 2 rhs switched to the practical form.
    pub form_switch_tau: Option<f64>,
    pub conditional_on_genericity: bool,
}

impl Trajectory {
    pub fn final_point(&self) -> &TrajectoryPoint {
        self.points.last().expect("trajectory has at least the initial point")
    }

    /// ln a₀ at τ by linear interpolation in ln τ.
    pub fn ln_a0_at(&self, tau: f64) -> Option<f64> {
        let u = tau.ln();
        let pts = &self.points;
        let i = pts.iter().position(|p| p.tau >= tau)?;
        if i == 0 {
            return (pts[0].tau == tau).then_some(pts[0].ln_a0);
        }
        let (a, b) = (&pts[i - 1], &pts[i]);
        let (ua, ub) = (a.tau.ln(), b.tau.ln());
        Some(a.ln_a0 + (b.ln_a0 - a.ln_a0) * (u - ua) / (ub - ua))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("tau,ln_a0,rhs_linear,rhs_nonlinear\n");
        for p in &self.points {
            s.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e}\n", p.tau, p.ln_a0, p.rhs_linear, p.rhs_nonlinear));
        }
        s
    }
}

pub const CHECKPOINTS_PER_DECADE: usize = 50;

fn log_grid(tau0: f64, tau_max: f64, per_decade: usize) -> Vec<f64> {
    let (u0, u1) = (tau0.ln(), tau_max.ln());
    let n = (((u1 - u0) / LN_10) * per_decade as f64).ceil().max(4.0) as usize;
    (0..=n).map(|i| u0 + (u1 - u0) * i as f64 / n as f64).collect()
}

fn log_abs_sum(ode: &CriterionODE, tau: f64, lin: f64, nonlin: f64) -> f64 {
    let total = lin + nonlin;
    if nonlin == 0.0 {
        ode.log_linear_envelope(tau)
    } else {
        total.abs().ln()
    }
}

/// Integrates d(ln a₀)/d(ln τ) = τ·rhs by DOPRI5 on the ln τ axis.
pub fn integrate(ode: &CriterionODE, ln_a0_init: f64, tau0: f64, tau_max: f64, tol: f64) -> Result<Trajectory> {
    if tau0 < ode.phi.tau_min {
        return Err(Error::Precondition(format!("tau0 = {tau0} is below tau_min = {}", ode.phi.tau_min)));
    }
    if !(tau_max > tau0 && tau_max <= 1e12 * (1.0 + 1e-12)) {
        return Err(Error::Precondition(format!("tau_max = {tau_max} must lie in (tau0, 1e12]")));
    }
    if !(1e-12..=1e-6).contains(&tol) {
        return Err(Error::Precondition(format!("tolerance {tol} outside [1e-12, 1e-6]")));
    }
    if !(LN_A0_FLOOR..=0.0).contains(&ln_a0_init) {
        return Err(Error::Domain { what: "initial ln a0".into(), value: ln_a0_init });
    }
    let grid = log_grid(tau0, tau_max, CHECKPOINTS_PER_DECADE);
    let opts = Dopri5Options { rtol: tol, atol: tol, h_init: 1e-3, h_min: 1e-12, max_steps: 2_000_000 };
    let sol = integrate_scalar(
        |u, l| {
            let t = u.exp();
            t * ode.rhs(t, l)
        },
        grid[0],
        ln_a0_init,
        &grid,
        &opts,
        |_, l| !(LN_A0_FLOOR..=0.0).contains(&l),
    )
    .map_err(|f| match f {
        OdeFailure::StepCollapse { t } => Error::Stiffness { tau: t.exp() },
        OdeFailure::NonFinite { t } => Error::Evaluation { what: "criterion rhs".into(), at: t.exp() },
        OdeFailure::TooManySteps { t } => Error::StepFailure { tau: t.exp(), reason: "step budget exhausted".into() },
    })?;

    let mut termination = Termination::Completed;
    let mut raw = sol.points.clone();
    if let Some((u, l)) = sol.stopped_at {
        if l > 0.0 {
            return Err(Error::Domain { what: format!("ln a0 overflow at tau = {:e}", u.exp()), value: l });
        }
        termination = Termination::Underflow { tau: u.exp() };
        raw.push((u, l.max(LN_A0_FLOOR)));
    }
    let mut points = Vec::with_capacity(raw.len());
    let mut switch = None;
    for (u, l) in raw {
        let tau = u.exp();
        let (lin, non) = ode.rhs_parts(tau, l);
        if ode.m == 2 && switch.is_none() && ode.form_at(ode.phi.phi(tau)) == M2Form::Practical {
            switch = Some(tau);
        }
        points.push(TrajectoryPoint {
            tau,
            ln_a0: l,
            rhs_linear: lin,
            rhs_nonlinear: non,
            log_abs_rhs: log_abs_sum(ode, tau, lin, non),
        });
    }
    Ok(Trajectory {
        id: format!("m{}-{:?}-{}-{}", ode.m, ode.kind, ode.phi.name, ode.kappa.name).to_lowercase(),
        m: ode.m,
        tau0,
        tau_max,
        tol,
        ln_a0_initial: ln_a0_init,
        points,
        termination,
        accepted_steps: sol.accepted,
        rejected_steps: sol.rejected,
        form_switch_tau: switch,
        conditional_on_genericity: ode.conditional_on_genericity(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Regular,
    Irregular,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerdictThresholds {
    pub min_decades: f64,
    pub drop: f64,
    pub trend_slope: f64,
    pub plateau: f64,
    pub tail: TailRule,
}

impl Default for VerdictThresholds {
    fn default() -> Self {
        Self { min_decades: 3.0, drop: 10.0, trend_slope: -0.05, plateau: 0.5, tail: TailRule::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityVerdict {
    pub verdict: Verdict,
    pub ln_a0_initial: f64,
    pub ln_a0_final: f64,
    /// d(ln a₀)/d(ln τ) fitted over the last decade.
    pub trend_slope: f64,
    /// ln a₀(τ_end) − ln a₀(τ_end/10).
    pub plateau_change: f64,
    pub certificate: Option<String>,
    pub trajectory_ref: String,
    pub thresholds: VerdictThresholds,
    pub conditional_on_genericity: bool,
}

fn last_decade_slope(traj: &Trajectory) -> f64 {
    let end = traj.final_point().tau;
    let (x, y): (Vec<f64>, Vec<f64>) =
        traj.points.iter().filter(|p| p.tau >= end / 10.0 * (1.0 - 1e-12)).map(|p| (p.tau.ln(), p.ln_a0)).unzip();
    linear_fit(&x, &y).map_or(0.0, |f| f.slope)
}

pub fn verdict(traj: &Trajectory, th: &VerdictThresholds) -> RegularityVerdict {
    let fin = traj.final_point();
    let end = fin.tau;
    let slope = last_decade_slope(traj);
    let plateau_change = traj.ln_a0_at(end / 10.0).map_or(f64::NAN, |l| fin.ln_a0 - l);
    let mut out = RegularityVerdict {
        verdict: Verdict::Inconclusive,
        ln_a0_initial: traj.ln_a0_initial,
        ln_a0_final: fin.ln_a0,
        trend_slope: slope,
        plateau_change,
        certificate: None,
        trajectory_ref: traj.id.clone(),
        thresholds: *th,
        conditional_on_genericity: traj.conditional_on_genericity,
    };
    if let Termination::Underflow { tau } = traj.termination {
        out.verdict = Verdict::Regular;
        out.certificate = Some(format!("ln a0 fell below {LN_A0_FLOOR} at tau = {tau:.6e}"));
        return out;
    }
    if (traj.tau_max / traj.tau0).log10() < th.min_decades - 1e-9 {
        return out;
    }
    let drop = traj.ln_a0_initial - fin.ln_a0;
    if drop > th.drop && slope < th.trend_slope {
        out.verdict = Verdict::Regular;
        return out;
    }
    let lx: Vec<f64> = traj.points.iter().map(|p| p.tau.ln()).collect();
    let lg: Vec<f64> = traj.points.iter().map(|p| p.log_abs_rhs).collect();
    if let Some(fit) = classify_tail(&lx, &lg, &th.tail) {
        if fit.class == TailClass::Convergent {
            out.certificate = Some(format!("rhs tail integrable: |rhs| ~ tau^(-{:.4})", fit.p));
        }
    }
    if plateau_change.abs() < th.plateau || out.certificate.is_some() {
        out.verdict = Verdict::Irregular;
    }
    out
}

/// ln â₀(τ) − ln â₀(τ₀) for κ ≡ 0.
pub fn linear_closed_form(m: u32, phi: &SlowGrowthFn, tau0: f64, tau: f64, m2: Option<&M2Constants>) -> Result<f64> {
    if !(tau0 > 0.0 && tau.is_finite() && tau >= tau0) {
        return Err(Error::Precondition(format!("bad interval [{tau0}, {tau}]")));
    }
    match m {
        1 => {
            let (u0, u1) = (tau0.ln(), tau.ln());
            let panels = ((u1 - u0) / 0.25).ceil().max(1.0) as usize;
            let v = -INV_4_SQRT_PI
                * gauss16().composite(u0, u1, panels, |u| {
                    let p = phi.phi(u.exp());
                    (u + p.ln() - p * p / 4.0).exp()
                });
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Quadrature("non-finite linear integral".into()))
            }
        }
        2 => {
            let c = m2.ok_or_else(|| Error::Config("m = 2 closed form needs (C3, C4)".into()))?;
            let sums = practical_period_sums(phi, c, tau0, tau)?;
            Ok(sums.last().map_or(0.0, |s| s.1))
        }
        _ => Err(Error::UnsupportedOrder(m)),
    }
}

/// Partial sums of ∫_{τ₀}^{τ} φ^{2/3}C₃cos(b₀φ^{4/3}+C₄)e^{−d₀φ^{4/3}}dτ at every
/// zero of the cosine in (τ₀, τ_max), then at τ_max.
pub fn practical_period_sums(phi: &SlowGrowthFn, c: &M2Constants, tau0: f64, tau_max: f64) -> Result<Vec<(f64, f64)>> {
    let (u0, u1) = (tau0.ln(), tau_max.ln());
    let theta = |u: f64| c.phase(phi.phi(u.exp()));
    let (t0, t1) = (theta(u0), theta(u1));
    if !(t0.is_finite() && t1.is_finite()) {
        return Err(Error::Quadrature("non-finite phase".into()));
    }
    let k_first = ((t0 - PI / 2.0) / PI).floor() as i64 + 1;
    let k_last = ((t1 - PI / 2.0) / PI).floor() as i64;
    if k_last - k_first > 1_000_000 {
        return Err(Error::Quadrature(format!("{} half periods exceed the summation budget", k_last - k_first)));
    }
    let mut breaks = vec![u0];
    let mut lo = u0;
    for k in k_first..=k_last {
        let target = PI / 2.0 + k as f64 * PI;
        let (mut a, mut b) = (lo, u1);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if theta(mid) < target {
                a = mid;
            } else {
                b = mid;
            }
        }
        let z = 0.5 * (a + b);
        if z > lo {
            breaks.push(z);
            lo = z;
        }
    }
    if u1 > lo {
        breaks.push(u1);
    }
    let integrand = |u: f64| {
        let p = phi.phi(u.exp());
        (u + c.log_envelope(p)).exp() * c.phase(p).cos()
    };
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(breaks.len());
    out.push((tau0, 0.0));
    for w in breaks.windows(2) {
        let panels = ((w[1] - w[0]) / 0.25).ceil().max(2.0) as usize;
        acc += gauss16().composite(w[0], w[1], panels, integrand);
        if !acc.is_finite() {
            return Err(Error::Quadrature(format!("period sum diverged at tau = {:e}", w[1].exp())));
        }
        out.push((w[1].exp(), acc));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationOutcome {
    pub ln_a0_initial: f64,
    /// ln â₀^{(n)} on the checkpoint grid, one row per iterate.
    pub iterates: Vec<Vec<(f64, f64)>>,
    pub certificate: Option<String>,
    pub iterations: usize,
    /// Fitted d I_n / d ln τ over the last decade, per iterate.
    pub trends: Vec<f64>,
    pub tail: Option<TailFit>,
}

fn cumulative_on_grid(us: &[f64], f: impl Fn(f64, usize) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; us.len()];
    for i in 1..us.len() {
        out[i] = out[i - 1] + gauss8().integrate(us[i - 1], us[i], |u| f(u, i - 1));
    }
    out
}

/// Lower-bound iterates for positive increasing κ: â₀^{(n+1)} integrates the
/// rhs with κ evaluated on â₀^{(n)}.
pub fn irregularity_iteration(
    ode: &CriterionODE,
    n_iters: usize,
    tau0: f64,
    tau_max: f64,
    ln_a0_init: f64,
) -> Result<IterationOutcome> {
    if ode.kind != CriterionKind::Multiplicative {
        return Err(Error::Precondition("irregularity iteration needs the multiplicative system".into()));
    }
    if ode.kappa.sign != KappaSign::PositiveIncreasing {
        return Err(Error::Precondition(format!("kappa '{}' is not positive and increasing", ode.kappa.name)));
    }
    if tau0 < ode.phi.tau_min || tau_max <= tau0 {
        return Err(Error::Precondition(format!("bad horizon [{tau0}, {tau_max}]")));
    }
    let us = log_grid(tau0, tau_max, 4 * CHECKPOINTS_PER_DECADE);
    let linear = cumulative_on_grid(&us, |u, _| {
        let t = u.exp();
        t * ode.linear_term(t)
    });
    let u_max = ode.kappa.u_max;
    let kappa_on = |l: f64| ode.kappa.clamped(l.exp().min(u_max));
    let end = us[us.len() - 1];
    let last: Vec<usize> = (0..us.len()).filter(|&i| us[i] >= end - LN_10 - 1e-12).collect();
    let trend_of = |vals: &[f64]| {
        let x: Vec<f64> = last.iter().map(|&i| us[i]).collect();
        let y: Vec<f64> = last.iter().map(|&i| vals[i]).collect();
        linear_fit(&x, &y).map_or(f64::NAN, |f| f.slope)
    };

    let mut current: Vec<f64> = linear.iter().map(|v| ln_a0_init + v).collect();
    let mut iterates = vec![current.clone()];
    let mut trends = Vec::new();
    let mut certificate = None;
    let mut tail = None;
    for n in 0..n_iters {
        let prev = current.clone();
        let nonlinear = cumulative_on_grid(&us, |u, i| {
            let s = (u - us[i]) / (us[i + 1] - us[i]);
            let l = prev[i] + s * (prev[i + 1] - prev[i]);
            u.exp() * kappa_on(l)
        });
        let integral: Vec<f64> = linear.iter().zip(&nonlinear).map(|(a, b)| a + b).collect();
        let trend = trend_of(&integral);
        trends.push(trend);
        current = integral.iter().map(|v| ln_a0_init + v).collect();
        iterates.push(current.clone());
        if trend > 0.0 {
            certificate = Some(format!(
                "iterate {}: the iterate integral grows over the last decade (slope {trend:.4e} per ln tau)",
                n + 1
            ));
            break;
        }
        // Sign-definite, integrable integrand: the integral stays bounded below.
        let g: Vec<f64> = us.iter().zip(&prev).map(|(&u, &l)| ode.linear_term(u.exp()) + kappa_on(l)).collect();
        let same_sign = last.iter().all(|&i| g[i] < 0.0) || last.iter().all(|&i| g[i] > 0.0);
        let lg: Vec<f64> = g.iter().map(|v| v.abs().ln()).collect();
        tail = classify_tail(&us, &lg, &TailRule::default());
        if same_sign && tail.is_some_and(|t| t.class == TailClass::Convergent) {
            certificate = Some(format!(
                "iterate {}: integrand tail integrable (p = {:.4}), integral bounded below by {:.4e}",
                n + 1,
                tail.map_or(f64::NAN, |t| t.p),
                integral.iter().copied().fold(f64::INFINITY, f64::min)
            ));
            break;
        }
    }
    let thin = |v: &Vec<f64>| us.iter().zip(v).step_by(4).map(|(&u, &l)| (u.exp(), l)).collect::<Vec<_>>();
    let outcome = IterationOutcome {
        ln_a0_initial: ln_a0_init,
        iterations: trends.len(),
        iterates: iterates.iter().map(thin).collect(),
        certificate,
        trends,
        tail,
    };
    if outcome.certificate.is_none() {
        return Err(Error::NoConvergence { iterations: outcome.iterations });
    }
    Ok(outcome)
}

/// Default initial amplitude of the iteration: min(u_max, 1/e).
pub fn iteration_start(kappa: &Kappa) -> f64 {
    kappa.u_max.min((-1f64).exp()).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OsgoodDini {
    pub diverges: bool,
    pub class: TailClass,
    pub fit: Option<TailFit>,
    /// ln of ∫ dz/(z|κ|) over the computed range.
    pub log_partial_integral: f64,
}

/// ∫₀₊ dz/(z|κ(z)|) over z ∈ [1e-300, u_max], in t = −ln z.
pub fn osgood_dini_check(kappa: &Kappa) -> OsgoodDini {
    let t_lo = -kappa.u_max.ln();
    let t_hi = 300.0 * LN_10;
    let n = 2000;
    let ts: Vec<f64> = (0..=n).map(|i| t_lo + (t_hi - t_lo) * i as f64 / n as f64).collect();
    let lh: Vec<f64> = ts.iter().map(|&t| -kappa.value((-t).exp()).abs().ln()).collect();
    // Log-sum-exp of the trapezoid sum.
    let dt = (t_hi - t_lo) / n as f64;
    let peak = lh.iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = lh.iter().filter(|v| v.is_finite()).map(|v| (v - peak).exp()).sum();
    let log_partial_integral = peak + (sum * dt).ln();
    // Classification in t > 1 only.
    let (lx, lg): (Vec<f64>, Vec<f64>) =
        ts.iter().zip(&lh).filter(|(t, _)| **t > 1.0).map(|(&t, &g)| (t.ln(), g)).unzip();
    let fit = classify_tail(&lx, &lg, &TailRule::default());
    let infinite = lh.contains(&f64::INFINITY);
    let class = if infinite { TailClass::Divergent } else { fit.map_or(TailClass::Undetermined, |f| f.class) };
    OsgoodDini { diverges: class == TailClass::Divergent, class, fit, log_partial_integral }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientRatio {
    pub max_ratio: f64,
    pub tau_at_max: f64,
    /// (τ, ½|κ(â₀)|â₀²φ²) along the linear comparison solution.
    pub series: Vec<(f64, f64)>,
}

/// Nonlinear/linear ratio of the bound gradient system along â₀ for κ ≡ 0.
pub fn gradient_negligibility(
    phi: &SlowGrowthFn,
    kappa: &Kappa,
    horizon: (f64, f64),
    ln_a0_init: f64,
) -> Result<GradientRatio> {
    let (tau0, tau1) = horizon;
    if tau0 < phi.tau_min || tau1 <= tau0 {
        return Err(Error::Precondition(format!("bad horizon [{tau0}, {tau1}]")));
    }
    let mut series = Vec::new();
    let mut prev_tau = tau0;
    let mut l = ln_a0_init;
    for u in log_grid(tau0, tau1, CHECKPOINTS_PER_DECADE) {
        let tau = u.exp();
        l += linear_closed_form(1, phi, prev_tau, tau, None)?;
        prev_tau = tau;
        let a = l.exp();
        let p = phi.phi(tau);
        series.push((tau, 0.5 * kappa.clamped(a).abs() * a * a * p * p));
    }
    let (tau_at_max, max_ratio) = series.iter().copied().fold((tau0, 0.0), |acc, s| if s.1 > acc.1 { s } else { acc });
    Ok(GradientRatio { max_ratio, tau_at_max, series })
}
