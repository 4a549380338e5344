//! Rescaled PDE on the fixed domain z ∈ [−1, 1] with y = zφ(τ):
//!
//! m = 1: w_τ = φ⁻²w_zz − ½zw_z + (φ′/φ)zw_z + R,
//! m = 2: w_τ = −φ⁻⁴w_zzzz − ¼zw_z + (φ′/φ)zw_z + R,
//!
//! with R = κ(w)w or κ(w)w(w_z/φ)^{2m}. SBDF2 in τ: principal term implicit,
//! drift and reaction explicit.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::blayer::{bl_profile, BLProfile};
use crate::criterion::{BiharmonicContext, CriterionKind, CriterionODE};
use crate::error::{Error, Result};
use crate::funcs::{Kappa, SlowGrowthFn};
use crate::numerics::fit::linear_fit;
use crate::numerics::linalg::{least_squares, solve_tridiagonal, Banded};
use crate::numerics::quad::simpson;
use crate::spectral::{build_kernel, KernelModel, QuadSettings};

pub type SourceFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialShape {
    /// (1 − z¹⁶)^m.
    Plateau,
    /// cos^m(πz/2).
    Bump,
    /// g₀(φ(τ₀)^{stretch}(1 − |z|)).
    BoundaryLayer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitialData {
    pub shape: InitialShape,
    pub amplitude: f64,
}

#[derive(Clone)]
pub struct SimConfig {
    pub m: u32,
    pub phi: SlowGrowthFn,
    pub kappa: Kappa,
    pub kind: CriterionKind,
    pub grid_points: usize,
    pub tau_span: (f64, f64),
    pub dtau: f64,
    pub initial: InitialData,
    /// Log-uniform snapshot count over `tau_span`.
    pub snapshots: usize,
    /// τ spacing of diagnostic samples.
    pub diag_interval: f64,
    /// Constant φ runs skip the slow-growth expectation.
    pub validation: bool,
    /// Additive forcing f(z, τ), for manufactured solutions.
    pub source: Option<SourceFn>,
}

impl std::fmt::Debug for SimConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SimConfig")
            .field("m", &self.m)
            .field("phi", &self.phi.name)
            .field("kappa", &self.kappa.name)
            .field("kind", &self.kind)
            .field("grid_points", &self.grid_points)
            .field("tau_span", &self.tau_span)
            .field("dtau", &self.dtau)
            .field("initial", &self.initial)
            .finish()
    }
}

impl SimConfig {
    pub fn new(m: u32, phi: SlowGrowthFn, tau_span: (f64, f64)) -> Self {
        Self {
            m,
            phi,
            kappa: Kappa::zero(),
            kind: CriterionKind::Multiplicative,
            grid_points: 801,
            tau_span,
            dtau: 2.5e-3,
            initial: InitialData { shape: InitialShape::BoundaryLayer, amplitude: 1.0 },
            snapshots: 11,
            diag_interval: 0.05,
            validation: false,
            source: None,
        }
    }

    pub fn dz(&self) -> f64 {
        2.0 / (self.grid_points - 1) as f64
    }

    pub fn z(&self) -> Vec<f64> {
        let h = self.dz();
        (0..self.grid_points).map(|j| -1.0 + j as f64 * h).collect()
    }

    /// Step actually used: `dtau` capped by the drift CFL |z|c·dτ/dz ≤ 1/2.
    pub fn effective_dtau(&self) -> f64 {
        let c = if self.m == 1 { 0.5 } else { 0.25 };
        self.dtau.min(0.5 * self.dz() / c)
    }

    fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.m) {
            return Err(Error::Config(format!("unsupported order m = {}", self.m)));
        }
        if self.grid_points < 201 || self.grid_points.is_multiple_of(2) {
            return Err(Error::Config(format!("grid_points = {} must be odd and at least 201", self.grid_points)));
        }
        let (t0, t1) = self.tau_span;
        if t0 < self.phi.tau_min || t1 <= t0 {
            return Err(Error::Config(format!("bad tau span [{t0}, {t1}]")));
        }
        if !(self.dtau > 0.0 && self.diag_interval > 0.0) {
            return Err(Error::Config("dtau and diag_interval must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub tau: f64,
    pub w: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryDerivs {
    pub tau: f64,
    /// v_y at y = φ (m = 1) or v_yy (m = 2).
    pub first: f64,
    /// v_yyy at y = φ (m = 2 only).
    pub second: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BLFit {
    pub rho_opt: f64,
    pub sup_deviation: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdeTrajectory {
    pub m: u32,
    pub z: Vec<f64>,
    pub dtau: f64,
    pub steps: usize,
    pub snapshots: Vec<Snapshot>,
    pub vertex_values: Vec<(f64, f64)>,
    pub a0_series: Vec<(f64, f64)>,
    pub boundary_derivs: Vec<BoundaryDerivs>,
    pub bl_deviation: Vec<(f64, f64)>,
    pub rho_series: Vec<(f64, f64)>,
    pub sup_series: Vec<(f64, f64)>,
    /// Largest |w(z) − w(−z)| over all diagnostic samples.
    pub max_asymmetry: f64,
    /// Sign changes of the grid vector at each diagnostic sample.
    pub sign_changes: Vec<usize>,
}

impl PdeTrajectory {
    pub fn series_csv(&self) -> String {
        let mut s = String::from("tau,vertex,a0,sup\n");
        for ((v, a), u) in self.vertex_values.iter().zip(&self.a0_series).zip(&self.sup_series) {
            s.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e}\n", v.0, v.1, a.1, u.1));
        }
        s
    }

    pub fn snapshots_csv(&self) -> String {
        let mut s = String::from("tau,z,w\n");
        for snap in &self.snapshots {
            for (z, w) in self.z.iter().zip(&snap.w) {
                s.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", snap.tau, z, w));
            }
        }
        s
    }

    /// Linear interpolation of the a₀ series.
    pub fn a0_at(&self, tau: f64) -> Option<f64> {
        let s = &self.a0_series;
        let i = s.iter().position(|p| p.0 >= tau)?;
        if i == 0 {
            return (s[0].0 == tau).then_some(s[0].1);
        }
        let (a, b) = (s[i - 1], s[i]);
        Some(a.1 + (b.1 - a.1) * (tau - a.0) / (b.0 - a.0))
    }
}

/// a₀ = ∫_{−φ}^{φ} v F dy = φ∫_{−1}^{1} w(z) F(zφ) dz, by Simpson's rule.
pub fn project_a0(w: &[f64], kernel: &KernelModel, phi: f64) -> f64 {
    project_with(w, phi, |y| kernel.value(y))
}

fn project_with(w: &[f64], phi: f64, kernel: impl Fn(f64) -> f64) -> f64 {
    let n = w.len();
    let h = 2.0 / (n - 1) as f64;
    let half = (n - 1) / 2;
    // Kernel is even: evaluate once per |z|.
    let kz: Vec<f64> = (0..=half).map(|j| kernel(j as f64 * h * phi)).collect();
    let vals: Vec<f64> = (0..n).map(|j| w[j] * kz[(j as isize - half as isize).unsigned_abs()]).collect();
    phi * simpson(&vals, h)
}

/// Least-squares amplitude of w ≈ ρ g₀(ξ), ξ = φ^{stretch}(1 − z), and the sup
/// deviation of w/ρ from g₀ on ξ ∈ [0, 10].
pub fn extract_boundary_layer(w: &[f64], phi: f64, blp: &BLProfile) -> Result<BLFit> {
    let n = w.len();
    let h = 2.0 / (n - 1) as f64;
    let scale = phi.powf(blp.stretch_exponent);
    let mut xs = Vec::new();
    for k in 0..n {
        let xi = scale * k as f64 * h;
        if xi > 10.0 {
            break;
        }
        xs.push((xi, w[n - 1 - k]));
    }
    if xs.len() < 20 {
        return Err(Error::Resolution(format!(
            "boundary layer has {} grid points with xi <= 10 (need 20); refine to dz < {:.3e}",
            xs.len(),
            10.0 / (20.0 * scale)
        )));
    }
    let (num, den) = xs.iter().fold((0.0, 0.0), |(a, b), &(xi, v)| {
        let g = blp.g0(xi);
        (a + v * g, b + g * g)
    });
    let rho_opt = num / den;
    let sup_deviation = xs.iter().map(|&(xi, v)| (v / rho_opt - blp.g0(xi)).abs()).fold(0.0, f64::max);
    Ok(BLFit { rho_opt, sup_deviation, points: xs.len() })
}

fn sign_changes(w: &[f64]) -> usize {
    let mut last = 0.0;
    let mut count = 0;
    for &v in w {
        if v != 0.0 {
            if last != 0.0 && v * last < 0.0 {
                count += 1;
            }
            last = v;
        }
    }
    count
}

struct Stepper<'a> {
    cfg: &'a SimConfig,
    z: Vec<f64>,
    dz: f64,
}

impl Stepper<'_> {
    /// Explicit part: drift, reaction and forcing at τ.
    fn explicit(&self, w: &[f64], tau: f64) -> Vec<f64> {
        let cfg = self.cfg;
        let n = w.len();
        let phi = cfg.phi.phi(tau);
        let base = if cfg.m == 1 { -0.5 } else { -0.25 };
        let c = base + cfg.phi.dphi(tau) / phi;
        let mut out = vec![0.0; n];
        for j in 1..n - 1 {
            let wz = (w[j + 1] - w[j - 1]) / (2.0 * self.dz);
            let mut r = c * self.z[j] * wz;
            if !cfg.kappa.linear {
                let k = cfg.kappa.clamped(w[j]) * w[j];
                r += match cfg.kind {
                    CriterionKind::Multiplicative => k,
                    CriterionKind::Gradient => k * (wz / phi).powi(2 * cfg.m as i32),
                };
            }
            if let Some(f) = &cfg.source {
                r += f(self.z[j], tau);
            }
            out[j] = r;
        }
        out
    }

    /// Solves (σI − L(τ)) x = rhs on the interior, L the principal term.
    fn implicit_solve(&self, sigma: f64, tau: f64, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = rhs.len();
        let ni = n - 2;
        let phi = self.cfg.phi.phi(tau);
        let interior = &rhs[1..n - 1];
        let x = if self.cfg.m == 1 {
            let d = 1.0 / (phi * phi * self.dz * self.dz);
            let lower = vec![-d; ni];
            let upper = vec![-d; ni];
            let diag = vec![sigma + 2.0 * d; ni];
            solve_tridiagonal(&lower, &diag, &upper, interior)
        } else {
            let d = 1.0 / (phi.powi(4) * self.dz.powi(4));
            let mut a = Banded::zeros(ni, 2, 2);
            for i in 0..ni {
                let stencil = [1.0, -4.0, 6.0, -4.0, 1.0];
                for (o, &s) in stencil.iter().enumerate() {
                    let col = i as isize + o as isize - 2;
                    // Clamped ghost: w_{−1} = w_1 folds onto the first interior node.
                    let col = if col == -2 {
                        0
                    } else if col == ni as isize + 1 {
                        ni as isize - 1
                    } else {
                        col
                    };
                    if col >= 0 && col < ni as isize {
                        a.add(i, col as usize, d * s);
                    }
                }
                a.add(i, i, sigma);
            }
            a.factor().map(|lu| lu.solve(interior))
        }
        .ok_or_else(|| Error::StepFailure { tau, reason: "singular implicit system".into() })?;
        let mut out = vec![0.0; n];
        out[1..n - 1].copy_from_slice(&x);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::StepFailure { tau, reason: "non-finite implicit solution".into() });
        }
        Ok(out)
    }
}

fn initial_profile(cfg: &SimConfig, z: &[f64], blp: &BLProfile) -> Vec<f64> {
    let m = cfg.m as i32;
    let a = cfg.initial.amplitude;
    let phi0 = cfg.phi.phi(cfg.tau_span.0);
    let n = z.len();
    let mut w: Vec<f64> = z
        .iter()
        .map(|&x| match cfg.initial.shape {
            InitialShape::Plateau => a * (1.0 - x.powi(16)).powi(m),
            InitialShape::Bump => a * (std::f64::consts::FRAC_PI_2 * x).cos().powi(m),
            InitialShape::BoundaryLayer => a * blp.g0(phi0.powf(blp.stretch_exponent) * (1.0 - x.abs())),
        })
        .collect();
    w[0] = 0.0;
    w[n - 1] = 0.0;
    w
}

/// One-sided boundary derivatives at z = 1 mapped to y.
pub fn boundary_derivs(w: &[f64], phi: f64, m: u32, tau: f64) -> BoundaryDerivs {
    let n = w.len();
    let dz = 2.0 / (n - 1) as f64;
    let b = |k: usize| w[n - 1 - k];
    if m == 1 {
        let wz = (25.0 * b(0) - 48.0 * b(1) + 36.0 * b(2) - 16.0 * b(3) + 3.0 * b(4)) / (12.0 * dz);
        BoundaryDerivs { tau, first: wz / phi, second: None }
    } else {
        // w(1 − s) ≈ Σ_{k=2..8} c_k s^k over ξ ≤ 4; the nodes next to the wall
        // carry the ghost-point closure error, so a short stencil is biased.
        let cnt = ((4.0 / (phi.powf(4.0 / 3.0) * dz)).round() as usize).clamp(12, n / 4);
        let smax = cnt as f64 * dz;
        let rows: Vec<Vec<f64>> =
            (1..=cnt).map(|k| (2..=8).map(|p| (k as f64 * dz / smax).powi(p)).collect()).collect();
        let rhs: Vec<f64> = (1..=cnt).map(b).collect();
        let c = least_squares(&rows, &rhs).unwrap_or_else(|| vec![f64::NAN; 7]);
        let c = [c[0] / smax.powi(2), c[1] / smax.powi(3)];
        BoundaryDerivs { tau, first: 2.0 * c[0] / (phi * phi), second: Some(-6.0 * c[1] / phi.powi(3)) }
    }
}

pub fn run(cfg: &SimConfig) -> Result<PdeTrajectory> {
    cfg.validate()?;
    let blp = bl_profile(cfg.m)?;
    let kernel_fn: Box<dyn Fn(f64) -> f64> = if cfg.m == 1 {
        let k = build_kernel(1, QuadSettings::default())?;
        Box::new(move |y| k.value(y))
    } else {
        let ctx = BiharmonicContext::shared()?;
        Box::new(move |y| ctx.kernel_value(y))
    };
    let z = cfg.z();
    let dz = cfg.dz();
    let n = z.len();
    let dt = cfg.effective_dtau();
    let (t0, t1) = cfg.tau_span;
    let steps = ((t1 - t0) / dt).ceil() as usize;
    let dt = (t1 - t0) / steps as f64;
    let st = Stepper { cfg, z: z.clone(), dz };

    let checkpoints: Vec<f64> = (0..cfg.snapshots.max(2))
        .map(|i| (t0.ln() + (t1.ln() - t0.ln()) * i as f64 / (cfg.snapshots.max(2) - 1) as f64).exp())
        .collect();
    let diag_every = ((cfg.diag_interval / dt).round() as usize).max(1);

    let mut traj = PdeTrajectory {
        m: cfg.m,
        z: z.clone(),
        dtau: dt,
        steps,
        snapshots: Vec::new(),
        vertex_values: Vec::new(),
        a0_series: Vec::new(),
        boundary_derivs: Vec::new(),
        bl_deviation: Vec::new(),
        rho_series: Vec::new(),
        sup_series: Vec::new(),
        max_asymmetry: 0.0,
        sign_changes: Vec::new(),
    };
    let mut next_snap = 0;
    let mut record = |traj: &mut PdeTrajectory, w: &[f64], tau: f64, force_snap: bool| {
        let phi = cfg.phi.phi(tau);
        traj.vertex_values.push((tau, w[(n - 1) / 2]));
        traj.a0_series.push((tau, project_with(w, phi, &kernel_fn)));
        traj.sup_series.push((tau, w.iter().fold(0.0f64, |a, v| a.max(v.abs()))));
        traj.boundary_derivs.push(boundary_derivs(w, phi, cfg.m, tau));
        if let Ok(fit) = extract_boundary_layer(w, phi, &blp) {
            traj.bl_deviation.push((tau, fit.sup_deviation));
            traj.rho_series.push((tau, fit.rho_opt));
        }
        let asym = (0..n).map(|j| (w[j] - w[n - 1 - j]).abs()).fold(0.0, f64::max);
        traj.max_asymmetry = traj.max_asymmetry.max(asym);
        traj.sign_changes.push(sign_changes(w));
        while next_snap < checkpoints.len() && (tau >= checkpoints[next_snap] * (1.0 - 1e-12) || force_snap) {
            traj.snapshots.push(Snapshot { tau, w: w.to_vec() });
            next_snap += 1;
            if force_snap {
                break;
            }
        }
    };

    let w0 = initial_profile(cfg, &z, &blp);
    record(&mut traj, &w0, t0, false);
    let mut e_prev = st.explicit(&w0, t0);
    // IMEX Euler start.
    let rhs: Vec<f64> = (0..n).map(|j| w0[j] / dt + e_prev[j]).collect();
    let mut w_prev = w0;
    let mut w = st.implicit_solve(1.0 / dt, t0 + dt, &rhs)?;
    for k in 1..=steps {
        let tau = t0 + k as f64 * dt;
        let sup = w.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !sup.is_finite() || sup > 1e6 {
            return Err(Error::Blowup { tau, sup });
        }
        if k % diag_every == 0 || k == steps {
            record(&mut traj, &w, tau, k == steps);
        }
        if k == steps {
            break;
        }
        let e = st.explicit(&w, tau);
        let rhs: Vec<f64> =
            (0..n).map(|j| (4.0 * w[j] - w_prev[j]) / (2.0 * dt) + 2.0 * e[j] - e_prev[j]).collect();
        let next = st.implicit_solve(1.5 / dt, tau + dt, &rhs)?;
        w_prev = std::mem::replace(&mut w, next);
        e_prev = e;
    }
    Ok(traj)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub window: (f64, f64),
    pub valid: bool,
    pub note: Option<String>,
    /// (τ, simulated d ln a₀/dτ, criterion rhs).
    pub samples: Vec<(f64, f64, f64)>,
    pub max_relative: f64,
    pub mean_relative: f64,
    /// Mean of simulated slope / rhs.
    pub mean_ratio: f64,
}

/// Central-difference slope of ln a₀ against the criterion rhs at (τ, ln a₀).
pub fn compare_with_criterion(traj: &PdeTrajectory, ode: &CriterionODE, window: (f64, f64)) -> ComparisonReport {
    let pts: Vec<(f64, f64)> =
        traj.a0_series.iter().copied().filter(|p| p.0 >= window.0 - 1e-9 && p.0 <= window.1 + 1e-9).collect();
    let mut rep = ComparisonReport {
        window,
        valid: false,
        note: None,
        samples: Vec::new(),
        max_relative: f64::NAN,
        mean_relative: f64::NAN,
        mean_ratio: f64::NAN,
    };
    if pts.len() < 3 {
        rep.note = Some("fewer than three a0 samples in the window".into());
        return rep;
    }
    if pts.iter().any(|p| !(p.1 > 0.0)) {
        rep.note = Some("a0 is not positive on the window".into());
        return rep;
    }
    for w in pts.windows(3) {
        let slope = (w[2].1.ln() - w[0].1.ln()) / (w[2].0 - w[0].0);
        let rhs = ode.rhs(w[1].0, w[1].1.ln());
        rep.samples.push((w[1].0, slope, rhs));
    }
    let rel: Vec<f64> = rep.samples.iter().map(|s| ((s.1 - s.2) / s.2).abs()).collect();
    rep.max_relative = rel.iter().copied().fold(0.0, f64::max);
    rep.mean_relative = rel.iter().sum::<f64>() / rel.len() as f64;
    rep.mean_ratio = rep.samples.iter().map(|s| s.1 / s.2).sum::<f64>() / rep.samples.len() as f64;
    rep.valid = rep.samples.iter().all(|s| s.1.is_finite() && s.2.is_finite() && s.2 != 0.0);
    rep
}

/// Fitted d ln(sup|w|)/dτ over the last `tail` τ units.
pub fn sup_decay_rate(traj: &PdeTrajectory, tail: f64) -> Option<f64> {
    let end = traj.sup_series.last()?.0;
    let (x, y): (Vec<f64>, Vec<f64>) =
        traj.sup_series.iter().filter(|p| p.0 >= end - tail && p.1 > 0.0).map(|p| (p.0, p.1.ln())).unzip();
    linear_fit(&x, &y).map(|f| f.slope)
}
