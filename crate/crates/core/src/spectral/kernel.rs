use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::fit::{linear_fit, prony_damped_oscillation};
use crate::numerics::linalg::least_squares;
use crate::numerics::quad::gauss16;

/// WKBJ constants of the rescaled kernel of order `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelConstants {
    pub m: u32,
    pub alpha: f64,
    pub d0: f64,
    pub b0: f64,
    pub delta0: f64,
}

impl KernelConstants {
    pub fn new(m: u32) -> Self {
        assert!(m >= 1, "order must be positive");
        let mf = m as f64;
        let alpha = 2.0 * mf / (2.0 * mf - 1.0);
        let amp = (2.0 * mf - 1.0) / (2.0 * mf).powf(alpha);
        let theta = PI / (2.0 * (2.0 * mf - 1.0));
        let (d0, b0) = if m == 1 { (amp, 0.0) } else { (amp * theta.sin(), amp * theta.cos()) };
        Self { m, alpha, d0, b0, delta0: (mf - 1.0) / (2.0 * mf - 1.0) }
    }
}

pub fn kernel_constants(m: u32) -> KernelConstants {
    KernelConstants::new(m)
}

/// How the Fourier integral defining F is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadMethod {
    /// Cosine transform on [0, s_max] along the real axis.
    RealAxis,
    /// Same integral on the horizontal line through the steepest-descent
    /// saddle; no cancellation in the decaying tail.
    ShiftedContour,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadSettings {
    pub method: QuadMethod,
    /// Extra Gauss panels on top of the phase-resolving count.
    pub extra_panels: usize,
    /// Largest admissible bound on the truncated tail.
    pub tail_tolerance: f64,
}

impl Default for QuadSettings {
    fn default() -> Self {
        Self { method: QuadMethod::ShiftedContour, extra_panels: 8, tail_tolerance: 1e-14 }
    }
}

/// Rescaled fundamental-solution kernel F of u_t = −(−D²)^m u in one dimension.
#[derive(Debug, Clone, Serialize)]
pub struct KernelModel {
    pub constants: KernelConstants,
    /// α₀ fixed by ∫F = 1.
    pub normalizer: f64,
    pub weight_exponent: f64,
    pub s_max: f64,
    pub quad: QuadSettings,
}

/// Highest derivative order exposed by the evaluators.
pub const MAX_DERIV: usize = 12;

impl KernelModel {
    pub fn m(&self) -> u32 {
        self.constants.m
    }

    pub fn value(&self, y: f64) -> f64 {
        self.normalizer * self.raw_derivs(y, 0)[0]
    }

    pub fn deriv(&self, y: f64, order: usize) -> f64 {
        self.normalizer * self.raw_derivs(y, order)[order]
    }

    /// F, F′, …, F^{(kmax)} at `y`.
    pub fn derivs(&self, y: f64, kmax: usize) -> Vec<f64> {
        let mut v = self.raw_derivs(y, kmax);
        for x in &mut v {
            *x *= self.normalizer;
        }
        v
    }

    /// ρ*(y) = e^{−a_w|y|^α}.
    pub fn adjoint_weight(&self, y: f64) -> f64 {
        (-self.weight_exponent * y.abs().powf(self.constants.alpha)).exp()
    }

    fn raw_derivs(&self, y: f64, kmax: usize) -> Vec<f64> {
        assert!(kmax <= MAX_DERIV);
        let mut out = match self.quad.method {
            QuadMethod::RealAxis => real_axis(self.constants.m, self.s_max, y.abs(), kmax, self.quad.extra_panels),
            QuadMethod::ShiftedContour => shifted_contour(self.constants.m, y.abs(), kmax, self.quad.extra_panels),
        };
        if y < 0.0 {
            for (k, v) in out.iter_mut().enumerate() {
                if k % 2 == 1 {
                    *v = -*v;
                }
            }
        }
        out
    }
}

fn real_axis(m: u32, s_max: f64, y: f64, kmax: usize, extra: usize) -> Vec<f64> {
    let panels = (s_max * y / PI).ceil() as usize + extra;
    let h = s_max / panels as f64;
    let two_m = 2 * m as i32;
    let mut acc = vec![0.0; kmax + 1];
    for p in 0..panels {
        let lo = p as f64 * h;
        for (s, w) in gauss16().mapped(lo, lo + h) {
            let damp = w * (-s.powi(two_m)).exp();
            let mut sk = 1.0;
            for (k, a) in acc.iter_mut().enumerate() {
                *a += damp * sk * (s * y + k as f64 * PI / 2.0).cos();
                sk *= s;
            }
        }
    }
    acc
}

/// Imaginary part of the saddle of −s^{2m} + isy.
fn saddle_shift(m: u32, y: f64) -> f64 {
    let mf = m as f64;
    (y / (2.0 * mf)).powf(1.0 / (2.0 * mf - 1.0)) * (PI / (2.0 * (2.0 * mf - 1.0))).sin()
}

fn shifted_contour(m: u32, y: f64, kmax: usize, extra: usize) -> Vec<f64> {
    let sigma = saddle_shift(m, y);
    let two_m = 2 * m as i32;
    let log_mag = |t: f64| {
        let s = Complex64::new(t, sigma);
        (-s.powi(two_m) + Complex64::i() * s * y).re
    };
    let peak = {
        let mut best = log_mag(0.0);
        let mut t = 0.0;
        while t < 10.0 + sigma * 4.0 {
            best = best.max(log_mag(t));
            t += 0.02;
        }
        best
    };
    // Truncate where the integrand is 1e-40 below its peak and falling.
    let mut t_end = 0.5;
    while log_mag(t_end) > peak - 92.0 || log_mag(t_end + 0.5) > log_mag(t_end) {
        t_end += 0.25;
    }
    let rate = y + 2.0 * m as f64 * (t_end + sigma).powi(two_m - 1);
    let panels = (t_end * rate / PI).ceil() as usize + extra;
    let h = t_end / panels as f64;
    let mut acc = vec![Complex64::new(0.0, 0.0); kmax + 1];
    for p in 0..panels {
        let lo = p as f64 * h;
        for (t, w) in gauss16().mapped(lo, lo + h) {
            let s = Complex64::new(t, sigma);
            let base = (-s.powi(two_m) + Complex64::i() * s * y).exp() * w;
            let is = Complex64::i() * s;
            let mut term = base;
            for a in acc.iter_mut() {
                *a += term;
                term *= is;
            }
        }
    }
    // ∫_ℝ = 2 Re ∫_0^∞ by conjugate symmetry; F = (α₀/2)∫_ℝ.
    acc.iter().map(|c| c.re).collect()
}

/// Builds the kernel of order `m` and fixes α₀ by quadrature of ∫F.
pub fn build_kernel(m: u32, quad: QuadSettings) -> Result<KernelModel> {
    if !(1..=2).contains(&m) {
        return Err(Error::UnsupportedOrder(m));
    }
    let constants = KernelConstants::new(m);
    let s_max = (40.0 * 10f64.ln()).powf(1.0 / (2.0 * m as f64));
    let tail = s_max.powi(MAX_DERIV as i32) * (-s_max.powi(2 * m as i32)).exp()
        / (2.0 * m as f64 * s_max.powi(2 * m as i32 - 1));
    if quad.method == QuadMethod::RealAxis && tail > quad.tail_tolerance {
        return Err(Error::Quadrature(format!("truncated tail bound {tail:e} exceeds tolerance")));
    }
    let mut model = KernelModel { constants, normalizer: 1.0, weight_exponent: constants.d0, s_max, quad };
    let y_max = integration_radius(&constants, 1e-22);
    let mass = integrate_symmetric(y_max, |y| model.value(y));
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::Quadrature(format!("kernel mass {mass} is not positive")));
    }
    model.normalizer = 1.0 / mass;
    Ok(model)
}

/// Radius beyond which the envelope e^{−d₀|y|^α} drops below `eps`.
pub fn integration_radius(c: &KernelConstants, eps: f64) -> f64 {
    ((-eps.ln()) / c.d0).powf(1.0 / c.alpha).ceil()
}

/// ∫_{−Y}^{Y} f with unit-width Gauss panels.
pub fn integrate_symmetric<F: FnMut(f64) -> f64>(y_max: f64, f: F) -> f64 {
    let panels = (2.0 * y_max).ceil() as usize;
    gauss16().composite(-y_max, y_max, panels, f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticFit {
    pub d_fit: f64,
    pub b_fit: f64,
    pub c1: f64,
    pub c2: f64,
    pub relative_residual: f64,
}

/// Fits F(y) ≈ y^{−δ₀}e^{−d y^α}[C₁ sin(b y^α) + C₂ cos(b y^α)] on `window`.
pub fn kernel_asymptotic_fit(model: &KernelModel, window: (f64, f64)) -> Result<AsymptoticFit> {
    let c = model.constants;
    if c.m != 2 {
        return Err(Error::Fit(format!("order m = {} has no oscillating tail to fit", c.m)));
    }
    let (lo, hi) = window;
    if !(lo >= 4.0 && hi <= 25.0 && hi > lo) {
        return Err(Error::Precondition(format!("fit window [{lo}, {hi}] must lie in [4, 25]")));
    }
    let n = 400;
    let x_lo = lo.powf(c.alpha);
    let dx = (hi.powf(c.alpha) - x_lo) / (n - 1) as f64;
    let h: Vec<f64> = (0..n)
        .map(|i| {
            let x = x_lo + i as f64 * dx;
            let y = x.powf(1.0 / c.alpha);
            model.value(y) * y.powf(c.delta0)
        })
        .collect();
    let f = prony_damped_oscillation(x_lo, dx, &h).ok_or_else(|| Error::Fit("damped-mode fit failed".into()))?;
    if f.relative_residual > 0.1 {
        return Err(Error::Fit(format!("residual {:.3} exceeds 10% of the envelope", f.relative_residual)));
    }
    Ok(AsymptoticFit { d_fit: f.decay, b_fit: f.frequency, c1: f.c_sin, c2: f.c_cos, relative_residual: f.relative_residual })
}

/// Envelope |F(y)| ≤ D e^{−d|y|^α} on `window`, from a line through the log
/// of local maxima, with D raised until the bound holds at every sample.
pub fn envelope_bound(model: &KernelModel, window: (f64, f64)) -> Result<(f64, f64)> {
    let alpha = model.constants.alpha;
    let n = 2000;
    let ys: Vec<f64> = (0..n).map(|i| window.0 + (window.1 - window.0) * i as f64 / (n - 1) as f64).collect();
    let vals: Vec<f64> = ys.iter().map(|&y| model.value(y).abs()).collect();
    let mut xs = Vec::new();
    let mut ls = Vec::new();
    for i in 1..n - 1 {
        if vals[i] >= vals[i - 1] && vals[i] >= vals[i + 1] && vals[i] > 0.0 {
            xs.push(ys[i].powf(alpha));
            ls.push(vals[i].ln());
        }
    }
    let line = linear_fit(&xs, &ls).ok_or_else(|| Error::Fit("too few envelope maxima".into()))?;
    let d = -line.slope;
    let big_d = ys
        .iter()
        .zip(&vals)
        .map(|(&y, &v)| v * (d * y.powf(alpha)).exp())
        .fold(0.0, f64::max);
    Ok((big_d, d))
}

/// C₁, C₂ of F(y) ≈ y^{−δ₀}e^{−d₀y^α}[C₁ sin(b₀y^α) + C₂ cos(b₀y^α)] by linear
/// least squares with the exact WKBJ rates.
pub fn kernel_tail_amplitudes(model: &KernelModel, window: (f64, f64)) -> Result<(f64, f64)> {
    let c = model.constants;
    if c.m != 2 {
        return Err(Error::Fit(format!("order m = {} has no oscillating tail to fit", c.m)));
    }
    let (lo, hi) = window;
    if !(lo >= 4.0 && hi <= 25.0 && hi > lo) {
        return Err(Error::Precondition(format!("fit window [{lo}, {hi}] must lie in [4, 25]")));
    }
    let n = 400;
    let mut rows = Vec::with_capacity(n);
    let mut rhs = Vec::with_capacity(n);
    for i in 0..n {
        let y = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let x = y.powf(c.alpha);
        rows.push(vec![(c.b0 * x).sin(), (c.b0 * x).cos()]);
        rhs.push(model.value(y) * y.powf(c.delta0) * (c.d0 * x).exp());
    }
    let sol = least_squares(&rows, &rhs).ok_or_else(|| Error::Fit("singular amplitude fit".into()))?;
    Ok((sol[0], sol[1]))
}

/// F, F′, F″, F‴ tabulated on a uniform grid of [0, y_max], evaluated by
/// piecewise cubic Hermite interpolation and extended to y < 0 by parity.
#[derive(Debug, Clone)]
pub struct KernelTable {
    pub h: f64,
    pub y_max: f64,
    data: Vec<[f64; 4]>,
}

impl KernelTable {
    pub fn build(model: &KernelModel, y_max: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && y_max > h) {
            return Err(Error::Precondition(format!("bad table grid h = {h}, y_max = {y_max}")));
        }
        let n = (y_max / h).ceil() as usize;
        let h = y_max / n as f64;
        let data: Vec<[f64; 4]> = (0..=n)
            .map(|i| {
                let d = model.derivs(i as f64 * h, 3);
                [d[0], d[1], d[2], d[3]]
            })
            .collect();
        if data.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Quadrature("non-finite kernel table entry".into()));
        }
        Ok(Self { h, y_max, data })
    }

    pub fn contains(&self, y: f64) -> bool {
        y.abs() <= self.y_max
    }

    fn hermite(&self, y: f64, k: usize) -> f64 {
        let x = y.abs().min(self.y_max);
        let i = ((x / self.h) as usize).min(self.data.len() - 2);
        let t = x / self.h - i as f64;
        let (a, b) = (&self.data[i], &self.data[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let v = h00 * a[k] + h10 * self.h * a[k + 1] + h01 * b[k] + h11 * self.h * b[k + 1];
        if y < 0.0 && k % 2 == 1 {
            -v
        } else {
            v
        }
    }

    pub fn value(&self, y: f64) -> f64 {
        self.hermite(y, 0)
    }

    pub fn d1(&self, y: f64) -> f64 {
        self.hermite(y, 1)
    }
}
