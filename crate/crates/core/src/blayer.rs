//! Boundary-layer profiles g₀ and the limit equation h_s = A h near the
//! lateral boundary.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::linalg::{solve_tridiagonal, Banded};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharacteristicRoot {
    pub re: f64,
    pub im: f64,
    /// Used by the decaying profile g₀.
    pub decaying: bool,
}

impl CharacteristicRoot {
    pub fn complex(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Roots of the symbol of A: λ² + λ/2 (m = 1) or −λ⁴ + λ/4 (m = 2).
pub fn characteristic_roots(m: u32) -> Result<Vec<CharacteristicRoot>> {
    let root = |z: Complex64| CharacteristicRoot { re: z.re, im: z.im, decaying: z.re < 0.0 };
    match m {
        1 => Ok(vec![root(Complex64::new(0.0, 0.0)), root(Complex64::new(-0.5, 0.0))]),
        2 => {
            let r = 4f64.powf(-1.0 / 3.0);
            let w = Complex64::from_polar(r, 2.0 * std::f64::consts::PI / 3.0);
            Ok(vec![
                root(Complex64::new(0.0, 0.0)),
                root(Complex64::new(r, 0.0)),
                root(w),
                root(w.conj()),
            ])
        }
        _ => Err(Error::UnsupportedOrder(m)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BLProfile {
    pub m: u32,
    /// (g₀′(0), g₀″(0), g₀‴(0)).
    pub derivs_at_0: [f64; 3],
    pub roots: Vec<CharacteristicRoot>,
    /// ξ = φ^{stretch}(1 − z).
    pub stretch_exponent: f64,
    #[serde(skip)]
    lambda: Complex64,
    #[serde(skip)]
    amplitude: Complex64,
}

impl BLProfile {
    /// g₀(ξ) = 1 − Re[C e^{λξ}].
    pub fn g0(&self, xi: f64) -> f64 {
        1.0 - (self.amplitude * (self.lambda * xi).exp()).re
    }

    pub fn deriv(&self, xi: f64, n: u32) -> f64 {
        if n == 0 {
            return self.g0(xi);
        }
        -(self.amplitude * self.lambda.powu(n) * (self.lambda * xi).exp()).re
    }

    /// A g₀ evaluated from the analytic derivatives.
    pub fn residual(&self, xi: f64) -> f64 {
        match self.m {
            1 => self.deriv(xi, 2) + 0.5 * self.deriv(xi, 1),
            _ => -self.deriv(xi, 4) + 0.25 * self.deriv(xi, 1),
        }
    }

    /// Matching constant γ₁: g₀′(0) for m = 1, g₀″(0) for m = 2.
    pub fn gamma1(&self) -> f64 {
        if self.m == 1 {
            self.derivs_at_0[0]
        } else {
            self.derivs_at_0[1]
        }
    }

    /// γ₂ = g₀‴(0) (m = 2 only).
    pub fn gamma2(&self) -> Option<f64> {
        (self.m == 2).then_some(self.derivs_at_0[2])
    }
}

pub fn bl_profile(m: u32) -> Result<BLProfile> {
    let roots = characteristic_roots(m)?;
    let (lambda, amplitude, stretch) = match m {
        1 => (Complex64::new(-0.5, 0.0), Complex64::new(1.0, 0.0), 2.0),
        _ => {
            let a = 2f64.powf(-5.0 / 3.0);
            (
                Complex64::new(-a, 3f64.sqrt() * a),
                Complex64::new(1.0, -1.0 / 3f64.sqrt()),
                4.0 / 3.0,
            )
        }
    };
    let mut p = BLProfile { m, derivs_at_0: [0.0; 3], roots, stretch_exponent: stretch, lambda, amplitude };
    p.derivs_at_0 = [p.deriv(0.0, 1), p.deriv(0.0, 2), p.deriv(0.0, 3)];
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitConfig {
    /// Truncation Ξ of the half-line.
    pub xi_max: f64,
    pub points: usize,
    pub ds: f64,
    pub steps: usize,
}

impl LimitConfig {
    pub fn default_for(m: u32) -> Self {
        match m {
            1 => Self { xi_max: 60.0, points: 1201, ds: 0.5, steps: 600 },
            _ => Self { xi_max: 60.0, points: 2401, ds: 1.0, steps: 1500 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitTrajectory {
    pub m: u32,
    pub xi: Vec<f64>,
    pub s: Vec<f64>,
    /// m = 1: Σ e^{ξ/2}h_ξ² dξ; m = 2: Σ w_ξ² dξ with w the deviation from the
    /// discrete stationary profile.
    pub lyapunov: Vec<f64>,
    /// m = 1: (∫e^{ξ/2}(h − g₀)²)^{1/2} against the truncated-domain profile
    /// g₀/g₀(Ξ); m = 2: (∫(h − g₀)²)^{1/2}.
    pub distance: Vec<f64>,
    /// Absolute slack allowed in the per-step monotonicity test (round-off level).
    pub lyapunov_floor: f64,
    /// sup |h − g₀| at the final step.
    pub final_sup_distance: f64,
    pub final_profile: Vec<f64>,
}

/// Solves h_s = A h on [0, Ξ] by backward Euler.
///
/// m = 1 uses the conservative form e^{ξ/2}h_s = (e^{ξ/2}h_ξ)_ξ with exponentially
/// fitted fluxes, so stationary states are exact and the weighted Dirichlet
/// energy is a discrete Lyapunov functional. m = 2 uses centred differences with
/// clamped ghost points.
pub fn solve_limit_equation<F: Fn(f64) -> f64>(m: u32, h0: F, cfg: &LimitConfig) -> Result<LimitTrajectory> {
    let blp = bl_profile(m)?;
    if cfg.xi_max < 60.0 {
        return Err(Error::Precondition(format!("truncation {} must be at least 60", cfg.xi_max)));
    }
    if cfg.points < 11 {
        return Err(Error::Precondition("too few grid points".into()));
    }
    let n = cfg.points;
    let dxi = cfg.xi_max / (n - 1) as f64;
    let xi: Vec<f64> = (0..n).map(|i| i as f64 * dxi).collect();
    if h0(0.0).abs() > 1e-12 {
        return Err(Error::Precondition("h0(0) must vanish".into()));
    }
    if m == 2 && ((h0(1e-6) - h0(0.0)) / 1e-6).abs() > 1e-4 {
        return Err(Error::Precondition("h0'(0) must vanish for the clamped problem".into()));
    }
    if (h0(cfg.xi_max) - 1.0).abs() > 1e-6 {
        return Err(Error::Precondition("h0 must approach 1 at the truncation point".into()));
    }
    let mut h: Vec<f64> = xi.iter().map(|&x| h0(x)).collect();
    h[0] = 0.0;
    h[n - 1] = 1.0;
    let g: Vec<f64> = xi.iter().map(|&x| blp.g0(x)).collect();
    match m {
        1 => {
            // Exact stationary state of the truncated problem; within e^{−Ξ/2} of g₀.
            let g_trunc: Vec<f64> = g.iter().map(|v| v / blp.g0(cfg.xi_max)).collect();
            solve_m1(h, &xi, &g_trunc, cfg)
        }
        _ => solve_m2(h, &xi, &g, cfg, dxi),
    }
}

fn solve_m1(mut h: Vec<f64>, xi: &[f64], g: &[f64], cfg: &LimitConfig) -> Result<LimitTrajectory> {
    let n = xi.len();
    let dxi = xi[1] - xi[0];
    // Flux e^{ξ/2}h_ξ is constant across a cell for exact stationary solutions.
    let cond: Vec<f64> = (0..n - 1)
        .map(|i| 1.0 / (2.0 * ((-xi[i] / 2.0).exp() - (-xi[i + 1] / 2.0).exp())))
        .collect();
    let mass: Vec<f64> = xi.iter().map(|&x| (x / 2.0).exp() * dxi).collect();
    let energy = |h: &[f64]| (0..n - 1).map(|i| cond[i] * (h[i + 1] - h[i]).powi(2)).sum::<f64>();
    let dist = |h: &[f64]| (0..n).map(|i| mass[i] * (h[i] - g[i]).powi(2)).sum::<f64>().sqrt();

    let interior = n - 2;
    let mut lower = vec![0.0; interior];
    let mut diag = vec![0.0; interior];
    let mut upper = vec![0.0; interior];
    for k in 0..interior {
        let i = k + 1;
        diag[k] = mass[i] / cfg.ds + cond[i - 1] + cond[i];
        lower[k] = -cond[i - 1];
        upper[k] = -cond[i];
    }
    // Evolve the deviation from the exact stationary state so that round-off
    // stays relative to the deviation, not to the e^{ξ/2} weights.
    let mut v: Vec<f64> = h.iter().zip(g).map(|(a, b)| a - b).collect();
    v[0] = 0.0;
    v[n - 1] = 0.0;
    let mut s = vec![0.0];
    let mut lyap = vec![energy(&h)];
    let mut distance = vec![dist(&h)];
    for step in 1..=cfg.steps {
        let rhs: Vec<f64> = (0..interior).map(|k| mass[k + 1] / cfg.ds * v[k + 1]).collect();
        let x = solve_tridiagonal(&lower, &diag, &upper, &rhs)
            .ok_or_else(|| Error::StepFailure { tau: step as f64 * cfg.ds, reason: "singular tridiagonal system".into() })?;
        v[1..n - 1].copy_from_slice(&x);
        for i in 0..n {
            h[i] = g[i] + v[i];
        }
        let e = energy(&h);
        let prev = *lyap.last().unwrap();
        if e > prev * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::Instability { step, before: prev, after: e });
        }
        s.push(step as f64 * cfg.ds);
        lyap.push(e);
        distance.push((0..n).map(|i| mass[i] * v[i] * v[i]).sum::<f64>().sqrt());
    }
    let sup = h.iter().zip(g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(LimitTrajectory { m: 1, xi: xi.to_vec(), s, lyapunov: lyap, distance, lyapunov_floor: 0.0, final_sup_distance: sup, final_profile: h })
}

/// Row i of (−D⁴ + ¼D) with ghosts h_{−1} = h_1 and h_{N+1} = h_{N−1}, as (column, weight).
fn m2_row(i: usize, n: usize, dxi: f64) -> Vec<(usize, f64)> {
    let c4 = 1.0 / dxi.powi(4);
    let c1 = 0.25 / (2.0 * dxi);
    let mut row: Vec<(usize, f64)> = Vec::with_capacity(5);
    let mut push = |j: isize, w: f64| {
        let jj = if j < 0 {
            (-j) as usize
        } else if j as usize > n - 1 {
            2 * (n - 1) - j as usize
        } else {
            j as usize
        };
        if let Some(e) = row.iter_mut().find(|(c, _)| *c == jj) {
            e.1 += w;
        } else {
            row.push((jj, w));
        }
    };
    let i = i as isize;
    for (off, w) in [(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)] {
        push(i + off, -c4 * w);
    }
    push(i + 1, c1);
    push(i - 1, -c1);
    row
}

fn solve_m2(mut h: Vec<f64>, xi: &[f64], g: &[f64], cfg: &LimitConfig, dxi: f64) -> Result<LimitTrajectory> {
    let n = xi.len();
    // Unknowns are nodes 1..n−2; nodes 0 and n−1 carry the Dirichlet values.
    let interior = n - 2;
    let mut mat = Banded::zeros(interior, 2, 2);
    let mut fixed = vec![0.0; interior];
    let mut stat = Banded::zeros(interior, 2, 2);
    let mut stat_rhs = vec![0.0; interior];
    for k in 0..interior {
        let i = k + 1;
        mat.add(k, k, 1.0 / cfg.ds);
        for (j, w) in m2_row(i, n, dxi) {
            if j == 0 || j == n - 1 {
                let val = if j == 0 { 0.0 } else { 1.0 };
                fixed[k] += w * val;
                stat_rhs[k] -= w * val;
            } else {
                mat.add(k, j - 1, -w);
                stat.add(k, j - 1, w);
            }
        }
    }
    let lu = mat.factor().ok_or_else(|| Error::StepFailure { tau: 0.0, reason: "singular banded system".into() })?;
    let steady_inner = stat
        .factor()
        .ok_or_else(|| Error::StepFailure { tau: 0.0, reason: "singular stationary system".into() })?
        .solve(&stat_rhs);
    let mut steady = vec![0.0; n];
    steady[1..n - 1].copy_from_slice(&steady_inner);
    steady[n - 1] = 1.0;

    let energy = |h: &[f64]| {
        (0..n - 1)
            .map(|i| ((h[i + 1] - steady[i + 1]) - (h[i] - steady[i])).powi(2) / dxi)
            .sum::<f64>()
    };
    let dist = |h: &[f64]| (0..n).map(|i| dxi * (h[i] - g[i]).powi(2)).sum::<f64>().sqrt();
    let mut s = vec![0.0];
    let mut lyap = vec![energy(&h)];
    let mut distance = vec![dist(&h)];
    // Increases below this level are round-off in the converged regime.
    let floor = 1e-14 * (0..n - 1).map(|i| (steady[i + 1] - steady[i]).powi(2) / dxi).sum::<f64>();
    for step in 1..=cfg.steps {
        let rhs: Vec<f64> = (0..interior).map(|k| h[k + 1] / cfg.ds + fixed[k]).collect();
        let x = lu.solve(&rhs);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::StepFailure { tau: step as f64 * cfg.ds, reason: "non-finite solution".into() });
        }
        h[1..n - 1].copy_from_slice(&x);
        let e = energy(&h);
        let prev = *lyap.last().unwrap();
        if e > prev * (1.0 + 1e-12) + floor {
            return Err(Error::Instability { step, before: prev, after: e });
        }
        s.push(step as f64 * cfg.ds);
        lyap.push(e);
        distance.push(dist(&h));
    }
    let sup = h.iter().zip(g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(LimitTrajectory { m: 2, xi: xi.to_vec(), s, lyapunov: lyap, distance, lyapunov_floor: floor, final_sup_distance: sup, final_profile: h })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_constants() {
        let p1 = bl_profile(1).unwrap();
        assert!((p1.gamma1() - 0.5).abs() < 1e-15);
        let p2 = bl_profile(2).unwrap();
        assert!(p2.derivs_at_0[0].abs() < 1e-15);
        assert!((p2.gamma1() - 2f64.powf(-4.0 / 3.0)).abs() < 1e-12);
        assert!((p2.gamma2().unwrap() + 0.25).abs() < 1e-12);
        assert!(p2.g0(0.0).abs() < 1e-15);
    }

    #[test]
    fn roots_satisfy_symbols() {
        for r in characteristic_roots(2).unwrap() {
            let z = r.complex();
            assert!((-z.powu(4) + z / 4.0).norm() < 1e-15);
        }
        let decaying: Vec<_> = characteristic_roots(2).unwrap().into_iter().filter(|r| r.decaying).collect();
        assert_eq!(decaying.len(), 2);
        assert!((decaying[0].re + 2f64.powf(-5.0 / 3.0)).abs() < 1e-15);
        assert!(matches!(characteristic_roots(3), Err(Error::UnsupportedOrder(3))));
    }

    #[test]
    fn stationary_start_stays_put() {
        let p = bl_profile(1).unwrap();
        let t = solve_limit_equation(1, |x| p.g0(x) / p.g0(60.0), &LimitConfig { steps: 50, ..LimitConfig::default_for(1) }).unwrap();
        assert!(t.distance.iter().all(|&d| d < 1e-9), "{:?}", &t.distance[..3]);
    }

    #[test]
    fn rejects_bad_initial_data() {
        let cfg = LimitConfig::default_for(2);
        assert!(solve_limit_equation(2, |x| 1.0 - (-x).exp(), &cfg).is_err());
        assert!(solve_limit_equation(1, |x| 1.0 - (-x).exp(), &LimitConfig { xi_max: 30.0, ..cfg }).is_err());
    }
}
