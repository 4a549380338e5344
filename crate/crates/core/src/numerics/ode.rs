//! Dormand-Prince 5(4) for scalar nonautonomous equations `y' = f(t, y)`.

#[derive(Debug, Clone, Copy)]
pub struct Dopri5Options {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for Dopri5Options {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-10, h_init: 1e-3, h_min: 1e-12, max_steps: 2_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OdeFailure {
    StepCollapse { t: f64 },
    NonFinite { t: f64 },
    TooManySteps { t: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSolution {
    /// Values at the requested checkpoints that were reached.
    pub points: Vec<(f64, f64)>,
    /// `Some((t, y))` if the stop predicate fired after an accepted step.
    pub stopped_at: Option<(f64, f64)>,
    pub accepted: usize,
    pub rejected: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates from `t0` through the increasing `checkpoints`, landing exactly on
/// each one. `stop(t, y)` is checked after every accepted step.
pub fn integrate_scalar<F, S>(
    mut f: F,
    t0: f64,
    y0: f64,
    checkpoints: &[f64],
    opts: &Dopri5Options,
    mut stop: S,
) -> Result<ScalarSolution, OdeFailure>
where
    F: FnMut(f64, f64) -> f64,
    S: FnMut(f64, f64) -> bool,
{
    let mut t = t0;
    let mut y = y0;
    let mut h = opts.h_init;
    let mut points = Vec::with_capacity(checkpoints.len());
    let mut accepted = 0;
    let mut rejected = 0;
    let mut k1 = f(t, y);
    if !k1.is_finite() {
        return Err(OdeFailure::NonFinite { t });
    }
    for &target in checkpoints {
        if target <= t {
            points.push((target, y));
            continue;
        }
        while t < target {
            if accepted + rejected > opts.max_steps {
                return Err(OdeFailure::TooManySteps { t });
            }
            let remaining = target - t;
            let landing = h >= remaining;
            let hs = if landing { remaining } else { h };
            let k2 = f(t + C2 * hs, y + hs * A21 * k1);
            let k3 = f(t + C3 * hs, y + hs * (A31 * k1 + A32 * k2));
            let k4 = f(t + C4 * hs, y + hs * (A41 * k1 + A42 * k2 + A43 * k3));
            let k5 = f(t + C5 * hs, y + hs * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
            let k6 = f(t + hs, y + hs * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
            let y_new = y + hs * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
            let k7 = f(t + hs, y_new);
            let err = hs * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
            let scale = opts.atol + opts.rtol * y.abs().max(y_new.abs());
            let ratio = (err / scale).abs();
            if !y_new.is_finite() || !k7.is_finite() || !ratio.is_finite() {
                rejected += 1;
                h = hs * 0.2;
                if h < opts.h_min {
                    return Err(OdeFailure::NonFinite { t });
                }
                continue;
            }
            if ratio <= 1.0 {
                t = if landing { target } else { t + hs };
                y = y_new;
                k1 = k7;
                accepted += 1;
                let fac = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
                // A landing step may be artificially short; keep the old h then.
                h = if landing { h.max(hs * fac) } else { hs * fac };
                if stop(t, y) {
                    return Ok(ScalarSolution { points, stopped_at: Some((t, y)), accepted, rejected });
                }
            } else {
                rejected += 1;
                h = hs * (0.9 * ratio.powf(-0.25)).clamp(0.1, 0.9);
                if h < opts.h_min {
                    return Err(OdeFailure::StepCollapse { t });
                }
            }
        }
        points.push((target, y));
    }
    Ok(ScalarSolution { points, stopped_at: None, accepted, rejected })
}
