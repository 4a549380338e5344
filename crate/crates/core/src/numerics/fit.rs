use super::linalg::least_squares;

/// Ordinary least-squares line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub rms: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum::<f64>()
        / nf)
        .sqrt();
    Some(LineFit { slope, intercept, rms })
}

/// Damped oscillation `h(X) ≈ e^{-d X}[c1 sin(b X) + c2 cos(b X)]` on a uniform grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedOscillation {
    pub decay: f64,
    pub frequency: f64,
    pub c_sin: f64,
    pub c_cos: f64,
    /// Max absolute residual divided by the max envelope on the window.
    pub relative_residual: f64,
}

/// Two-term Prony fit: the samples satisfy `h[n+1] = p h[n] + q h[n-1]`
/// exactly for a single damped mode, so `q = -|z|^2` and `p = 2 Re z`.
pub fn prony_damped_oscillation(x0: f64, dx: f64, h: &[f64]) -> Option<DampedOscillation> {
    if h.len() < 6 {
        return None;
    }
    let rows: Vec<Vec<f64>> = (1..h.len() - 1).map(|n| vec![h[n], h[n - 1]]).collect();
    let rhs: Vec<f64> = (1..h.len() - 1).map(|n| h[n + 1]).collect();
    let pq = least_squares(&rows, &rhs)?;
    let (p, q) = (pq[0], pq[1]);
    if q >= 0.0 {
        return None;
    }
    let modulus = (-q).sqrt();
    let cos_theta = (p / (2.0 * modulus)).clamp(-1.0, 1.0);
    let theta = cos_theta.acos();
    let decay = -modulus.ln() / dx;
    let frequency = theta / dx;

    let xs: Vec<f64> = (0..h.len()).map(|i| x0 + i as f64 * dx).collect();
    let basis: Vec<Vec<f64>> = xs
        .iter()
        .map(|&x| {
            let e = (-decay * x).exp();
            vec![e * (frequency * x).sin(), e * (frequency * x).cos()]
        })
        .collect();
    let c = least_squares(&basis, h)?;
    let env_max = xs
        .iter()
        .map(|&x| (-decay * x).exp() * c[0].hypot(c[1]))
        .fold(0.0, f64::max);
    let res_max = basis
        .iter()
        .zip(h)
        .map(|(b, &v)| (v - c[0] * b[0] - c[1] * b[1]).abs())
        .fold(0.0, f64::max);
    Some(DampedOscillation {
        decay,
        frequency,
        c_sin: c[0],
        c_cos: c[1],
        relative_residual: if env_max > 0.0 { res_max / env_max } else { f64::INFINITY },
    })
}
