//! Convergence classification of ∫^∞ g(x) dx from the tail of ln g.

use serde::Serialize;

use super::fit::linear_fit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailClass {
    Divergent,
    Convergent,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailFit {
    /// g ~ x^{−p} over the fitted window.
    pub p: f64,
    /// g·x ~ (ln x)^q, fitted only when p is within the margin of 1.
    pub q: Option<f64>,
    pub class: TailClass,
    /// Width of the fitted window in decades of x.
    pub decades: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailRule {
    pub decades: f64,
    pub p_margin: f64,
    pub q_margin: f64,
}

impl Default for TailRule {
    fn default() -> Self {
        Self { decades: 2.0, p_margin: 0.02, q_margin: 0.1 }
    }
}

/// Classifies from samples of (ln x, ln g) with x increasing and x > 1.
pub fn classify_tail(log_x: &[f64], log_g: &[f64], rule: &TailRule) -> Option<TailFit> {
    let n = log_x.len();
    if n < 4 || log_g.len() != n {
        return None;
    }
    let end = log_x[n - 1];
    let start = end - rule.decades * std::f64::consts::LN_10;
    let idx: Vec<usize> = (0..n).filter(|&i| log_x[i] >= start && log_g[i].is_finite()).collect();
    if idx.len() < 4 {
        // Integrand underflowed to zero: decays faster than any power.
        if log_g[n - 1] == f64::NEG_INFINITY {
            return Some(TailFit { p: f64::INFINITY, q: None, class: TailClass::Convergent, decades: 0.0 });
        }
        return None;
    }
    let xs: Vec<f64> = idx.iter().map(|&i| log_x[i]).collect();
    let gs: Vec<f64> = idx.iter().map(|&i| log_g[i]).collect();
    let decades = (xs[xs.len() - 1] - xs[0]) / std::f64::consts::LN_10;
    let p = -linear_fit(&xs, &gs)?.slope;
    if p > 1.0 + rule.p_margin {
        return Some(TailFit { p, q: None, class: TailClass::Convergent, decades });
    }
    if p < 1.0 - rule.p_margin {
        return Some(TailFit { p, q: None, class: TailClass::Divergent, decades });
    }
    if xs[0] <= 0.0 {
        return Some(TailFit { p, q: None, class: TailClass::Undetermined, decades });
    }
    let lls: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let gx: Vec<f64> = gs.iter().zip(&xs).map(|(g, x)| g + x).collect();
    let q = linear_fit(&lls, &gx)?.slope;
    let class = if q > -1.0 + rule.q_margin {
        TailClass::Divergent
    } else if q < -1.0 - rule.q_margin {
        TailClass::Convergent
    } else {
        TailClass::Undetermined
    };
    Some(TailFit { p, q: Some(q), class, decades })
}
