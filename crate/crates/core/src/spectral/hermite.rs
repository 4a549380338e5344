use std::fmt::Write as _;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::kernel::{integration_radius, KernelModel, MAX_DERIV};
use crate::numerics::quad::gauss16;
use crate::error::{Error, Result};

/// Polynomial with exact rational coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalPoly {
    pub coeffs: Vec<BigRational>,
}

impl RationalPoly {
    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![BigRational::zero(); k + 1];
        coeffs[k] = BigRational::one();
        Self { coeffs }
    }

    fn trimmed(mut self) -> Self {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
        self
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| !c.is_zero())
    }

    pub fn coeff(&self, j: usize) -> BigRational {
        self.coeffs.get(j).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, c)| c * BigRational::from_integer(BigInt::from(j)))
            .collect();
        Self { coeffs }.trimmed()
    }

    pub fn nth_derivative(&self, n: usize) -> Self {
        (0..n).fold(self.clone(), |p, _| p.derivative())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self { coeffs: (0..n).map(|j| self.coeff(j) + other.coeff(j)).collect() }.trimmed()
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * s).collect() }.trimmed()
    }

    /// y·p(y).
    pub fn shift_up(&self) -> Self {
        let mut coeffs = vec![BigRational::zero()];
        coeffs.extend(self.coeffs.iter().cloned());
        Self { coeffs }.trimmed()
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * y + c.to_f64().unwrap_or(f64::NAN))
    }
}

/// B* = (−1)^{m+1}D^{2m} − (1/(2m)) y D, applied exactly.
pub fn apply_adjoint_operator(m: u32, p: &RationalPoly) -> RationalPoly {
    let sign = if m % 2 == 1 { BigRational::one() } else { -BigRational::one() };
    let principal = p.nth_derivative(2 * m as usize).scale(&sign);
    let drift_coef = -BigRational::new(BigInt::one(), BigInt::from(2 * m));
    let drift = p.derivative().shift_up().scale(&drift_coef);
    principal.add(&drift)
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

/// Generalized Hermite pair: the polynomial eigenfunction ψ*_k of B*
/// together with the recipe for its dual ψ_k = ((−1)^k/√k!) F^{(k)}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HermitePair {
    pub m: u32,
    pub k: usize,
    /// −k/(2m).
    pub lambda: BigRational,
    /// Unnormalized polynomial; ψ*_k = poly / √(norm_square).
    pub poly: RationalPoly,
    /// k!, the square of the normalization divisor.
    pub norm_square: BigUint,
}

impl HermitePair {
    pub fn lambda_f64(&self) -> f64 {
        self.lambda.to_f64().unwrap_or(f64::NAN)
    }

    pub fn norm(&self) -> f64 {
        self.norm_square.to_f64().unwrap_or(f64::INFINITY).sqrt()
    }

    pub fn adjoint_value(&self, y: f64) -> f64 {
        self.poly.eval(y) / self.norm()
    }

    pub fn eigenfunction(&self, kernel: &KernelModel, y: f64) -> f64 {
        let sign = if self.k.is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * kernel.deriv(y, self.k) / self.norm()
    }

    /// √(k!) as a·√b with b square-free.
    pub fn simplified_radical(&self) -> (BigUint, BigUint) {
        let mut a = BigUint::one();
        let mut b = BigUint::one();
        let mut n = self.norm_square.clone();
        let mut p = BigUint::from(2u32);
        while &p * &p <= n {
            let mut e = 0u32;
            while (&n % &p).is_zero() {
                n /= &p;
                e += 1;
            }
            a *= p.pow(e / 2);
            if e % 2 == 1 {
                b *= &p;
            }
            p += 1u32;
        }
        b *= n;
        (a, b)
    }

    /// Readable form such as `(y^5 + 120 y)/(2√30)`.
    pub fn render(&self) -> String {
        let mut body = String::new();
        let deg = self.poly.degree().unwrap_or(0);
        let mut terms = 0;
        for j in (0..=deg).rev() {
            let c = self.poly.coeff(j);
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let mag = c.abs();
            if terms > 0 {
                body.push_str(if neg { " - " } else { " + " });
            } else if neg {
                body.push('-');
            }
            let unit = mag.is_one();
            if !unit || j == 0 {
                let _ = write!(body, "{}", mag);
            }
            if j > 0 {
                if !unit {
                    body.push(' ');
                }
                body.push('y');
                if j > 1 {
                    let _ = write!(body, "^{j}");
                }
            }
            terms += 1;
        }
        let (a, b) = self.simplified_radical();
        if b.is_one() && a.is_one() {
            return body;
        }
        let divisor = match (a.is_one(), b.is_one()) {
            (true, false) => format!("√{b}"),
            (false, true) => format!("{a}"),
            _ => format!("{a}√{b}"),
        };
        let wrapped = if terms > 1 { format!("({body})") } else { body };
        if a.is_one() || b.is_one() {
            format!("{wrapped}/{divisor}")
        } else {
            format!("{wrapped}/({divisor})")
        }
    }
}

/// ψ*_k(y) = (1/√k!)[y^k + Σ_{j≥1} ((−1)^{mj}/j!) D^{2mj} y^k].
pub fn adjoint_polynomial(m: u32, k: usize) -> Result<HermitePair> {
    if m == 0 {
        return Err(Error::UnsupportedOrder(m));
    }
    if k > 64 {
        return Err(Error::Precondition(format!("index k = {k} exceeds 64")));
    }
    let two_m = 2 * m as usize;
    let base = RationalPoly::monomial(k);
    let mut poly = base.clone();
    for j in 1..=k / two_m {
        let sign = if (m as usize * j).is_multiple_of(2) { 1 } else { -1 };
        let coef = BigRational::new(BigInt::from(sign), BigInt::from(factorial(j)));
        poly = poly.add(&base.nth_derivative(two_m * j).scale(&coef));
    }
    Ok(HermitePair {
        m,
        k,
        lambda: BigRational::new(-BigInt::from(k), BigInt::from(two_m)),
        poly,
        norm_square: factorial(k),
    })
}

/// True iff B*ψ*_k − λ_k ψ*_k vanishes coefficient by coefficient.
pub fn eigen_identity_holds(pair: &HermitePair) -> bool {
    let lhs = apply_adjoint_operator(pair.m, &pair.poly);
    let rhs = pair.poly.scale(&pair.lambda);
    lhs == rhs
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiorthonormalityReport {
    pub m: u32,
    pub k_max: usize,
    /// entries[β][γ] = ⟨ψ_β, ψ*_γ⟩.
    pub entries: Vec<Vec<f64>>,
    pub max_deviation: f64,
    pub max_off_diagonal: f64,
}

pub fn biorthonormality_matrix(kernel: &KernelModel, k_max: usize) -> Result<BiorthonormalityReport> {
    if k_max > 8 || k_max > MAX_DERIV {
        return Err(Error::Precondition(format!("k_max = {k_max} exceeds 8")));
    }
    let m = kernel.m();
    let pairs: Vec<HermitePair> = (0..=k_max).map(|k| adjoint_polynomial(m, k)).collect::<Result<_>>()?;
    // Generous radius: polynomial weights up to y^8 against e^{−d₀|y|^α}.
    let y_max = integration_radius(&kernel.constants, 1e-40);
    let n = k_max + 1;
    let mut entries = vec![vec![0.0; n]; n];
    let panels = (2.0 * y_max).ceil() as usize;
    let h = 2.0 * y_max / panels as f64;
    let rule = gauss16();
    for p in 0..panels {
        let lo = -y_max + p as f64 * h;
        for (y, w) in rule.mapped(lo, lo + h) {
            let d = kernel.derivs(y, k_max);
            for (b, pb) in pairs.iter().enumerate() {
                let sign = if b % 2 == 0 { 1.0 } else { -1.0 };
                let psi = sign * d[b] / pb.norm();
                for (g, pg) in pairs.iter().enumerate() {
                    entries[b][g] += w * psi * pg.adjoint_value(y);
                }
            }
        }
    }
    let mut max_dev = 0.0f64;
    let mut max_off = 0.0f64;
    for (b, row) in entries.iter().enumerate() {
        for (g, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Quadrature(format!("non-finite inner product ({b}, {g})")));
            }
            let target = if b == g { 1.0 } else { 0.0 };
            max_dev = max_dev.max((v - target).abs());
            if b != g {
                max_off = max_off.max(v.abs());
            }
        }
    }
    Ok(BiorthonormalityReport { m, k_max, entries, max_deviation: max_dev, max_off_diagonal: max_off })
}
