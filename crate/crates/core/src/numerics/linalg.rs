/// Thomas algorithm for a tridiagonal system. `lower[0]` and `upper[n-1]` are ignored.
/// Returns `None` on a zero pivot.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 {
        return None;
    }
    c[0] = upper[0] / beta;
    d[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag[i] - lower[i] * c[i - 1];
        if beta == 0.0 || !beta.is_finite() {
            return None;
        }
        c[i] = if i + 1 < n { upper[i] / beta } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / beta;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Some(x)
}

/// Square banded matrix with `kl` sub- and `ku` super-diagonals, stored by row.
#[derive(Debug, Clone)]
pub struct Banded {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

impl Banded {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self { n, kl, ku, data: vec![0.0; n * (kl + ku + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku);
        i * (self.kl + self.ku + 1) + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Gaussian elimination without pivoting; the systems assembled in this
    /// crate are diagonally dominant or symmetric positive definite.
    pub fn factor(&self) -> Option<BandedLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut a = self.clone();
        for k in 0..n {
            let p = a.get(k, k);
            if p == 0.0 || !p.is_finite() {
                return None;
            }
            for i in k + 1..=(k + kl).min(n - 1) {
                let l = a.get(i, k) / p;
                a.set(i, k, l);
                for j in k + 1..=(k + ku).min(n - 1) {
                    let v = a.get(k, j);
                    if v != 0.0 {
                        a.add(i, j, -l * v);
                    }
                }
            }
        }
        Some(BandedLu { lu: a })
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    lu: Banded,
}

impl BandedLu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let a = &self.lu;
        let n = a.n;
        let mut x = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(a.kl);
            let mut s = x[i];
            for (j, xj) in x.iter().enumerate().take(i).skip(lo) {
                s -= a.get(i, j) * xj;
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let hi = (i + a.ku).min(n - 1);
            let mut s = x[i];
            for (j, xj) in x.iter().enumerate().take(hi + 1).skip(i + 1) {
                s -= a.get(i, j) * xj;
            }
            x[i] = s / a.get(i, i);
        }
        x
    }
}

/// Dense solve with partial pivoting (small systems only).
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[piv][k] == 0.0 {
            return None;
        }
        a.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..n {
            let l = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= l * a[k][j];
            }
            b[i] -= l * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Least-squares solution of an overdetermined system via normal equations.
pub fn least_squares(rows: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let p = rows.first()?.len();
    let mut ata = vec![vec![0.0; p]; p];
    let mut atb = vec![0.0; p];
    for (r, &y) in rows.iter().zip(rhs) {
        for i in 0..p {
            atb[i] += r[i] * y;
            for j in 0..p {
                ata[i][j] += r[i] * r[j];
            }
        }
    }
    solve_dense(ata, atb)
}
