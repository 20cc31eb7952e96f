//! Householder QR with row updating, and QR-based least squares.

use crate::error::{JcfError, Result};
use crate::matrix::{norm2, Matrix, C64, ONE, UNIT_ROUNDOFF, ZERO};
use crate::numeric::givens::Givens;
use crate::numeric::inverse_iteration::{smallest_singular_triangular, spectral_norm_estimate};
use crate::numeric::triangular::solve_upper;

/// `A = Q R` where `R` has a real non-negative diagonal.
#[derive(Clone, Debug)]
pub struct QrFactorization {
    pub q: Matrix,
    pub r: Matrix,
    pub economic: bool,
}

pub(crate) struct Reflector {
    pub(crate) k: usize,
    pub(crate) w: Vec<C64>,
    pub(crate) tau: f64,
}

impl Reflector {
    /// Reflector mapping `x` to a multiple of `e_1`; returns it with the image entry.
    pub(crate) fn new(k: usize, x: &[C64]) -> (Reflector, C64) {
        let nx = norm2(x);
        if nx == 0.0 {
            return (Reflector { k, w: vec![ZERO; x.len()], tau: 0.0 }, ZERO);
        }
        let x0 = x[0];
        let phase = if x0 == ZERO { ONE } else { x0 / x0.norm() };
        let alpha = -phase * nx;
        let mut w = x.to_vec();
        w[0] -= alpha;
        let nw = norm2(&w);
        let tau = 2.0 / (nw * nw);
        (Reflector { k, w, tau }, alpha)
    }

    #[inline]
    pub(crate) fn apply(&self, y: &mut [C64]) {
        if self.tau == 0.0 {
            return;
        }
        let y = &mut y[self.k..];
        let s: C64 = self.w.iter().zip(y.iter()).map(|(w, y)| w.conj() * y).sum::<C64>() * self.tau;
        for (yi, wi) in y.iter_mut().zip(&self.w) {
            *yi -= s * wi;
        }
    }
}

/// Householder factorization held in column-major form. Used where only
/// products with `Q^H` and the triangle are needed.
pub struct HouseholderQr {
    m: usize,
    n: usize,
    cols: Vec<Vec<C64>>,
    reflectors: Vec<Reflector>,
}

impl HouseholderQr {
    pub fn factor(a: &Matrix) -> Self {
        let (m, n) = a.shape();
        let mut cols: Vec<Vec<C64>> = (0..n).map(|j| a.col(j)).collect();
        let steps = n.min(m.saturating_sub(1));
        let mut reflectors = Vec::with_capacity(steps);
        for k in 0..steps {
            let (h, alpha) = Reflector::new(k, &cols[k][k..]);
            cols[k][k] = alpha;
            for v in cols[k][k + 1..].iter_mut() {
                *v = ZERO;
            }
            for col in cols[k + 1..].iter_mut() {
                h.apply(col);
            }
            reflectors.push(h);
        }
        HouseholderQr { m, n, cols, reflectors }
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn apply_qh(&self, b: &mut [C64]) {
        for h in &self.reflectors {
            h.apply(b);
        }
    }

    pub fn apply_q(&self, b: &mut [C64]) {
        for h in self.reflectors.iter().rev() {
            h.apply(b);
        }
    }

    /// Upper-trapezoidal factor of size `min(m, n) x n`.
    pub fn r(&self) -> Matrix {
        let p = self.m.min(self.n);
        Matrix::from_fn(p, self.n, |i, j| if i <= j { self.cols[j][i] } else { ZERO })
    }

    /// Square triangle used for solves (requires `m >= n`).
    fn r_square(&self) -> Matrix {
        Matrix::from_fn(self.n, self.n, |i, j| if i <= j { self.cols[j][i] } else { ZERO })
    }

    pub fn q(&self, economic: bool) -> Matrix {
        let p = if economic { self.m.min(self.n) } else { self.m };
        let mut q = Matrix::zeros(self.m, p);
        for j in 0..p {
            let mut e = vec![ZERO; self.m];
            e[j] = ONE;
            self.apply_q(&mut e);
            q.set_col(j, &e);
        }
        q
    }

    /// Least-squares solution of `A x = b`; errors when `A` is numerically rank deficient.
    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        let (x, _) = self.solve_with_rcond(b)?;
        Ok(x)
    }

    /// Least-squares solution together with the reciprocal condition estimate of `R`.
    pub fn solve_with_rcond(&self, b: &[C64]) -> Result<(Vec<C64>, f64)> {
        if b.len() != self.m {
            return Err(JcfError::Dimension(format!("rhs has length {}, expected {}", b.len(), self.m)));
        }
        if self.m < self.n {
            return Err(JcfError::Dimension(format!("underdetermined system {}x{}", self.m, self.n)));
        }
        let r = self.r_square();
        let rcond = reciprocal_condition(&r);
        if !(rcond >= self.n.max(1) as f64 * UNIT_ROUNDOFF) {
            return Err(JcfError::RankDeficient { rcond });
        }
        let mut y = b.to_vec();
        self.apply_qh(&mut y);
        Ok((solve_upper(&r, &y[..self.n]), rcond))
    }

    pub fn smallest_singular_value(&self) -> f64 {
        let r = self.r_square();
        smallest_singular_triangular(&r)
    }
}

/// Estimate of `sigma_min(R) / sigma_max(R)` for square upper-triangular `R`.
pub fn reciprocal_condition(r: &Matrix) -> f64 {
    let n = r.rows();
    if n == 0 {
        return 1.0;
    }
    if (0..n).any(|i| r[(i, i)] == ZERO) {
        return 0.0;
    }
    let smax = spectral_norm_estimate(r);
    if smax == 0.0 {
        return 0.0;
    }
    smallest_singular_triangular(r) / smax
}

fn fix_phases(q: &mut Matrix, r: &mut Matrix) {
    let p = r.rows().min(r.cols());
    for i in 0..p {
        let d = r[(i, i)];
        let nd = d.norm();
        if nd == 0.0 || (d.im == 0.0 && d.re > 0.0) {
            continue;
        }
        let ph = d / nd;
        let phc = ph.conj();
        for v in r.row_mut(i) {
            *v *= phc;
        }
        r[(i, i)] = C64::new(nd, 0.0);
        for k in 0..q.rows() {
            q[(k, i)] *= ph;
        }
    }
}

/// Householder QR. With `economic`, `Q` is `m x min(m,n)` and `R` is `min(m,n) x n`.
pub fn householder_qr(a: &Matrix, economic: bool) -> Result<QrFactorization> {
    if a.rows() == 0 || a.cols() == 0 {
        return Err(JcfError::Empty);
    }
    if !a.is_finite() {
        return Err(JcfError::NonFinite);
    }
    let h = HouseholderQr::factor(a);
    let economic = economic && a.rows() > a.cols();
    let mut q = h.q(economic);
    let mut r = if economic {
        h.r()
    } else {
        let mut full = Matrix::zeros(a.rows(), a.cols());
        full.set_block(0, 0, &h.r());
        full
    };
    fix_phases(&mut q, &mut r);
    Ok(QrFactorization { q, r, economic })
}

/// Updates a full QR factorization after inserting `row` as row `index` of `A`.
pub fn qr_insert_row(qr: &QrFactorization, index: usize, row: &[C64]) -> Result<QrFactorization> {
    if qr.economic {
        return Err(JcfError::Dimension("row updates need a full factorization".into()));
    }
    let (m, n) = qr.r.shape();
    if index > m || row.len() != n {
        return Err(JcfError::Dimension(format!("cannot insert row {index} of length {} into {m}x{n}", row.len())));
    }
    let mut q = Matrix::zeros(m + 1, m + 1);
    q[(index, 0)] = ONE;
    for r in 0..=m {
        if r == index {
            continue;
        }
        let src = if r < index { r } else { r - 1 };
        for c in 0..m {
            q[(r, c + 1)] = qr.q[(src, c)];
        }
    }
    let mut h = Matrix::zeros(m + 1, n);
    for (j, &v) in row.iter().enumerate() {
        h[(0, j)] = v;
    }
    h.set_block(1, 0, &qr.r);
    for j in 0..n.min(m) {
        let (g, _) = Givens::zeroing(h[(j, j)], h[(j + 1, j)]);
        g.rotate_rows(&mut h, j, j + 1, j);
        h[(j + 1, j)] = ZERO;
        g.rotate_cols_adjoint(&mut q, j, j + 1, m + 1);
    }
    fix_phases(&mut q, &mut h);
    Ok(QrFactorization { q, r: h, economic: false })
}

/// Updates a full QR factorization after deleting row `index` of `A`.
pub fn qr_delete_row(qr: &QrFactorization, index: usize) -> Result<QrFactorization> {
    if qr.economic {
        return Err(JcfError::Dimension("row updates need a full factorization".into()));
    }
    let (m, n) = qr.r.shape();
    if index >= m || m < 2 {
        return Err(JcfError::Dimension(format!("cannot delete row {index} from {m} rows")));
    }
    let mut q = qr.q.clone();
    let mut r = qr.r.clone();
    let mut x: Vec<C64> = q.row(index).iter().map(|z| z.conj()).collect();
    for i in (1..m).rev() {
        let (g, rr) = Givens::zeroing(x[i - 1], x[i]);
        x[i - 1] = rr;
        x[i] = ZERO;
        g.rotate_rows(&mut r, i - 1, i, i.saturating_sub(1).min(n));
        g.rotate_cols_adjoint(&mut q, i - 1, i, m);
    }
    let mut q2 = Matrix::zeros(m - 1, m - 1);
    for rr in 0..m {
        if rr == index {
            continue;
        }
        let dst = if rr < index { rr } else { rr - 1 };
        for c in 1..m {
            q2[(dst, c - 1)] = q[(rr, c)];
        }
    }
    let mut r2 = r.submatrix(1, m, 0, n);
    for i in 0..r2.rows() {
        for j in 0..i.min(n) {
            r2[(i, j)] = ZERO;
        }
    }
    fix_phases(&mut q2, &mut r2);
    Ok(QrFactorization { q: q2, r: r2, economic: false })
}

/// Minimizes `||A x - b||_2` for `A` with at least as many rows as columns.
pub fn qr_least_squares(a: &Matrix, b: &[C64]) -> Result<Vec<C64>> {
    if a.rows() == 0 || a.cols() == 0 {
        return Err(JcfError::Empty);
    }
    if b.len() != a.rows() {
        return Err(JcfError::Dimension(format!("rhs has length {}, expected {}", b.len(), a.rows())));
    }
    if a.rows() < a.cols() {
        return Err(JcfError::Dimension(format!("underdetermined system {}x{}", a.rows(), a.cols())));
    }
    HouseholderQr::factor(a).solve(b)
}
