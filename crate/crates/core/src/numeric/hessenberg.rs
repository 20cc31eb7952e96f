use crate::error::{JcfError, Result};
use crate::matrix::{norm2, Matrix, C64, ZERO};
use crate::numeric::qr::Reflector;

/// `A = Q H Q^H` with `H` upper Hessenberg.
#[derive(Clone, Debug)]
pub struct HessenbergForm {
    pub h: Matrix,
    pub q: Matrix,
}

fn reflect_left(w: &mut Matrix, h: &Reflector, c0: usize) {
    if h.tau == 0.0 {
        return;
    }
    let n = w.cols();
    let mut s = vec![ZERO; n - c0];
    for (i, wi) in h.w.iter().enumerate() {
        let wc = wi.conj();
        for (sj, x) in s.iter_mut().zip(&w.row(h.k + i)[c0..]) {
            *sj += wc * x;
        }
    }
    for (i, wi) in h.w.iter().enumerate() {
        let f = *wi * h.tau;
        for (x, sj) in w.row_mut(h.k + i)[c0..].iter_mut().zip(&s) {
            *x -= f * sj;
        }
    }
}

fn reflect_right(w: &mut Matrix, h: &Reflector) {
    if h.tau == 0.0 {
        return;
    }
    for r in 0..w.rows() {
        let row = &mut w.row_mut(r)[h.k..h.k + h.w.len()];
        let t: C64 = row.iter().zip(&h.w).map(|(x, y)| x * y).sum::<C64>() * h.tau;
        for (x, wi) in row.iter_mut().zip(&h.w) {
            *x -= t * wi.conj();
        }
    }
}

/// Householder reduction to upper Hessenberg form. When `first_column` is
/// given, the first column of `Q` is that vector normalized.
pub fn hessenberg_reduce(a: &Matrix, first_column: Option<&[C64]>) -> Result<HessenbergForm> {
    if a.rows() == 0 {
        return Err(JcfError::Empty);
    }
    if !a.is_square() {
        return Err(JcfError::Dimension(format!("expected square matrix, got {}x{}", a.rows(), a.cols())));
    }
    if !a.is_finite() {
        return Err(JcfError::NonFinite);
    }
    let n = a.rows();
    let (mut h, mut q) = match first_column {
        None => (a.clone(), Matrix::identity(n)),
        Some(v) => {
            if v.len() != n {
                return Err(JcfError::Dimension(format!("first column has length {}, expected {n}", v.len())));
            }
            let nv = norm2(v);
            if nv == 0.0 || !nv.is_finite() {
                return Err(JcfError::ZeroVector);
            }
            let vhat: Vec<C64> = v.iter().map(|x| x / nv).collect();
            let (refl, alpha) = Reflector::new(0, &vhat);
            let mut q = Matrix::identity(n);
            reflect_right(&mut q, &refl);
            // Householder maps e_1 to vhat / alpha; rescale so the column is vhat itself.
            for r in 0..n {
                q[(r, 0)] *= alpha;
            }
            let h = q.adjoint_mul(&a.matmul(&q));
            (h, q)
        }
    };
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let (refl, alpha) = Reflector::new(k + 1, &x);
        reflect_left(&mut h, &refl, k);
        reflect_right(&mut h, &refl);
        reflect_right(&mut q, &refl);
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
    Ok(HessenbergForm { h, q })
}
