//! Sensitivity and backward-error certificates for a staircase eigentriplet.

use crate::error::{JcfError, Result};
use crate::matrix::Matrix;
use crate::numeric::qr::{householder_qr, HouseholderQr};
use crate::numeric::schur::{reorder_schur, schur_form};
use crate::numeric::svd::sigma_min;
use crate::staircase::system::staircase_jacobian;
use crate::staircase::triplet::{AuxVectors, Eigentriplet};

/// `2 / sigma_min(J)` for the Jacobian of the staircase system taken with
/// `c = Y` and the given `b`.
pub fn staircase_condition_number(a: &Matrix, t: &Eigentriplet, aux: &AuxVectors) -> Result<f64> {
    let aux = AuxVectors { b: aux.b.clone(), c: t.y.clone() };
    let jac = staircase_jacobian(a, t, &aux)?;
    let smin = HouseholderQr::factor(&jac).smallest_singular_value();
    Ok(if smin > 0.0 { 2.0 / smin } else { f64::INFINITY })
}

/// `||(X^H Y)^{-1}||_2` where `X` is an orthonormal basis of the left
/// invariant subspace belonging to the `m` eigenvalues nearest `lambda`.
pub fn cluster_condition_number(a: &Matrix, t: &Eigentriplet) -> Result<f64> {
    let n = a.rows();
    t.validate(n)?;
    let m = t.multiplicity();
    let schur = schur_form(a)?;
    let ev = schur.eigenvalues();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        (ev[i] - t.lambda).norm().partial_cmp(&(ev[j] - t.lambda).norm()).unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut select = vec![false; n];
    for &i in &order[..m] {
        select[i] = true;
    }
    let reordered = reorder_schur(&schur, &select)?;
    if !reordered.selected[n - m..].iter().all(|&s| s) {
        return Err(JcfError::Identification("could not isolate the cluster in the Schur form".into()));
    }
    let x = reordered.schur.q.columns(n - m, n);
    let y = householder_qr(&t.y, true)?.q;
    let smin = sigma_min(&x.adjoint_mul(&y));
    Ok(if smin > 0.0 { 1.0 / smin } else { f64::INFINITY })
}

/// Matrix `Y (lambda I + S) Y^H + A (I - Y Y^H)` which has the triplet exactly
/// when `Y` is orthonormal. Its distance to `A` equals `||A Y - Y (lambda I + S)||_F`.
pub fn nearest_matrix_with_triplet(a: &Matrix, t: &Eigentriplet) -> Result<Matrix> {
    t.validate(a.rows())?;
    let y = &t.y;
    let first = y.matmul(&t.block()).matmul(&y.adjoint());
    let ay = a.matmul(y);
    let second = a.sub(&ay.matmul(&y.adjoint()));
    Ok(first.add(&second))
}
