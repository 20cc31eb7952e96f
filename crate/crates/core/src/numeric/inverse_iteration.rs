//! Inverse iteration on triangular factors for null vectors and extreme singular values.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::matrix::{norm2, normalize, Matrix, C64, UNIT_ROUNDOFF};
use crate::numeric::qr::householder_qr;
use crate::numeric::triangular::{check_upper_triangular, solve_upper, solve_upper_adjoint};

#[derive(Clone, Debug)]
pub struct NullVector {
    pub z: Vec<C64>,
    /// `||R z||_2`, the smallest singular value estimate.
    pub sigma: f64,
    pub iterations: usize,
    /// An exactly zero diagonal entry was replaced by `u ||R||_F`.
    pub perturbed: bool,
}

pub fn random_unit_vector(n: usize, rng: &mut impl Rng) -> Vec<C64> {
    let mut v: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)))
        .collect();
    normalize(&mut v);
    v
}

/// Replaces exact zeros on the diagonal so that triangular solves are defined.
fn guarded(r: &Matrix) -> (Matrix, bool) {
    let n = r.rows();
    if (0..n).all(|i| r[(i, i)].norm() != 0.0) {
        return (r.clone(), false);
    }
    let mut out = r.clone();
    let fro = r.norm_fro();
    let eps = if fro > 0.0 { UNIT_ROUNDOFF * fro } else { UNIT_ROUNDOFF };
    for i in 0..n {
        if out[(i, i)].norm() == 0.0 {
            out[(i, i)] = C64::new(eps, 0.0);
        }
    }
    (out, true)
}

/// Approximate null vector of a square upper-triangular `R` via repeated
/// solves with `R^H` and `R`. Stops once two successive singular value
/// estimates agree to within ten percent.
pub fn inverse_iteration_null_vector(r: &Matrix, max_iters: usize, rng: &mut impl Rng) -> Result<NullVector> {
    check_upper_triangular(r)?;
    let n = r.rows();
    let (rg, perturbed) = guarded(r);
    let mut z = random_unit_vector(n, rng);
    let mut prev = f64::INFINITY;
    let mut sigma = f64::INFINITY;
    let mut iterations = 0;
    for _ in 0..max_iters.max(1) {
        iterations += 1;
        let x = solve_upper_adjoint(&rg, &z);
        let mut y = solve_upper(&rg, &x);
        if normalize(&mut y) == 0.0 || !y.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            break;
        }
        z = y;
        sigma = norm2(&r.mul_vec(&z));
        let ratio = sigma / prev;
        if (0.9..=1.1).contains(&ratio) {
            break;
        }
        prev = sigma;
    }
    Ok(NullVector { z, sigma, iterations, perturbed })
}

/// Smallest singular value of a square upper-triangular matrix.
pub fn smallest_singular_triangular(r: &Matrix) -> f64 {
    let n = r.rows();
    if n == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (rg, _) = guarded(r);
    let mut z = random_unit_vector(n, &mut rng);
    let mut prev = f64::INFINITY;
    let mut sigma = f64::INFINITY;
    for _ in 0..60 {
        let x = solve_upper_adjoint(&rg, &z);
        let mut y = solve_upper(&rg, &x);
        if normalize(&mut y) == 0.0 || !y.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return 0.0;
        }
        z = y;
        sigma = norm2(&r.mul_vec(&z));
        if (sigma - prev).abs() <= 1e-6 * sigma {
            break;
        }
        prev = sigma;
    }
    sigma
}

/// Estimate of the second smallest singular value of `R` given the null-vector
/// estimate `z`: the smallest singular value of `R W`, where `W` is an
/// orthonormal basis of the complement of `z`.
pub fn second_smallest_singular(r: &Matrix, z: &[C64]) -> Result<f64> {
    let n = r.rows();
    if n < 2 {
        return Ok(f64::INFINITY);
    }
    let basis = householder_qr(&Matrix::from_columns(n, &[z.to_vec()]), false)?.q;
    let restricted = r.matmul(&basis.columns(1, n));
    let tri = householder_qr(&restricted, true)?.r;
    Ok(smallest_singular_triangular(&tri))
}

/// Power-iteration estimate of `||M||_2`.
pub fn spectral_norm_estimate(m: &Matrix) -> f64 {
    let n = m.cols();
    if n == 0 || m.rows() == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xa11ce);
    let mut v = random_unit_vector(n, &mut rng);
    let mut est = 0.0;
    for _ in 0..40 {
        let w = m.mul_vec(&v);
        let nw = norm2(&w);
        if nw == 0.0 {
            return m.norm_fro().max(est);
        }
        let mut u = m.adjoint_mul_vec(&w);
        let nu = normalize(&mut u);
        let new_est = nu / nw;
        v = u;
        if (new_est - est).abs() <= 1e-8 * new_est {
            est = new_est;
            break;
        }
        est = new_est;
    }
    est
}
