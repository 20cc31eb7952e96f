//! The overdetermined staircase system, its residual and Jacobian.
//!
//! Unknowns are ordered `(lambda, y_1, ..., y_m, s)` with the entries of `S`
//! in the order of [`s_positions`]. Equations are ordered as the column
//! blocks of `(A - lambda I) Y - Y S`, then `c_j^H y_i - delta_ij` for
//! `j <= i`, then `b_j^H y_i` over the pairs of [`phi_index_set`].

use crate::error::{JcfError, Result};
use crate::matrix::{dot, Matrix, C64, ONE, ZERO};
use crate::staircase::triplet::{s_positions, AuxVectors, Eigentriplet};
use crate::structure::{phi_index_set, prefix_sums};

/// Sizes `(equations, unknowns)` of the system for dimension `n`.
pub fn system_size(n: usize, weyr: &[usize]) -> (usize, usize) {
    let m: usize = weyr.iter().sum();
    let sq: usize = weyr.iter().map(|x| x * x).sum();
    let eta = n * m + (m * m + sq) / 2;
    let zeta = 1 + n * m + (m * m - sq) / 2;
    (eta, zeta)
}

pub fn pack(t: &Eigentriplet) -> Vec<C64> {
    let (n, m) = t.y.shape();
    let pos = s_positions(&t.weyr);
    let mut x = Vec::with_capacity(1 + n * m + pos.len());
    x.push(t.lambda);
    for j in 0..m {
        x.extend(t.y.col(j));
    }
    x.extend(pos.iter().map(|&(r, c)| t.s[(r, c)]));
    x
}

pub fn unpack(x: &[C64], n: usize, weyr: &[usize]) -> Eigentriplet {
    let m: usize = weyr.iter().sum();
    let mut y = Matrix::zeros(n, m);
    for j in 0..m {
        y.set_col(j, &x[1 + j * n..1 + (j + 1) * n]);
    }
    let mut s = Matrix::zeros(m, m);
    for (k, &(r, c)) in s_positions(weyr).iter().enumerate() {
        s[(r, c)] = x[1 + n * m + k];
    }
    Eigentriplet { lambda: x[0], y, s, weyr: weyr.to_vec() }
}

fn check(a: &Matrix, t: &Eigentriplet, aux: &AuxVectors) -> Result<()> {
    let n = a.rows();
    if !a.is_square() {
        return Err(JcfError::Dimension("matrix must be square".into()));
    }
    t.validate(n)?;
    let m = t.multiplicity();
    if aux.b.shape() != (n, m) || aux.c.shape() != (n, m) {
        return Err(JcfError::Dimension(format!("auxiliary vectors must be {n}x{m}")));
    }
    Ok(())
}

/// Residual vector of the staircase system.
pub fn staircase_residual(a: &Matrix, t: &Eigentriplet, aux: &AuxVectors) -> Result<Vec<C64>> {
    check(a, t, aux)?;
    let n = a.rows();
    let m = t.multiplicity();
    let (eta, _) = system_size(n, &t.weyr);
    let mut f = Vec::with_capacity(eta);
    let r = t.residual_matrix(a);
    for l in 0..m {
        f.extend(r.col(l));
    }
    let ycols: Vec<Vec<C64>> = (0..m).map(|j| t.y.col(j)).collect();
    let ccols: Vec<Vec<C64>> = (0..m).map(|j| aux.c.col(j)).collect();
    let bcols: Vec<Vec<C64>> = (0..m).map(|j| aux.b.col(j)).collect();
    for i in 0..m {
        for j in 0..=i {
            let d = if i == j { ONE } else { ZERO };
            f.push(dot(&ccols[j], &ycols[i]) - d);
        }
    }
    for (i, j) in phi_index_set(&t.weyr)? {
        f.push(dot(&bcols[j], &ycols[i]));
    }
    debug_assert_eq!(f.len(), eta);
    Ok(f)
}

/// Jacobian of [`staircase_residual`] with respect to the packed unknowns.
pub fn staircase_jacobian(a: &Matrix, t: &Eigentriplet, aux: &AuxVectors) -> Result<Matrix> {
    check(a, t, aux)?;
    let n = a.rows();
    let m = t.multiplicity();
    let (eta, zeta) = system_size(n, &t.weyr);
    let mu = prefix_sums(&t.weyr);
    let blocks = crate::structure::block_of_index(&t.weyr);
    let mut jac = Matrix::zeros(eta, zeta);
    let ycol = |i: usize| 1 + i * n;
    for l in 0..m {
        let r0 = l * n;
        // d/d lambda
        for k in 0..n {
            jac[(r0 + k, 0)] = -t.y[(k, l)];
        }
        // d/d y_l: A - lambda I
        for k in 0..n {
            for q in 0..n {
                jac[(r0 + k, ycol(l) + q)] = a[(k, q)];
            }
            jac[(r0 + k, ycol(l) + k)] -= t.lambda;
        }
        // d/d y_i for i above the block of column l: -s_il I
        for i in 0..mu[blocks[l]] {
            let s = t.s[(i, l)];
            if s != ZERO {
                for k in 0..n {
                    jac[(r0 + k, ycol(i) + k)] = -s;
                }
            }
        }
    }
    // d/d s_il = -y_i in equation block l
    for (p, &(i, l)) in s_positions(&t.weyr).iter().enumerate() {
        let col = 1 + n * m + p;
        for k in 0..n {
            jac[(l * n + k, col)] = -t.y[(k, i)];
        }
    }
    let mut row = n * m;
    for i in 0..m {
        for j in 0..=i {
            for k in 0..n {
                jac[(row, ycol(i) + k)] = aux.c[(k, j)].conj();
            }
            row += 1;
        }
    }
    for (i, j) in phi_index_set(&t.weyr)? {
        for k in 0..n {
            jac[(row, ycol(i) + k)] = aux.b[(k, j)].conj();
        }
        row += 1;
    }
    debug_assert_eq!(row, eta);
    Ok(jac)
}
