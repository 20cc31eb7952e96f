use rand::Rng;

use crate::error::{JcfError, Result};
use crate::matrix::{norm2, Matrix, C64, ZERO};
use crate::numeric::inverse_iteration::{inverse_iteration_null_vector, random_unit_vector, second_smallest_singular};
use crate::numeric::qr::{householder_qr, qr_delete_row, qr_insert_row};
use crate::staircase::triplet::{AuxVectors, Eigentriplet};
use crate::structure::{prefix_sums, validate_partition};

/// A smallest singular value within this factor of the next one means the
/// null space is not one dimensional.
const ISOLATION_FACTOR: f64 = 10.0;

const NULL_VECTOR_ITERS: usize = 20;

pub fn random_aux_columns(n: usize, m: usize, rng: &mut impl Rng) -> Matrix {
    let cols: Vec<Vec<C64>> = (0..m).map(|_| random_unit_vector(n, rng)).collect();
    Matrix::from_columns(n, &cols)
}

/// Builds an approximate staircase eigentriplet column by column, each column
/// being the null vector of a small bordered system. Returns the triplet and
/// the auxiliary vectors (`b` as given or random, `c` equal to the computed
/// orthonormal columns).
pub fn initial_eigentriplet(
    a: &Matrix,
    lambda0: C64,
    weyr: &[usize],
    b: Option<&Matrix>,
    rng: &mut impl Rng,
) -> Result<(Eigentriplet, AuxVectors)> {
    validate_partition(weyr)?;
    if weyr.is_empty() {
        return Err(JcfError::InvalidPartition("empty Weyr characteristic".into()));
    }
    if !a.is_square() || a.rows() == 0 {
        return Err(JcfError::Dimension("matrix must be square and nonempty".into()));
    }
    if !a.is_finite() {
        return Err(JcfError::NonFinite);
    }
    let n = a.rows();
    let m: usize = weyr.iter().sum();
    if m > n {
        return Err(JcfError::InvalidPartition(format!("multiplicity {m} exceeds dimension {n}")));
    }
    let b = match b {
        Some(b) if b.shape() != (n, m) => {
            return Err(JcfError::Dimension(format!("auxiliary b must be {n}x{m}")));
        }
        Some(b) => b.clone(),
        None => random_aux_columns(n, m, rng),
    };
    let mu = prefix_sums(weyr);
    let shifted = a.shifted(lambda0);
    let mut u_cols: Vec<Vec<C64>> = Vec::with_capacity(m);
    let mut s = Matrix::zeros(m, m);

    for (blk, &mb) in weyr.iter().enumerate() {
        let prev = mu[blk];
        let cols = n + prev;
        let head = mb - 1;
        let rows = head + n + prev;
        let mut g = Matrix::zeros(rows, cols);
        for (r, bi) in (prev + 1..mu[blk + 1]).enumerate() {
            for k in 0..n {
                g[(r, k)] = b[(k, bi)].conj();
            }
        }
        for i in 0..n {
            for k in 0..n {
                g[(head + i, k)] = shifted[(i, k)];
            }
            for (l, u) in u_cols.iter().enumerate() {
                g[(head + i, n + l)] = -u[i];
            }
        }
        for (l, u) in u_cols.iter().enumerate() {
            for k in 0..n {
                g[(head + n + l, k)] = u[k].conj();
            }
        }
        let mut qr = householder_qr(&g, false)?;
        for j in 0..mb {
            if j > 0 {
                qr = qr_delete_row(&qr, 0)?;
                let mut row = vec![ZERO; cols];
                for (k, x) in u_cols.last().expect("column added").iter().enumerate() {
                    row[k] = x.conj();
                }
                let last = qr.r.rows();
                qr = qr_insert_row(&qr, last, &row)?;
            }
            let r = qr.r.submatrix(0, cols, 0, cols);
            let nv = inverse_iteration_null_vector(&r, NULL_VECTOR_ITERS, rng)?;
            let sigma2 = second_smallest_singular(&r, &nv.z)?;
            if sigma2 <= ISOLATION_FACTOR * nv.sigma {
                return Err(JcfError::StructureMismatch { block: blk + 1, column: j + 1 });
            }
            let unorm = norm2(&nv.z[..n]);
            if unorm <= f64::EPSILON * norm2(&nv.z) {
                return Err(JcfError::StructureMismatch { block: blk + 1, column: j + 1 });
            }
            let scale = C64::new(1.0 / unorm, 0.0);
            let u: Vec<C64> = nv.z[..n].iter().map(|x| x * scale).collect();
            for l in 0..prev {
                s[(l, prev + j)] = nv.z[n + l] * scale;
            }
            u_cols.push(u);
        }
    }
    let y = Matrix::from_columns(n, &u_cols);
    let aux = AuxVectors { b, c: y.clone() };
    Ok((Eigentriplet { lambda: lambda0, y, s, weyr: weyr.to_vec() }, aux))
}
