use crate::error::{JcfError, Result};
use crate::matrix::{Matrix, C64, ZERO};

pub fn check_upper_triangular(r: &Matrix) -> Result<()> {
    if !r.is_square() {
        return Err(JcfError::Dimension(format!("expected square triangular, got {}x{}", r.rows(), r.cols())));
    }
    if r.max_below_diagonal(0) != 0.0 {
        return Err(JcfError::NotTriangular);
    }
    Ok(())
}

/// Solves `R x = b` for square upper-triangular `R` with nonzero diagonal.
pub fn solve_upper(r: &Matrix, b: &[C64]) -> Vec<C64> {
    let n = r.rows();
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        let row = r.row(i);
        let mut acc = x[i];
        for j in i + 1..n {
            acc -= row[j] * x[j];
        }
        x[i] = acc / row[i];
    }
    x
}

/// Solves `R^H x = b` for square upper-triangular `R`.
pub fn solve_upper_adjoint(r: &Matrix, b: &[C64]) -> Vec<C64> {
    let n = r.rows();
    let mut x = b.to_vec();
    for i in 0..n {
        x[i] /= r[(i, i)].conj();
        let xi = x[i];
        if xi == ZERO {
            continue;
        }
        let row = r.row(i);
        for j in i + 1..n {
            x[j] -= row[j].conj() * xi;
        }
    }
    x
}

/// Solves `R X = B` column by column.
pub fn solve_upper_matrix(r: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(b.rows(), b.cols());
    for j in 0..b.cols() {
        out.set_col(j, &solve_upper(r, &b.col(j)));
    }
    out
}
