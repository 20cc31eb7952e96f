//! Test matrices with known Jordan structure.

use rand::Rng;

use crate::error::{JcfError, Result};
use crate::matrix::{Matrix, C64, ZERO};
use crate::numeric::qr::HouseholderQr;
use crate::numeric::svd::singular_values;
use crate::structure::validate_partition;

const EXAMPLE_20: [[i32; 20]; 20] = [
    [  1,   0,  20,  93,   0,  71,  34,   6, -20,   3,  31, -14,   0,   0, -19,  14, -11,   0,   3,  -6],
    [ 17,   7, -32, -84,   3, -69, -33,  -9,  21,  -3, -30,  17,  -2,  -4,  15, -12,   9,   0,  -3,   9],
    [ 10,   5,  40, 247,   0, 193,  92,  17, -58,   9,  83, -21,  -5,   0, -48,  27, -25,   0,   9, -17],
    [ -7,  -3,   0, -39,  -3, -34, -19,  -4,  13,   0, -15,  -1,   0,   0,   7,   1,   2,   0,   0,   4],
    [ -6,   0,  62, 307,  -1, 248, 118,  26, -77,  12, 106, -30,  -3,   4, -56,  31, -29,   0,  12, -26],
    [ -5,  -1,  22,  86,   3,  71,  39,   1, -22,  -1,  31, -18,   4,   0, -17,  10,  -9,   3,  -1,  -7],
    [ -3,   0,  -5, -37,   0, -29, -15,  11,   9,   1, -13,   4,   0,   0,   8,  -4,   4,  -6,   1,   1],
    [  1,   0,   3,  26,   0,  22,  11,   4, -15,   0,  11,   0,   0,   0,  -4,   0,   0,   1,   0,  -3],
    [ 12,   4, -15,  -9,   0,  -6,  -1,  -2,  -1,  -8,  -1,  16,  -4,   0,   3,  -8,   4,   3,  -4,  -1],
    [ -3,   0,  11,  45,   0,  37,  19,   7, -15,   1,  19,  -4,   0,   0,  -8,   4,  -4,   0,  -1,  -7],
    [ 48,  16, -64, -63,   0, -47, -24,  -7,   5,  -7, -18,  60, -16,   0,  16, -28,  15,   3,  -3,   4],
    [ 16,   9,  10, 145,   0, 116,  55,  11, -38,   6,  49,   3,  -9,  -4, -26,  10, -11,   0,   6, -11],
    [ 21,   8, -39, -93,   3, -75, -36,  -9,  21,  -3, -33,  24,  -3, -12,  18, -15,  12,   0,  -3,   9],
    [ -3,   0,  -3, -18,   0, -12,  -6,   0,   3,   0,  -6,   3,   0,   3,   6,  -3,   3,   0,   0,   0],
    [ -3,   1,  16,  57,  -3,  41,  17,   5,  -7,   3,  18, -11,  -4,   0, -11,  19, -11,  -3,   3,  -2],
    [  4,   4, -10, -18,   0, -12,  -6,  -3,   0,   0,  -6,  10,  -4,  -4,   6,  -3,   6,   3,   0,   0],
    [ 15,   4, -24, -27,   0, -18,  -7, -11,  -4,  -8,  -7,  25,  -4,   0,   9, -17,  13,  12,  -4,  -1],
    [  1,   0,   3,  26,   0,  22,  11,   1, -15,   0,  11,   0,   0,   0,  -4,   0,   0,   4,   0,  -3],
    [ 18,   4, -36, -95,   0, -77, -42,  -7,  27,   3, -38,  23,  -4,   0,  18, -15,  11,  -3,   5,  13],
    [ 22,   9,  10, 177,   0, 142,  68,  12, -53,   6,  62,   3,  -9,   0, -32,  11, -13,   1,   6, -11],
];

/// Entries `(constant, coefficient of t)`.
const PARAMETRIC_10: [[(i32, i32); 10]; 10] = [
    [(0, 1), (2, 1), (0, -1), (-2, 0), (-1, -3), (-2, 0), (2, 0), (-1, 1), (0, -1), (0, 0)],
    [(1, -1), (-1, -3), (0, 2), (2, 1), (2, 6), (2, 1), (-3, -1), (1, -1), (1, 2), (1, 0)],
    [(0, 2), (0, -4), (2, 0), (0, 4), (0, 1), (0, 3), (0, -2), (0, 1), (0, 0), (0, 0)],
    [(-1, 1), (0, -7), (0, 2), (1, 4), (1, 10), (-1, 4), (-1, -5), (0, 0), (1, 3), (1, 1)],
    [(0, 3), (0, -4), (0, 0), (0, 4), (3, 1), (0, 4), (1, -3), (0, 2), (0, 0), (-1, 0)],
    [(2, -3), (-4, 5), (0, 0), (4, -4), (1, -5), (6, -4), (-2, 6), (1, -1), (0, -1), (0, -2)],
    [(-3, 4), (2, -3), (0, -1), (-2, 4), (-1, -3), (-2, 4), (6, -2), (-1, 4), (0, -1), (-1, -1)],
    [(0, 4), (0, -5), (0, 0), (0, 5), (0, 1), (0, 5), (1, -4), (3, 3), (0, 0), (-1, 0)],
    [(-2, -3), (-2, 2), (0, 1), (0, -3), (1, 2), (0, -3), (-3, 2), (0, -2), (4, 1), (3, 0)],
    [(-3, 4), (2, -3), (0, -1), (-2, 4), (-1, -3), (-2, 4), (3, -2), (-1, 4), (0, -1), (2, -1)],
];

/// Entries `[constant, coefficient of r, of s, of t]`.
const PARAMETRIC_6: [[[i32; 4]; 6]; 6] = [
    [[-5, 2, -1, 0], [0, -1, 3, -2], [20, 0, -2, 2], [15, 0, -2, 2], [10, 0, 0, 0], [-5, 0, 1, -1]],
    [[-5, 2, -2, 0], [-15, -1, 6, -4], [50, 0, -4, 4], [40, 0, -4, 4], [20, 0, 0, 0], [-15, 0, 2, -2]],
    [[0, 0, 0, 0], [-10, 0, -2, 2], [10, 0, 4, -3], [10, 0, 3, -3], [0, 0, 1, -1], [-5, 0, -1, 1]],
    [[-5, 2, -2, 0], [-10, -1, 8, -7], [50, 0, -8, 8], [40, 0, -7, 8], [25, 0, -1, 1], [-15, 0, 3, -3]],
    [[5, -2, 2, 0], [25, 1, -6, 5], [-65, 0, 4, -4], [-55, 0, 4, -4], [-25, 0, 0, 1], [25, 0, -2, 2]],
    [[0, 0, 0, 0], [-5, 0, 0, 0], [10, 0, 0, 0], [10, 0, 0, 0], [5, 0, 0, 0], [-5, 0, 0, 1]],
];

const CLASSIC_10: [[i32; 10]; 10] = [
    [1, 1, 1, -2, 1, -1, 2, -2, 4, -3],
    [-1, 2, 3, -4, 2, -2, 4, -4, 8, -6],
    [-1, 0, 5, -5, 3, -3, 6, -6, 12, -9],
    [-1, 0, 3, -4, 4, -4, 8, -8, 16, -12],
    [-1, 0, 3, -6, 5, -4, 10, -10, 20, -15],
    [-1, 0, 3, -6, 2, -2, 12, -12, 24, -18],
    [-1, 0, 3, -6, 2, -5, 15, -13, 28, -21],
    [-1, 0, 3, -6, 2, -5, 12, -11, 32, -24],
    [-1, 0, 3, -6, 2, -5, 12, -14, 37, -26],
    [-1, 0, 3, -6, 2, -5, 12, -14, 36, -25],
];

fn from_ints<const N: usize>(rows: &[[i32; N]]) -> Matrix {
    Matrix::from_fn(rows.len(), N, |i, j| C64::new(rows[i][j] as f64, 0.0))
}

/// 20x20 integer matrix with eigenvalue 2 of Segre characteristic {9, 1} and
/// eigenvalue 3 of Segre characteristic {8, 2}.
pub fn sensitivity_example() -> Matrix {
    from_ints(&EXAMPLE_20)
}

/// 10x10 integer matrix with eigenvalues 1 {1}, 2 {3, 2} and 3 {2, 2}.
pub fn classic_example() -> Matrix {
    from_ints(&CLASSIC_10)
}

/// 10x10 family with eigenvalues 2 {3, 1} and 3 {4, 2} for every `t > 0`;
/// the eigenvector matrix grows ill conditioned as `t` increases.
pub fn parametric_example(t: f64) -> Matrix {
    Matrix::from_fn(10, 10, |i, j| {
        let (c0, c1) = PARAMETRIC_10[i][j];
        C64::new(c0 as f64 + c1 as f64 * t, 0.0)
    })
}

/// 6x6 matrix with eigenvalues `r` {1}, `s` {2} and `t` {3}.
pub fn three_eigenvalue_example(r: f64, s: f64, t: f64) -> Matrix {
    Matrix::from_fn(6, 6, |i, j| {
        let [c0, cr, cs, ct] = PARAMETRIC_6[i][j];
        C64::new(c0 as f64 + cr as f64 * r + cs as f64 * s + ct as f64 * t, 0.0)
    })
}

/// Frank matrix: `f_ij = n + 1 - max(i, j)` for `j >= i - 1` (one-based), zero otherwise.
pub fn frank(n: usize) -> Matrix {
    Matrix::from_fn(n, n, |i, j| {
        if j + 1 >= i {
            C64::new((n - i.max(j)) as f64, 0.0)
        } else {
            ZERO
        }
    })
}

/// Block diagonal Jordan matrix; blocks of each eigenvalue in Segre order.
pub fn jordan_matrix(structure: &[(C64, Vec<usize>)]) -> Result<Matrix> {
    let n: usize = structure.iter().map(|(_, s)| s.iter().sum::<usize>()).sum();
    let mut j = Matrix::zeros(n, n);
    let mut pos = 0;
    for (lambda, segre) in structure {
        validate_partition(segre)?;
        for &k in segre {
            for i in 0..k {
                j[(pos + i, pos + i)] = *lambda;
                if i + 1 < k {
                    j[(pos + i, pos + i + 1)] = C64::new(1.0, 0.0);
                }
            }
            pos += k;
        }
    }
    Ok(j)
}

/// `X M X^{-1}` for invertible `X`.
pub fn similarity(x: &Matrix, m: &Matrix) -> Result<Matrix> {
    let xm = x.matmul(m);
    // A X = X M, solved row-wise as X^T A^T = (X M)^T.
    let qr = HouseholderQr::factor(&x.transpose());
    let rhs = xm.transpose();
    let mut at = Matrix::zeros(x.rows(), x.rows());
    for j in 0..x.rows() {
        at.set_col(j, &qr.solve(&rhs.col(j))?);
    }
    Ok(at.transpose())
}

#[derive(Clone, Debug)]
pub struct SeededMatrix {
    pub a: Matrix,
    /// Multiple eigenvalues with their Segre characteristics.
    pub structure: Vec<(C64, Vec<usize>)>,
    /// Number of additional simple eigenvalues.
    pub simple: usize,
    pub x_condition: f64,
}

const MAX_DRAWS: usize = 100;

/// Real matrix `X (J + B) X^{-1}` where `J` carries the prescribed Jordan
/// blocks, `B` is a random real block of the remaining size with entries in
/// `[-1, 1]`, and `X` is random with 2-norm condition number at most `cond_bound`.
pub fn jordan_seeded(
    structure: &[(f64, Vec<usize>)],
    n: usize,
    cond_bound: f64,
    rng: &mut impl Rng,
) -> Result<SeededMatrix> {
    let seeded: Vec<(C64, Vec<usize>)> = structure.iter().map(|(l, s)| (C64::new(*l, 0.0), s.clone())).collect();
    let j = jordan_matrix(&seeded)?;
    let k = j.rows();
    if k > n {
        return Err(JcfError::Dimension(format!("Jordan part of size {k} exceeds {n}")));
    }
    let mut m = Matrix::zeros(n, n);
    m.set_block(0, 0, &j);
    for i in k..n {
        for l in k..n {
            m[(i, l)] = C64::new(rng.random_range(-1.0..1.0), 0.0);
        }
    }
    for _ in 0..MAX_DRAWS {
        let x = Matrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), 0.0));
        let s = singular_values(&x);
        let cond = s[0] / s[n - 1];
        if cond <= cond_bound {
            let a = similarity(&x, &m)?;
            return Ok(SeededMatrix { a, structure: seeded, simple: n - k, x_condition: cond });
        }
    }
    Err(JcfError::Identification(format!("no eigenvector matrix with condition below {cond_bound} found")))
}
