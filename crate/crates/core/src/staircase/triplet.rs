use crate::error::{JcfError, Result};
use crate::matrix::{Matrix, C64, ZERO};
use crate::structure::{block_of_index, prefix_sums, validate_partition};

/// `A Y = Y (lambda I + S)` with `S` strictly block upper triangular in the
/// block pattern given by the Weyr characteristic.
#[derive(Clone, Debug)]
pub struct Eigentriplet {
    pub lambda: C64,
    pub y: Matrix,
    pub s: Matrix,
    pub weyr: Vec<usize>,
}

/// Auxiliary vectors of the staircase system. The columns of `c` fix the
/// normalization of `Y`; the columns of `b` fix the unitary freedom inside
/// each Weyr block.
#[derive(Clone, Debug)]
pub struct AuxVectors {
    pub b: Matrix,
    pub c: Matrix,
}

/// Positions `(row, col)` of the free entries of `S`, ordered column by
/// column over the columns of blocks two and up, rows top to bottom.
pub fn s_positions(weyr: &[usize]) -> Vec<(usize, usize)> {
    let mu = prefix_sums(weyr);
    let mut out = Vec::new();
    for l in 1..weyr.len() {
        for col in mu[l]..mu[l + 1] {
            for row in 0..mu[l] {
                out.push((row, col));
            }
        }
    }
    out
}

/// True when `(row, col)` lies strictly above the block diagonal.
pub fn in_staircase_pattern(blocks: &[usize], row: usize, col: usize) -> bool {
    blocks[row] < blocks[col]
}

/// Keeps only the strictly block upper triangular part of `s`.
pub fn project_staircase(s: &Matrix, weyr: &[usize]) -> Matrix {
    let blocks = block_of_index(weyr);
    Matrix::from_fn(s.rows(), s.cols(), |i, j| if in_staircase_pattern(&blocks, i, j) { s[(i, j)] } else { ZERO })
}

impl Eigentriplet {
    pub fn multiplicity(&self) -> usize {
        self.y.cols()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        validate_partition(&self.weyr)?;
        let m: usize = self.weyr.iter().sum();
        if self.y.shape() != (n, m) || self.s.shape() != (m, m) {
            return Err(JcfError::Dimension(format!(
                "triplet shapes Y {:?}, S {:?} do not match n = {n}, Weyr sum {m}",
                self.y.shape(),
                self.s.shape()
            )));
        }
        Ok(())
    }

    /// `lambda I + S`.
    pub fn block(&self) -> Matrix {
        let m = self.multiplicity();
        let mut t = self.s.clone();
        for i in 0..m {
            t[(i, i)] += self.lambda;
        }
        t
    }

    /// `A Y - Y (lambda I + S)`.
    pub fn residual_matrix(&self, a: &Matrix) -> Matrix {
        a.matmul(&self.y).sub(&self.y.matmul(&self.block()))
    }

    /// `||A Y - Y (lambda I + S)||_F / ||A||_F`.
    pub fn backward_residual(&self, a: &Matrix) -> f64 {
        let na = a.norm_fro();
        let r = self.residual_matrix(a).norm_fro();
        if na == 0.0 {
            r
        } else {
            r / na
        }
    }
}
