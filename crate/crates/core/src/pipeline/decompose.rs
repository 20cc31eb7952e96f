//! Stage two: global staircase and Jordan decompositions assembled from
//! refined eigentriplets.

use crate::error::{JcfError, Result};
use crate::matrix::{norm2, Matrix, C64, ZERO};
use crate::numeric::qr::householder_qr;
use crate::numeric::schur::schur_form;
use crate::numeric::svd::singular_values;
use crate::pipeline::identify::{triangular_right_eigenvector, Deflation};
use crate::staircase::triplet::project_staircase;
use crate::staircase::{eigentriplet_refine, AuxVectors, Eigentriplet, RefineOptions};
use crate::structure::{conjugate_partition, prefix_sums, validate_partition};

/// `A U = U T` with `U` unitary and `T` block upper triangular: one
/// `lambda_i I + S_i` block per triplet followed by an upper triangular block
/// holding the deflated simple eigenvalues.
#[derive(Clone, Debug)]
pub struct StaircaseDecomposition {
    pub u: Matrix,
    pub t: Matrix,
    /// Order of each diagonal block, the simple block last when present.
    pub blocks: Vec<usize>,
    /// Eigenvalue of each staircase block. Differs from the triplet's own
    /// eigenvalue by the refinement on the compressed matrix.
    pub eigenvalues: Vec<C64>,
    /// `||A U - U T||_F / ||A||_F`.
    pub residual: f64,
}

/// `A X = X J` with `J` a direct sum of elementary Jordan blocks.
#[derive(Clone, Debug)]
pub struct JordanDecomposition {
    pub x: Matrix,
    pub j: Matrix,
    /// `(eigenvalue, block size)` in the order the blocks appear in `J`.
    pub blocks: Vec<(C64, usize)>,
    /// `||A X - X J||_F / ||A||_F`.
    pub residual: f64,
}

/// Assembles the global staircase form. The first triplet supplies the
/// leading columns of `U` as they are. Each later triplet is compressed onto
/// the orthogonal complement of the columns placed so far and refined there
/// again, which keeps nearly parallel invariant subspaces from amplifying the
/// residual. The remaining complement is brought to Schur form, and
/// `U^H A U` is projected onto the block pattern.
pub fn assemble_staircase(a: &Matrix, triplets: &[&Eigentriplet], opts: &RefineOptions) -> Result<StaircaseDecomposition> {
    let n = a.rows();
    let sizes: Vec<usize> = triplets.iter().map(|t| t.multiplicity()).collect();
    let k: usize = sizes.iter().sum();
    if k > n {
        return Err(JcfError::Dimension(format!("triplets span {k} columns in dimension {n}")));
    }
    let mut u = Matrix::identity(n);
    let mut placed = 0;
    let mut eigenvalues = Vec::with_capacity(triplets.len());
    for tr in triplets {
        let m = tr.multiplicity();
        let (cols, lambda) = if placed == 0 {
            (householder_qr(&tr.y, true)?.q, tr.lambda)
        } else {
            let w = u.columns(placed, n);
            compressed_columns(a, &w, tr, opts)?
        };
        eigenvalues.push(lambda);
        let mut basis = Matrix::zeros(n, placed + m);
        basis.set_block(0, 0, &u.columns(0, placed));
        basis.set_block(0, placed, &cols);
        u = householder_qr(&basis, false)?.q;
        placed += m;
    }
    if k < n {
        let w = u.columns(k, n);
        let inner = schur_form(&w.adjoint_mul(&a.matmul(&w)))?;
        u.set_block(0, k, &w.matmul(&inner.q));
    }
    let full = u.adjoint_mul(&a.matmul(&u));
    let mut blocks = sizes.clone();
    if k < n {
        blocks.push(n - k);
    }
    let offs = prefix_sums(&blocks);
    let mut t = full.clone();
    for bi in 0..blocks.len() {
        for bj in 0..bi {
            for r in offs[bi]..offs[bi + 1] {
                for c in offs[bj]..offs[bj + 1] {
                    t[(r, c)] = ZERO;
                }
            }
        }
    }
    for (i, (tr, &lambda)) in triplets.iter().zip(&eigenvalues).enumerate() {
        let (r0, r1) = (offs[i], offs[i + 1]);
        let diag = full.submatrix(r0, r1, r0, r1).shifted(lambda);
        let s = project_staircase(&diag, &tr.weyr);
        t.set_block(r0, r0, &s.add(&Matrix::identity(r1 - r0).scale(lambda)));
    }
    if k < n {
        for r in k..n {
            for c in k..r {
                t[(r, c)] = ZERO;
            }
        }
    }
    let residual = a.matmul(&u).sub(&u.matmul(&t)).norm_fro() / a.norm_fro().max(f64::MIN_POSITIVE);
    Ok(StaircaseDecomposition { u, t, blocks, eigenvalues, residual })
}

/// Columns `W Y` and eigenvalue of the triplet refined on `W^H A W`. Falls
/// back to the projection of the original columns when the refinement does
/// not improve the residual.
fn compressed_columns(a: &Matrix, w: &Matrix, tr: &Eigentriplet, opts: &RefineOptions) -> Result<(Matrix, C64)> {
    let ac = w.adjoint_mul(&a.matmul(w));
    let y0 = householder_qr(&w.adjoint_mul(&tr.y), true)?.q;
    let s0 = project_staircase(&y0.adjoint_mul(&ac.matmul(&y0)).shifted(tr.lambda), &tr.weyr);
    let start = Eigentriplet { lambda: tr.lambda, y: y0, s: s0, weyr: tr.weyr.clone() };
    let before = start.backward_residual(&ac);
    let aux = AuxVectors { b: start.y.clone(), c: start.y.clone() };
    match eigentriplet_refine(&ac, &start, &aux, opts) {
        Ok(r) if r.diagnostics.residual <= before => Ok((w.matmul(&r.triplet.y), r.triplet.lambda)),
        _ => Ok((w.matmul(&start.y), tr.lambda)),
    }
}

/// Jordan basis of the staircase block `lambda I + s`: `(lambda I + s) g = g j`
/// with `j` the direct sum of Jordan blocks sized by the conjugate of `weyr`,
/// largest first. Each chain is scaled so that its eigenvector has unit norm.
pub fn staircase_to_jordan_local(lambda: C64, s: &Matrix, weyr: &[usize]) -> Result<(Matrix, Matrix)> {
    validate_partition(weyr)?;
    let m: usize = weyr.iter().sum();
    if s.shape() != (m, m) {
        return Err(JcfError::Dimension(format!("staircase block must be {m}x{m}")));
    }
    let mu = prefix_sums(weyr);
    let levels = weyr.len();
    let scale = s.norm_fro().max(1.0);
    for l in 0..levels.saturating_sub(1) {
        let sup = s.submatrix(mu[l], mu[l + 1], mu[l + 1], mu[l + 2]);
        let sv = singular_values(&sup);
        let smin = sv.last().copied().unwrap_or(0.0);
        if !(smin > 1e2 * f64::EPSILON * scale) {
            return Err(JcfError::InvalidStaircase(format!("super-diagonal block {} has lost rank", l + 1)));
        }
    }
    // Heads of chains of length l+1 live in block l and complement the
    // block-l components of the chains started above.
    let mut chains: Vec<Vec<Vec<C64>>> = Vec::new();
    for l in (0..levels).rev() {
        let ml = weyr[l];
        for c in chains.iter_mut() {
            let v = s.mul_vec(c.last().expect("nonempty"));
            c.push(v);
        }
        let carried: Vec<Vec<C64>> = chains.iter().map(|c| c[c.len() - 1][mu[l]..mu[l + 1]].to_vec()).collect();
        let fresh = ml - carried.len();
        if fresh > 0 {
            let basis = if carried.is_empty() {
                Matrix::identity(ml)
            } else {
                householder_qr(&Matrix::from_columns(ml, &carried), false)?.q
            };
            for f in 0..fresh {
                let col = basis.col(carried.len() + f);
                let mut head = vec![ZERO; m];
                head[mu[l]..mu[l + 1]].copy_from_slice(&col);
                chains.push(vec![head]);
            }
        }
    }
    let segre = conjugate_partition(weyr)?;
    let mut g = Matrix::zeros(m, m);
    let mut j = Matrix::zeros(m, m);
    let mut col = 0;
    for (chain, &len) in chains.iter().zip(&segre) {
        debug_assert_eq!(chain.len(), len);
        let eig = norm2(chain.last().expect("nonempty"));
        for (p, v) in chain.iter().rev().enumerate() {
            let scaled: Vec<C64> = v.iter().map(|x| x / eig).collect();
            g.set_col(col + p, &scaled);
            j[(col + p, col + p)] = lambda;
            if p > 0 {
                j[(col + p - 1, col + p)] = C64::new(1.0, 0.0);
            }
        }
        col += len;
    }
    Ok((g, j))
}

/// `X = [U_1 G_1, ..., U_k G_k, x_simple]` with the simple eigenvectors taken
/// from the reordered Schur form.
pub fn assemble_jordan(a: &Matrix, triplets: &[&Eigentriplet], deflation: Option<&Deflation>) -> Result<JordanDecomposition> {
    let n = a.rows();
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    let mut diag_blocks: Vec<Matrix> = Vec::new();
    let mut blocks = Vec::new();
    for t in triplets {
        let (g, jl) = staircase_to_jordan_local(t.lambda, &t.s, &t.weyr)?;
        let yg = t.y.matmul(&g);
        for c in 0..yg.cols() {
            cols.push(yg.col(c));
        }
        let segre = conjugate_partition(&t.weyr)?;
        blocks.extend(segre.iter().map(|&s| (t.lambda, s)));
        diag_blocks.push(jl);
    }
    if let Some(d) = deflation {
        let tt = &d.schur.t;
        for i in d.leading()..n {
            let x = d.schur.q.mul_vec(&triangular_right_eigenvector(tt, i));
            cols.push(x);
            diag_blocks.push(Matrix::from_diag(&[tt[(i, i)]]));
            blocks.push((tt[(i, i)], 1));
        }
    }
    if cols.len() != n {
        return Err(JcfError::Dimension(format!("Jordan basis has {} columns in dimension {n}", cols.len())));
    }
    let x = Matrix::from_columns(n, &cols);
    let mut j = Matrix::zeros(n, n);
    let mut off = 0;
    for b in &diag_blocks {
        j.set_block(off, off, b);
        off += b.rows();
    }
    let residual = a.matmul(&x).sub(&x.matmul(&j)).norm_fro() / a.norm_fro().max(f64::MIN_POSITIVE);
    Ok(JordanDecomposition { x, j, blocks, residual })
}
