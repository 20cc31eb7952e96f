//! Chains of minimal polynomials `p_1, p_2, ...` by Hessenberg reduction with
//! a prescribed first column, Gauss-Newton refinement of the partial
//! reduction and recursive deflation to reduced-Hessenberg form.

use rand::Rng;

use crate::error::{JcfError, Result};
use crate::matrix::{norm2, Matrix, C64, ONE, UNIT_ROUNDOFF, ZERO};
use crate::numeric::hessenberg::hessenberg_reduce;
use crate::numeric::inverse_iteration::{inverse_iteration_null_vector, random_unit_vector, smallest_singular_triangular};
use crate::numeric::qr::{householder_qr, HouseholderQr};
use crate::numeric::triangular::solve_upper;
use crate::polynomial::Polynomial;

pub const DEFAULT_GAMMA: f64 = 1e-4;
pub const REFINE_ITERS: usize = 10;
const REDRAWS: usize = 3;
/// A Gauss-Newton step that fails to halve the residual ends the refinement.
const STALL_FACTOR: f64 = 0.5;
/// Ratio below which the step after a deficiency still counts as dropping.
const CONTINUED_DROP: f64 = 0.1;
const MAX_CANDIDATES: usize = 4;
/// Starting vectors per level; the largest verified degree is kept since a
/// non-regular vector can only lower it.
const REGULARITY_DRAWS: usize = 3;

/// Leading `j` columns of a Hessenberg reduction whose first basis vector is `v`.
#[derive(Clone, Debug)]
pub struct PartialHessenberg {
    /// `n x j` orthonormal columns.
    pub q: Matrix,
    /// `j x j` upper Hessenberg.
    pub h: Matrix,
    /// `h_{j+1,j}`; zero when `j = n`.
    pub coupling: C64,
    pub start: Vec<C64>,
}

impl PartialHessenberg {
    pub fn degree(&self) -> usize {
        self.q.cols()
    }

    /// `||A Q - Q H||_F`.
    pub fn residual(&self, a: &Matrix) -> f64 {
        a.matmul(&self.q).sub(&self.q.matmul(&self.h)).norm_fro()
    }
}

#[derive(Clone, Debug)]
pub struct Breakpoint {
    pub partial: PartialHessenberg,
    /// `sigma_min` of `[e_1, h_1, ..., h_j]` for `j = 0, 1, ...`.
    pub sigmas: Vec<f64>,
    /// Ratio `sigma_j / sigma_{j-1}` at the returned degree, or `None` when
    /// no deficiency was found before `n`.
    pub ratio: Option<f64>,
}

/// `[e_1, h_1, ..., h_j]` as a `(j+1) x (j+1)` upper triangular matrix.
fn krylov_triangle(h: &Matrix, j: usize) -> Matrix {
    Matrix::from_fn(j + 1, j + 1, |r, c| match c {
        0 => {
            if r == 0 {
                ONE
            } else {
                ZERO
            }
        }
        _ => h[(r, c - 1)],
    })
}

/// Full reduction with first column `v` and `sigma_min([e_1, h_1, ..., h_j])`
/// for every `j`.
#[derive(Clone, Debug)]
pub struct KrylovScan {
    pub q: Matrix,
    pub h: Matrix,
    /// `sigmas[0] = 1`, then one value per step `j = 1, ..., n - 1`.
    pub sigmas: Vec<f64>,
}

impl KrylovScan {
    pub fn new(a: &Matrix, v: &[C64]) -> Result<Self> {
        let n = a.rows();
        let hf = hessenberg_reduce(a, Some(v))?;
        let mut sigmas = vec![1.0];
        for j in 1..n {
            sigmas.push(smallest_singular_triangular(&krylov_triangle(&hf.h, j)));
        }
        Ok(KrylovScan { q: hf.q, h: hf.h, sigmas })
    }

    /// `sigma_j / sigma_{j-1}`, zero once the sequence has hit exact zero.
    pub fn ratio(&self, j: usize) -> f64 {
        let prev = self.sigmas[j - 1];
        if prev > 0.0 {
            self.sigmas[j] / prev
        } else {
            0.0
        }
    }

    pub fn first_deficiency(&self, gamma: f64) -> Option<usize> {
        (1..self.sigmas.len()).find(|&j| self.ratio(j) < gamma)
    }

    pub fn partial(&self, j: usize) -> PartialHessenberg {
        let n = self.q.rows();
        PartialHessenberg {
            q: self.q.columns(0, j),
            h: self.h.submatrix(0, j, 0, j),
            coupling: if j < n { self.h[(j, j - 1)] } else { ZERO },
            start: self.q.col(0),
        }
    }
}

/// Runs the reduction with first column `v` and returns the first degree `j`
/// at which `sigma_min([e_1, h_1, ..., h_j])` drops by more than `gamma`
/// relative to the previous step.
pub fn krylov_breakpoint(a: &Matrix, v: &[C64], gamma: f64) -> Result<Breakpoint> {
    let scan = KrylovScan::new(a, v)?;
    let found = scan.first_deficiency(gamma);
    let j = found.unwrap_or(a.rows());
    Ok(Breakpoint { partial: scan.partial(j), sigmas: scan.sigmas[..j.min(a.rows() - 1) + 1].to_vec(), ratio: found.map(|j| scan.ratio(j)) })
}

/// Number of free entries in column `l` of a `j x j` Hessenberg matrix.
fn hess_rows(l: usize, j: usize) -> usize {
    (l + 2).min(j)
}

fn hess_offsets(j: usize) -> Vec<usize> {
    let mut out = vec![0];
    for l in 0..j {
        out.push(out[l] + hess_rows(l, j));
    }
    out
}

/// Residual of the refinement system: `A Q - Q H` column by column, then
/// `c_k^H q_i - delta_ik` for `k <= i`, then `q_1 - v`.
pub fn hessenberg_system_residual(a: &Matrix, p: &PartialHessenberg, c: &Matrix) -> Vec<C64> {
    let (n, j) = p.q.shape();
    let r = a.matmul(&p.q).sub(&p.q.matmul(&p.h));
    let mut f = Vec::with_capacity(n * j + j * (j + 1) / 2 + n);
    for l in 0..j {
        f.extend(r.col(l));
    }
    let ch = c.adjoint_mul(&p.q);
    for i in 0..j {
        for k in 0..=i {
            f.push(ch[(k, i)] - if i == k { ONE } else { ZERO });
        }
    }
    f.extend(p.q.col(0).iter().zip(&p.start).map(|(a, b)| a - b));
    f
}

/// Jacobian of [`hessenberg_system_residual`] in the unknowns `q_1, ..., q_j`
/// followed by the free Hessenberg entries column by column.
pub fn hessenberg_system_jacobian(a: &Matrix, p: &PartialHessenberg, c: &Matrix) -> Matrix {
    let (n, j) = p.q.shape();
    let offs = hess_offsets(j);
    let hcol = n * j;
    let rows = n * j + j * (j + 1) / 2 + n;
    let mut jac = Matrix::zeros(rows, n * j + offs[j]);
    for l in 0..j {
        let r0 = l * n;
        for k in 0..n {
            for q in 0..n {
                jac[(r0 + k, l * n + q)] = a[(k, q)];
            }
        }
        for i in 0..hess_rows(l, j) {
            let h = p.h[(i, l)];
            for k in 0..n {
                jac[(r0 + k, i * n + k)] -= h;
                jac[(r0 + k, hcol + offs[l] + i)] = -p.q[(k, i)];
            }
        }
    }
    let mut row = n * j;
    for i in 0..j {
        for k in 0..=i {
            for q in 0..n {
                jac[(row, i * n + q)] = c[(q, k)].conj();
            }
            row += 1;
        }
    }
    for q in 0..n {
        jac[(row + q, q)] = ONE;
    }
    jac
}

fn hess_update(p: &PartialHessenberg, dz: &[C64]) -> PartialHessenberg {
    let (n, j) = p.q.shape();
    let offs = hess_offsets(j);
    let mut out = p.clone();
    for l in 0..j {
        for k in 0..n {
            out.q[(k, l)] -= dz[l * n + k];
        }
        for i in 0..hess_rows(l, j) {
            out.h[(i, l)] -= dz[n * j + offs[l] + i];
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct RefinedPartial {
    pub partial: PartialHessenberg,
    pub iterations: usize,
    /// Set when the residual grew three times in a row and the input was
    /// returned unchanged.
    pub diverged: bool,
}

/// Gauss-Newton on `A Q = Q H`, `c_k^H q_i = delta_ik` (`k <= i`), `q_1 = v`
/// with `H` upper Hessenberg. `c` defaults to the input columns.
pub fn refine_partial_hessenberg(
    a: &Matrix,
    partial: &PartialHessenberg,
    c: Option<&Matrix>,
    max_iters: usize,
) -> Result<RefinedPartial> {
    let c = c.cloned().unwrap_or_else(|| partial.q.clone());
    if c.shape() != partial.q.shape() {
        return Err(JcfError::Dimension("constant vectors must match the partial basis".into()));
    }
    let scale = a.norm_fro().max(1.0);
    let mut cur = partial.clone();
    let mut res = norm2(&hessenberg_system_residual(a, &cur, &c));
    let mut best = (cur.clone(), res);
    let mut increases = 0;
    let mut iterations = 0;
    while iterations < max_iters && res > 4.0 * UNIT_ROUNDOFF * scale {
        let f = hessenberg_system_residual(a, &cur, &c);
        let jac = hessenberg_system_jacobian(a, &cur, &c);
        let Ok(dz) = HouseholderQr::factor(&jac).solve(&f) else { break };
        iterations += 1;
        let prev = res;
        cur = hess_update(&cur, &dz);
        res = norm2(&hessenberg_system_residual(a, &cur, &c));
        if res > prev {
            increases += 1;
            if increases >= 3 {
                return Ok(RefinedPartial { partial: partial.clone(), iterations, diverged: true });
            }
            continue;
        }
        increases = 0;
        if res < best.1 {
            best = (cur.clone(), res);
        }
        if res > STALL_FACTOR * prev {
            break;
        }
    }
    let mut cur = best.0;
    let n = a.rows();
    let j = cur.degree();
    cur.coupling = if j < n { C64::new(cur.residual(a), 0.0) } else { ZERO };
    Ok(RefinedPartial { partial: cur, iterations, diverged: false })
}

/// Krylov factor `[e_1, H e_1, ..., H^{j-1} e_1]`, upper triangular for Hessenberg `H`.
pub fn krylov_factor(h: &Matrix) -> Matrix {
    let j = h.rows();
    let mut r = Matrix::zeros(j, j);
    let mut col = vec![ZERO; j];
    col[0] = ONE;
    for k in 0..j {
        r.set_col(k, &col);
        col = h.mul_vec(&col);
    }
    for k in 0..j {
        for i in k + 1..j {
            r[(i, k)] = ZERO;
        }
    }
    r
}

/// Monic minimal polynomial of an irreducible Hessenberg block from the null
/// vector of `[e_1, H]` and the triangular Krylov factor `r_hat`.
pub fn minpoly_coefficients(h: &Matrix, r_hat: &Matrix, rng: &mut impl Rng) -> Result<Polynomial> {
    let j = h.rows();
    if !h.is_square() || r_hat.shape() != (j, j) || j == 0 {
        return Err(JcfError::Dimension("Hessenberg block and Krylov factor must be square and equal".into()));
    }
    // [e_1, H] padded with a zero row is upper triangular.
    let t = krylov_triangle(&Matrix::vstack(&[h, &Matrix::zeros(1, j)]), j);
    let nv = inverse_iteration_null_vector(&t, 30, rng)?;
    let z = nv.z;
    if z[j].norm() < UNIT_ROUNDOFF * norm2(&z) {
        return Err(JcfError::DegenerateLeading);
    }
    let mut coeffs = vec![z[0]];
    coeffs.extend(solve_upper(r_hat, &z[1..]));
    let lead = coeffs[j];
    if lead.norm() < UNIT_ROUNDOFF * norm2(&coeffs) {
        return Err(JcfError::DegenerateLeading);
    }
    Ok(Polynomial::new(coeffs.iter().map(|c| c / lead).collect()))
}

#[derive(Clone, Debug)]
pub struct MinimalPolynomialChain {
    pub polys: Vec<Polynomial>,
    pub hessenberg_blocks: Vec<Matrix>,
    /// Unitary `U` with `U^H A U` block upper triangular with the Hessenberg
    /// blocks on the diagonal.
    pub transform: Matrix,
    pub degrees: Vec<usize>,
    /// Frobenius norm of each coupling block set to zero during deflation.
    pub dropped: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy, Debug)]
pub struct ChainOptions {
    pub gamma: f64,
    pub refine_iters: usize,
}

impl Default for ChainOptions {
    fn default() -> Self {
        ChainOptions { gamma: DEFAULT_GAMMA, refine_iters: REFINE_ITERS }
    }
}

/// Scan for a fresh random vector, redrawn when the first degree is 1 with a
/// ratio within a factor ten of `gamma`.
fn draw_scan(a: &Matrix, gamma: f64, rng: &mut impl Rng) -> Result<KrylovScan> {
    let n = a.rows();
    let mut scan = KrylovScan::new(a, &random_unit_vector(n, rng))?;
    for _ in 0..REDRAWS {
        let ambiguous = scan.first_deficiency(gamma) == Some(1) && scan.ratio(1) * 10.0 >= gamma;
        if !ambiguous {
            break;
        }
        scan = KrylovScan::new(a, &random_unit_vector(n, rng))?;
    }
    Ok(scan)
}

/// Partial reduction picked for one chain level.
#[derive(Clone, Debug)]
pub struct Selection {
    pub partial: PartialHessenberg,
    /// `||A Q - Q H||_F` after refinement.
    pub residual: f64,
    pub diverged: bool,
}

/// Degree chosen from a scan together with the refined partial reduction.
///
/// A gap drop starts a run of candidates that extends while the following
/// ratios keep falling below `CONTINUED_DROP`. Each candidate is refined and
/// the smallest degree whose refined residual is within twice the best one
/// (or at rounding level) wins. For highly sensitive matrices the first drop
/// can come one step early or be shallower than `gamma` at the true degree.
///
/// With `current` set, only candidates of larger degree are refined and the
/// current pick takes part in the comparison. Returns `None` when nothing
/// beats it.
pub fn select_degree(
    a: &Matrix,
    scan: &KrylovScan,
    opts: &ChainOptions,
    current: Option<&Selection>,
) -> Result<Option<Selection>> {
    let n = a.rows();
    let at_least = current.map_or(0, |c| c.partial.degree());
    let Some(j0) = scan.first_deficiency(opts.gamma) else {
        let partial = scan.partial(n);
        let residual = partial.residual(a);
        return Ok((n > at_least).then_some(Selection { partial, residual, diverged: false }));
    };
    let mut candidates = vec![j0];
    while candidates.len() < MAX_CANDIDATES {
        let j = candidates[candidates.len() - 1] + 1;
        if j >= n || scan.ratio(j) >= CONTINUED_DROP {
            break;
        }
        candidates.push(j);
    }
    candidates.retain(|&j| j > at_least);
    if candidates.is_empty() {
        return Ok(None);
    }
    let mut refined = Vec::with_capacity(candidates.len());
    for &j in &candidates {
        let partial = scan.partial(j);
        if partial.coupling == ZERO {
            let residual = partial.residual(a);
            refined.push(Selection { partial, residual, diverged: false });
            continue;
        }
        let r = refine_partial_hessenberg(a, &partial, None, opts.refine_iters)?;
        let residual = r.partial.residual(a);
        refined.push(Selection { partial: r.partial, residual, diverged: r.diverged });
    }
    let best = refined.iter().chain(current).map(|r| r.residual).fold(f64::INFINITY, f64::min);
    let floor = UNIT_ROUNDOFF * a.norm_fro() * (n as f64).sqrt();
    let accept = (2.0 * best).max(floor);
    if current.is_some_and(|c| c.residual <= accept) {
        return Ok(None);
    }
    Ok(refined.into_iter().find(|r| r.residual <= accept))
}

pub fn minimal_polynomial_chain(a: &Matrix, opts: &ChainOptions, rng: &mut impl Rng) -> Result<MinimalPolynomialChain> {
    if !a.is_square() || a.rows() == 0 {
        return Err(JcfError::Dimension("matrix must be square and nonempty".into()));
    }
    if !a.is_finite() {
        return Err(JcfError::NonFinite);
    }
    let n = a.rows();
    let mut transform = Matrix::identity(n);
    let mut rest = a.clone();
    let mut offset = 0;
    let mut chain = MinimalPolynomialChain {
        polys: Vec::new(),
        hessenberg_blocks: Vec::new(),
        transform: Matrix::zeros(0, 0),
        degrees: Vec::new(),
        dropped: Vec::new(),
        warnings: Vec::new(),
    };
    while offset < n {
        let size = rest.rows();
        let mut picked: Option<Selection> = None;
        for _ in 0..REGULARITY_DRAWS {
            let scan = draw_scan(&rest, opts.gamma, rng)?;
            if let Some(sel) = select_degree(&rest, &scan, opts, picked.as_ref())? {
                picked = Some(sel);
            }
            if picked.as_ref().is_some_and(|p| p.partial.degree() == size) {
                break;
            }
        }
        let Selection { partial, diverged, .. } = picked.expect("at least one draw");
        if diverged {
            chain.warnings.push(format!("Hessenberg refinement of block {} diverged", chain.polys.len() + 1));
        }
        let j = partial.degree();
        let qr = householder_qr(&partial.q, false)?;
        let u = qr.q;
        let m = u.adjoint_mul(&rest.matmul(&u));
        let h = m.submatrix(0, j, 0, j);
        chain.dropped.push(m.submatrix(j, size, 0, j).norm_fro());
        // The refined Hessenberg factor is exactly Hessenberg; U^H A U agrees
        // with it up to the orthonormalization of the refined columns.
        let poly = minpoly_coefficients(&partial.h, &krylov_factor(&partial.h), rng)?;
        let mut full_u = Matrix::identity(n);
        full_u.set_block(offset, offset, &u);
        transform = transform.matmul(&full_u);
        chain.polys.push(poly);
        chain.hessenberg_blocks.push(h);
        chain.degrees.push(j);
        rest = m.submatrix(j, size, j, size);
        offset += j;
    }
    chain.transform = transform;
    if chain.degrees.windows(2).any(|w| w[0] < w[1]) {
        return Err(JcfError::StructureUndetermined(format!(
            "minimal polynomial degrees {:?} are not non-increasing",
            chain.degrees
        )));
    }
    Ok(chain)
}
