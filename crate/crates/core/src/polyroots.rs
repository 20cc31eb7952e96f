//! Multiple roots of inexact polynomials.
//!
//! The multiplicity structure comes from a square-free chain of approximate
//! GCDs `u_{k+1} = gcd(u_k, u_k')`. The roots are then refined with the
//! multiplicities held fixed, by Gauss-Newton on the map from roots to
//! coefficients.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{JcfError, Result};
use crate::matrix::{norm2, Matrix, C64, ONE, ZERO};
use crate::numeric::inverse_iteration::inverse_iteration_null_vector;
use crate::numeric::qr::HouseholderQr;
use crate::polynomial::{convolution_matrix, convolve, Polynomial};

/// Roots closer than this, relative to `1 + |z|`, are treated as one root.
pub const MERGE_TOLERANCE: f64 = 1e-4;

/// Roots of the successive square-free factors are matched within this
/// tolerance, relative to `1 + |z|`.
pub const MATCH_TOLERANCE: f64 = 1e-3;

const GCD_GN_ITERS: usize = 10;

pub const TAU_RETRIES: usize = 2;
pub const TAU_RETRY_FACTOR: f64 = 1e-2;

/// Each square-free level inherits the error of the previous divisor, so its
/// GCD tolerance is at least this multiple of the previous level's residual.
const LEVEL_GROWTH: f64 = 100.0;

#[derive(Clone, Debug)]
pub struct GcdResult {
    /// Monic common divisor.
    pub gcd: Polynomial,
    /// `(p / gcd, q / gcd)`.
    pub cofactors: (Polynomial, Polynomial),
    /// Largest relative residual `||input - gcd * cofactor|| / ||input||`.
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct MultiplicityFactorization {
    pub roots: Vec<C64>,
    pub multiplicities: Vec<usize>,
    /// `||p - prod (t - z_i)^{m_i}||_2 / ||p||_2`.
    pub backward_error: f64,
}

impl MultiplicityFactorization {
    fn new(p: &Polynomial, roots: Vec<C64>, multiplicities: Vec<usize>) -> Self {
        let backward_error = backward_error(p, &roots, &multiplicities);
        MultiplicityFactorization { roots, multiplicities, backward_error }
    }

    pub fn degree(&self) -> usize {
        self.multiplicities.iter().sum()
    }
}

pub fn backward_error(p: &Polynomial, roots: &[C64], multiplicities: &[usize]) -> f64 {
    let q = Polynomial::from_roots(roots, multiplicities);
    let lead = p.leading();
    let scaled = Polynomial::new(q.coeffs().iter().map(|c| c * lead).collect());
    p.distance(&scaled) / p.norm()
}

fn scaled(p: &Polynomial, s: C64) -> Polynomial {
    Polynomial::new(p.coeffs().iter().map(|c| c * s).collect())
}

/// Sylvester subresultant `[C_{m-k}(p) | -C_{n-k}(q)]`, whose null vectors
/// `(v, u)` satisfy `p v = q u` with `deg v = m - k`, `deg u = n - k`.
fn subresultant(p: &[C64], q: &[C64], k: usize) -> Matrix {
    let n = p.len() - 1;
    let m = q.len() - 1;
    let left = convolution_matrix(p, m - k);
    let right = convolution_matrix(q, n - k).scale(C64::new(-1.0, 0.0));
    Matrix::hstack(&[&left, &right])
}

struct GcdTriple {
    g: Vec<C64>,
    u: Vec<C64>,
    v: Vec<C64>,
}

fn gcd_residual(t: &GcdTriple, p: &[C64], q: &[C64]) -> f64 {
    let rp: Vec<C64> = convolve(&t.u, &t.g).iter().zip(p).map(|(a, b)| a - b).collect();
    let rq: Vec<C64> = convolve(&t.v, &t.g).iter().zip(q).map(|(a, b)| a - b).collect();
    (norm2(&rp) / norm2(p)).max(norm2(&rq) / norm2(q))
}

/// Gauss-Newton on `u g = p`, `v g = q`, `r^H g = 1`.
fn refine_gcd(mut t: GcdTriple, p: &[C64], q: &[C64]) -> GcdTriple {
    let k = t.g.len() - 1;
    let n = p.len() - 1;
    let m = q.len() - 1;
    let g_norm = norm2(&t.g);
    let r: Vec<C64> = t.g.iter().map(|x| x / (g_norm * g_norm)).collect();
    let unknowns = (k + 1) + (n - k + 1) + (m - k + 1);
    let mut best = gcd_residual(&t, p, q);
    for _ in 0..GCD_GN_ITERS {
        let mut jac = Matrix::zeros(n + m + 3, unknowns);
        jac.set_block(0, 0, &convolution_matrix(&t.u, k));
        jac.set_block(0, k + 1, &convolution_matrix(&t.g, n - k));
        jac.set_block(n + 1, 0, &convolution_matrix(&t.v, k));
        jac.set_block(n + 1, n + 2, &convolution_matrix(&t.g, m - k));
        for (j, x) in r.iter().enumerate() {
            jac[(n + m + 2, j)] = x.conj();
        }
        let mut f: Vec<C64> = convolve(&t.u, &t.g).iter().zip(p).map(|(a, b)| a - b).collect();
        f.extend(convolve(&t.v, &t.g).iter().zip(q).map(|(a, b)| a - b));
        f.push(r.iter().zip(&t.g).map(|(a, b)| a.conj() * b).sum::<C64>() - ONE);
        let Ok(dz) = HouseholderQr::factor(&jac).solve(&f) else { break };
        let next = GcdTriple {
            g: t.g.iter().zip(&dz[..k + 1]).map(|(a, b)| a - b).collect(),
            u: t.u.iter().zip(&dz[k + 1..n + 2]).map(|(a, b)| a - b).collect(),
            v: t.v.iter().zip(&dz[n + 2..]).map(|(a, b)| a - b).collect(),
        };
        let res = gcd_residual(&next, p, q);
        if !(res < best) {
            break;
        }
        best = res;
        t = next;
        if norm2(&dz) <= 1e-15 * norm2(&t.g) {
            break;
        }
    }
    t
}

/// Approximate GCD of `p` and `q`. Candidate degrees are scanned from the
/// top; degree `k` is a candidate when the scaled smallest singular value of
/// the `k`-th Sylvester subresultant is at most `sqrt(tau)`, and is accepted
/// once the refined factorization has relative residual at most `tau`.
pub fn approximate_gcd(p: &Polynomial, q: &Polynomial, tau: f64) -> Result<GcdResult> {
    if p.norm() == 0.0 || q.norm() == 0.0 {
        return Err(JcfError::DegenerateLeading);
    }
    let coprime = || GcdResult { gcd: Polynomial::one(), cofactors: (p.clone(), q.clone()), residual: 0.0 };
    let n = p.degree();
    let m = q.degree();
    if n == 0 || m == 0 {
        return Ok(coprime());
    }
    let (np, nq) = (p.norm(), q.norm());
    let pn: Vec<C64> = p.coeffs().iter().map(|c| c / np).collect();
    let qn: Vec<C64> = q.coeffs().iter().map(|c| c / nq).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x9cd);
    for k in (1..=n.min(m)).rev() {
        let s = subresultant(&pn, &qn, k);
        let qr = HouseholderQr::factor(&s);
        let smin = qr.smallest_singular_value();
        if smin > tau.sqrt() * s.norm_fro() {
            continue;
        }
        let nv = inverse_iteration_null_vector(&qr.r(), 20, &mut rng)?;
        let v = nv.z[..m - k + 1].to_vec();
        let u = nv.z[m - k + 1..].to_vec();
        let Ok(g) = HouseholderQr::factor(&convolution_matrix(&u, k)).solve(&pn) else { continue };
        let t = refine_gcd(GcdTriple { g, u, v }, &pn, &qn);
        let residual = gcd_residual(&t, &pn, &qn);
        if residual > tau {
            continue;
        }
        let g = Polynomial::new(t.g);
        if g.degree() != k {
            continue;
        }
        let lead = g.leading();
        return Ok(GcdResult {
            gcd: g.monic()?,
            cofactors: (scaled(&Polynomial::new(t.u), lead * np), scaled(&Polynomial::new(t.v), lead * nq)),
            residual,
        });
    }
    Ok(coprime())
}

/// Unique nearest matching of `from` into `to`; returns the index in `to`
/// for each entry of `from`, or `None` when some distance exceeds the
/// matching tolerance.
fn match_roots(from: &[C64], to: &[C64]) -> Option<Vec<usize>> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, a) in from.iter().enumerate() {
        for (j, b) in to.iter().enumerate() {
            pairs.push(((a - b).norm(), i, j));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut assigned = vec![None; from.len()];
    let mut taken = vec![false; to.len()];
    for (d, i, j) in pairs {
        if assigned[i].is_none() && !taken[j] {
            if d > MATCH_TOLERANCE * (1.0 + to[j].norm()) {
                return None;
            }
            assigned[i] = Some(j);
            taken[j] = true;
        }
    }
    assigned.into_iter().collect()
}

/// Merges roots closer than [`MERGE_TOLERANCE`], keeping the
/// multiplicity-weighted mean.
fn merge_close(roots: Vec<C64>, mults: Vec<usize>) -> (Vec<C64>, Vec<usize>) {
    let mut roots = roots;
    let mut mults = mults;
    loop {
        let mut hit = None;
        'outer: for i in 0..roots.len() {
            for j in i + 1..roots.len() {
                if (roots[i] - roots[j]).norm() <= MERGE_TOLERANCE * (1.0 + roots[i].norm()) {
                    hit = Some((i, j));
                    break 'outer;
                }
            }
        }
        let Some((i, j)) = hit else { return (roots, mults) };
        let (mi, mj) = (mults[i] as f64, mults[j] as f64);
        roots[i] = (roots[i] * mi + roots[j] * mj) / (mi + mj);
        mults[i] += mults[j];
        roots.remove(j);
        mults.remove(j);
    }
}

/// Multiplicity structure of `p` together with initial root estimates.
///
/// The first GCD uses `tau`; later levels use at least `LEVEL_GROWTH` times the
/// residual accepted one level up.
pub fn multiplicity_structure(p: &Polynomial, tau: f64) -> Result<MultiplicityFactorization> {
    square_free_chain(p, tau, tau)
}

/// Square-free chain with its own tolerance `first_tau` for the first GCD.
fn square_free_chain(p: &Polynomial, first_tau: f64, tau: f64) -> Result<MultiplicityFactorization> {
    if p.degree() == 0 {
        return Err(JcfError::StructureUndetermined("constant polynomial".into()));
    }
    let p = p.monic()?;
    let mut factors: Vec<Polynomial> = Vec::new();
    let mut u = p.clone();
    let mut level_tau = first_tau;
    while u.degree() > 0 {
        let g = approximate_gcd(&u, &u.derivative(), level_tau)?;
        level_tau = tau.max(level_tau).max(LEVEL_GROWTH * g.residual);
        if g.gcd.degree() >= u.degree() {
            return Err(JcfError::StructureUndetermined("square-free chain did not shrink".into()));
        }
        factors.push(g.cofactors.0.monic()?);
        u = g.gcd;
    }
    let total: usize = factors.iter().map(Polynomial::degree).sum();
    if total != p.degree() || factors.windows(2).any(|w| w[0].degree() < w[1].degree()) {
        return Err(JcfError::StructureUndetermined(format!(
            "square-free factor degrees {:?} are inconsistent with degree {}",
            factors.iter().map(Polynomial::degree).collect::<Vec<_>>(),
            p.degree()
        )));
    }
    let roots = factors[0].roots()?;
    let mut mults = vec![1usize; roots.len()];
    for f in &factors[1..] {
        let r = f.roots()?;
        let Some(idx) = match_roots(&r, &roots) else {
            return Err(JcfError::StructureUndetermined(
                "roots of a square-free factor do not match the previous one; lower tau or reseed".into(),
            ));
        };
        for j in idx {
            mults[j] += 1;
        }
    }
    let (roots, mults) = merge_close(roots, mults);
    Ok(MultiplicityFactorization::new(&p, roots, mults))
}

/// Gauss-Newton on `(z_1, ..., z_s) -> coeffs(prod (t - z_i)^{m_i}) - coeffs(p)`
/// with coefficient weights `1 / max(1, |p_j|)`. Never returns a factorization
/// with a larger backward error than the input.
pub fn refine_roots_fixed_multiplicities(
    p: &Polynomial,
    fact: &MultiplicityFactorization,
    max_iters: usize,
) -> Result<MultiplicityFactorization> {
    let p = p.monic()?;
    let n = p.degree();
    if fact.degree() != n {
        return Err(JcfError::StructureUndetermined(format!(
            "multiplicities sum to {} for a polynomial of degree {n}",
            fact.degree()
        )));
    }
    let mults = &fact.multiplicities;
    let weights: Vec<f64> = p.coeffs()[..n].iter().map(|c| 1.0 / c.norm().max(1.0)).collect();
    let mut z = fact.roots.clone();
    let mut best = MultiplicityFactorization::new(&p, z.clone(), mults.clone());
    if fact.backward_error < best.backward_error {
        best = fact.clone();
    }
    for _ in 0..max_iters {
        let q = Polynomial::from_roots(&z, mults);
        let f: Vec<C64> = (0..n).map(|j| (q.coeffs()[j] - p.coeffs()[j]) * weights[j]).collect();
        let mut jac = Matrix::zeros(n, z.len());
        for i in 0..z.len() {
            let mut reduced = mults.clone();
            reduced[i] -= 1;
            let d = Polynomial::from_roots(&z, &reduced);
            let scale = -(mults[i] as f64);
            for j in 0..n {
                let c = d.coeffs().get(j).copied().unwrap_or(ZERO);
                jac[(j, i)] = c * scale * weights[j];
            }
        }
        let dz = HouseholderQr::factor(&jac).solve(&f).map_err(|_| {
            JcfError::StructureUndetermined("multiplicity structure inconsistent: roots coalesce".into())
        })?;
        for (zi, di) in z.iter_mut().zip(&dz) {
            *zi -= di;
        }
        let cand = MultiplicityFactorization::new(&p, z.clone(), mults.clone());
        if cand.backward_error <= best.backward_error {
            best = cand;
        }
        if norm2(&dz) <= 4.0 * f64::EPSILON * norm2(&z).max(1.0) {
            break;
        }
    }
    Ok(best)
}

/// [`multiplicity_structure`] followed by [`refine_roots_fixed_multiplicities`].
/// An inconsistent square-free chain is retried with the first GCD tolerance
/// lowered by [`TAU_RETRY_FACTOR`], up to [`TAU_RETRIES`] times: a loose
/// tolerance there can let a simple root close to a multiple one join the
/// common divisor. Deeper levels keep `tau`.
pub fn multiple_roots(p: &Polynomial, tau: f64) -> Result<MultiplicityFactorization> {
    let mut first = tau;
    let mut result = square_free_chain(p, first, tau);
    for _ in 0..TAU_RETRIES {
        if !matches!(result, Err(JcfError::StructureUndetermined(_))) {
            break;
        }
        first *= TAU_RETRY_FACTOR;
        result = square_free_chain(p, first, tau);
    }
    refine_roots_fixed_multiplicities(p, &result?, 20)
}
