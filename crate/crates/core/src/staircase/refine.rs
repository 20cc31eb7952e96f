use crate::error::{JcfError, Result};
use crate::matrix::{norm2, Matrix, C64, UNIT_ROUNDOFF, ZERO};
use crate::numeric::qr::{householder_qr, HouseholderQr};
use crate::staircase::certificates::staircase_condition_number;
use crate::staircase::system::{pack, staircase_jacobian, staircase_residual, unpack};
use crate::staircase::triplet::{project_staircase, AuxVectors, Eigentriplet};

/// Multiple of `u ||A||_F sqrt(m)` treated as a converged residual.
const RESIDUAL_FLOOR: f64 = 10.0;

#[derive(Clone, Debug)]
pub struct RefineOptions {
    /// Gauss-Newton stops once the step norm is below `tol * max(1, ||x||_2)`,
    /// `x` being the packed unknowns.
    pub tol: f64,
    pub max_iters: usize,
    /// Bound on `||R - I||_F` after orthonormalizing `Y` that avoids a second pass.
    pub orthogonality_tol: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions { tol: 1e-8, max_iters: 30, orthogonality_tol: 1e-8 }
    }
}

#[derive(Clone, Debug)]
pub struct RefineDiagnostics {
    pub iterations: usize,
    /// Gauss-Newton step norms, one list per pass.
    pub step_norms: Vec<Vec<f64>>,
    /// `||A U - U (lambda I + S)||_F / ||A||_F` for the returned triplet.
    pub residual: f64,
    pub staircase_cond: f64,
    /// Filled in by callers that can afford a Schur form of `A`.
    pub cluster_cond: Option<f64>,
}

impl RefineDiagnostics {
    pub fn passes(&self) -> usize {
        self.step_norms.len()
    }
}

#[derive(Clone, Debug)]
pub struct RefinedTriplet {
    pub triplet: Eigentriplet,
    /// Auxiliary vectors of the last Gauss-Newton pass.
    pub aux: AuxVectors,
    pub diagnostics: RefineDiagnostics,
}

/// Plain Gauss-Newton on the staircase system. Returns the iterate and the
/// step norms taken. Besides the step test, the iteration stops once the
/// residual is at roundoff level: with an ill-conditioned Jacobian the steps
/// can keep wandering at `kappa * u` long after the residual has bottomed out.
///
/// Three consecutive step increases abort the run, counted only once some
/// step has dropped below the first one. From a rough start the early steps
/// can grow for a while before the quadratic phase begins.
pub fn gauss_newton(
    a: &Matrix,
    start: &Eigentriplet,
    aux: &AuxVectors,
    opts: &RefineOptions,
) -> Result<(Eigentriplet, Vec<f64>)> {
    let n = a.rows();
    let weyr = start.weyr.clone();
    let mut x = pack(start);
    let mut t = start.clone();
    let mut steps = Vec::new();
    let mut increases = 0;
    let floor = RESIDUAL_FLOOR * UNIT_ROUNDOFF * a.norm_fro() * (start.multiplicity() as f64).sqrt();
    for _ in 0..opts.max_iters {
        let f = staircase_residual(a, &t, aux)?;
        if !steps.is_empty() && norm2(&f) <= floor * norm2(&x).max(1.0) {
            return Ok((t, steps));
        }
        let jac = staircase_jacobian(a, &t, aux)?;
        let dz = match HouseholderQr::factor(&jac).solve(&f) {
            Err(JcfError::RankDeficient { .. }) => damped_step(&jac, &f)?,
            r => r?,
        };
        for (xi, di) in x.iter_mut().zip(&dz) {
            *xi -= di;
        }
        t = unpack(&x, n, &weyr);
        let step = norm2(&dz);
        if !step.is_finite() {
            return Err(JcfError::NonFinite);
        }
        let settled = steps.iter().skip(1).any(|&s| s < steps[0]);
        if let Some(&prev) = steps.last() {
            if settled && step > prev {
                increases += 1;
                if increases >= 3 {
                    return Err(JcfError::Diverged { what: "eigentriplet refinement" });
                }
            } else {
                increases = 0;
            }
        }
        steps.push(step);
        if step < opts.tol * norm2(&x).max(1.0) {
            return Ok((t, steps));
        }
    }
    Err(JcfError::NoConvergence { what: "eigentriplet refinement", iterations: opts.max_iters })
}

/// Least-squares step of `[J; mu I] dz = [f; 0]` with `mu = sqrt(u) ||J||_F`.
/// Used when `J` is numerically singular, which happens when another
/// eigenvalue sits inside the pseudospectral cloud of the cluster.
fn damped_step(jac: &Matrix, f: &[C64]) -> Result<Vec<C64>> {
    let cols = jac.cols();
    let mu = UNIT_ROUNDOFF.sqrt() * jac.norm_fro();
    let aug = Matrix::vstack(&[jac, &Matrix::identity(cols).scale(C64::new(mu, 0.0))]);
    let mut rhs = f.to_vec();
    rhs.resize(f.len() + cols, ZERO);
    HouseholderQr::factor(&aug).solve(&rhs)
}

/// Orthonormalizes `Y = U R` and recomputes `S` as the staircase part of
/// `U^H A U - lambda I`. Returns the new triplet and `||R - I||_F`.
pub fn orthonormalize(a: &Matrix, t: &Eigentriplet) -> Result<(Eigentriplet, f64)> {
    let m = t.multiplicity();
    let qr = householder_qr(&t.y, true)?;
    let defect = qr.r.sub(&Matrix::identity(m)).norm_fro();
    let u = qr.q;
    let full = u.adjoint_mul(&a.matmul(&u)).shifted(t.lambda);
    let s = project_staircase(&full, &t.weyr);
    Ok((Eigentriplet { lambda: t.lambda, y: u, s, weyr: t.weyr.clone() }, defect))
}

/// Refines an approximate staircase eigentriplet. A second Gauss-Newton pass
/// with `b = c = U` runs when the first result is far from orthonormal.
pub fn eigentriplet_refine(
    a: &Matrix,
    start: &Eigentriplet,
    aux: &AuxVectors,
    opts: &RefineOptions,
) -> Result<RefinedTriplet> {
    start.validate(a.rows())?;
    let (t1, steps) = gauss_newton(a, start, aux, opts)?;
    let (mut t, defect) = orthonormalize(a, &t1)?;
    let mut aux_used = aux.clone();
    let mut step_norms = vec![steps];
    if defect > opts.orthogonality_tol {
        let aux2 = AuxVectors { b: t.y.clone(), c: t.y.clone() };
        let (t2, steps2) = gauss_newton(a, &t, &aux2, opts)?;
        step_norms.push(steps2);
        t = orthonormalize(a, &t2)?.0;
        aux_used = aux2;
    }
    let residual = t.backward_residual(a);
    let staircase_cond = staircase_condition_number(a, &t, &aux_used)?;
    let iterations = step_norms.iter().map(Vec::len).sum();
    Ok(RefinedTriplet {
        triplet: t,
        aux: aux_used,
        diagnostics: RefineDiagnostics { iterations, step_norms, residual, staircase_cond, cluster_cond: None },
    })
}
