//! Stage one: Schur deflation of well-conditioned simple eigenvalues and
//! Jordan structure identification from minimal polynomials.

use rand::Rng;

use crate::error::{JcfError, Result};
use crate::matrix::{norm2, Matrix, C64, ONE, UNIT_ROUNDOFF, ZERO};
use crate::minpoly::{minimal_polynomial_chain, ChainOptions, MinimalPolynomialChain};
use crate::numeric::schur::{reorder_schur, schur_form, SchurForm};
use crate::pipeline::Config;
use crate::polyroots::{multiple_roots, MultiplicityFactorization, MATCH_TOLERANCE};
use crate::structure::JordanStructure;

/// Schur form reordered so that the deflated simple eigenvalues sit in the
/// trailing `simple.len()` positions.
#[derive(Clone, Debug)]
pub struct Deflation {
    pub schur: SchurForm,
    pub simple: Vec<C64>,
    /// Condition numbers of the deflated eigenvalues.
    pub conditions: Vec<f64>,
}

impl Deflation {
    /// Order of the leading block fed to structure identification.
    pub fn leading(&self) -> usize {
        self.schur.t.rows() - self.simple.len()
    }
}

#[derive(Clone, Debug)]
pub struct Identification {
    /// Multiple eigenvalues of the leading block, and any simple eigenvalue
    /// of it that was too ill conditioned to deflate.
    pub structure: JordanStructure,
    /// Initial eigenvalue estimates for refinement, one per structure entry.
    pub initial: Vec<C64>,
    pub deflation: Deflation,
    pub chain: Option<MinimalPolynomialChain>,
    pub factorizations: Vec<MultiplicityFactorization>,
    pub warnings: Vec<String>,
}

impl Identification {
    /// Structure of the whole matrix, deflated eigenvalues included as `{1}`.
    pub fn full_structure(&self) -> JordanStructure {
        let mut s = self.structure.clone();
        for &l in &self.deflation.simple {
            s.entries.push(crate::structure::JordanEntry { eigenvalue: l, segre: vec![1] });
        }
        s
    }
}

/// Unit right eigenvector of upper triangular `t` for the diagonal entry `k`.
pub fn triangular_right_eigenvector(t: &Matrix, k: usize) -> Vec<C64> {
    let n = t.rows();
    let lambda = t[(k, k)];
    let mut x = vec![ZERO; n];
    x[k] = ONE;
    for i in (0..k).rev() {
        let s: C64 = (i + 1..=k).map(|j| t[(i, j)] * x[j]).sum();
        let d = t[(i, i)] - lambda;
        let d = if d == ZERO { C64::new(UNIT_ROUNDOFF * (1.0 + lambda.norm()), 0.0) } else { d };
        x[i] = -s / d;
    }
    let nx = norm2(&x);
    x.iter().map(|v| v / nx).collect()
}

/// `1 / |y^H x|` for unit left and right eigenvectors of each diagonal entry
/// of the triangular factor.
pub fn simple_eigenvalue_conditions(t: &Matrix) -> Vec<f64> {
    let n = t.rows();
    (0..n)
        .map(|k| {
            let lambda = t[(k, k)];
            // x = [x1; 1; 0], y = [0; 1; y2] with y^H x = 1.
            let mut x = vec![ZERO; k + 1];
            x[k] = ONE;
            for i in (0..k).rev() {
                let s: C64 = (i + 1..=k).map(|j| t[(i, j)] * x[j]).sum();
                let d = t[(i, i)] - lambda;
                if d == ZERO {
                    return f64::INFINITY;
                }
                x[i] = -s / d;
            }
            let mut y = vec![ZERO; n - k];
            y[0] = ONE;
            for i in k + 1..n {
                let s: C64 = (k..i).map(|j| t[(j, i)].conj() * y[j - k]).sum();
                let d = (t[(i, i)] - lambda).conj();
                if d == ZERO {
                    return f64::INFINITY;
                }
                y[i - k] = -s / d;
            }
            let c = norm2(&x) * norm2(&y);
            if c.is_finite() {
                c
            } else {
                f64::INFINITY
            }
        })
        .collect()
}

/// Schur form with eigenvalues of condition below `delta` moved to the
/// bottom. An eigenvalue within the root matching tolerance of another one is
/// never deflated: a derogatory eigenvalue can show a small `1 / |y^H x|` for
/// its computed copies.
pub fn deflate_simple(a: &Matrix, delta: f64) -> Result<Deflation> {
    let schur = schur_form(a)?;
    let cond = simple_eigenvalue_conditions(&schur.t);
    let ev = schur.eigenvalues();
    let isolated = |i: usize| {
        ev.iter().enumerate().all(|(j, z)| j == i || (z - ev[i]).norm() > MATCH_TOLERANCE * (1.0 + ev[i].norm()))
    };
    let select: Vec<bool> = (0..ev.len()).map(|i| cond[i] < delta && isolated(i)).collect();
    let reordered = reorder_schur(&schur, &select)?;
    let n = a.rows();
    let trailing = reordered.selected.iter().rev().take_while(|&&s| s).count();
    let t = &reordered.schur.t;
    let simple: Vec<C64> = (n - trailing..n).map(|i| t[(i, i)]).collect();
    let after = simple_eigenvalue_conditions(t);
    Ok(Deflation { schur: reordered.schur, simple, conditions: after[n - trailing..].to_vec() })
}

/// Segre characteristics from the factored chain: the exponent of a root in
/// the `i`-th polynomial is the `i`-th Segre entry of that eigenvalue.
pub fn assemble_structure(facts: &[MultiplicityFactorization]) -> Result<(JordanStructure, Vec<C64>)> {
    let Some(first) = facts.first() else {
        return Ok((JordanStructure::default(), Vec::new()));
    };
    let k = first.roots.len();
    let mut segres: Vec<Vec<usize>> = first.multiplicities.iter().map(|&m| vec![m]).collect();
    let mut sums: Vec<C64> = first.roots.iter().zip(&first.multiplicities).map(|(z, &m)| z * m as f64).collect();
    let mut weights: Vec<usize> = first.multiplicities.clone();
    let mut current: Vec<C64> = first.roots.clone();
    for (level, f) in facts.iter().enumerate().skip(1) {
        let mut used = vec![false; k];
        for (z, &m) in f.roots.iter().zip(&f.multiplicities) {
            let best = (0..k)
                .filter(|&j| !used[j] && segres[j].len() == level)
                .min_by(|&i, &j| (current[i] - z).norm().total_cmp(&(current[j] - z).norm()));
            let Some(j) = best.filter(|&j| (current[j] - z).norm() <= MATCH_TOLERANCE * (1.0 + z.norm())) else {
                return Err(JcfError::StructureUndetermined(format!(
                    "root {z} of minimal polynomial {} matches no root of the previous one; rerun with a new seed",
                    level + 1
                )));
            };
            let prev = *segres[j].last().expect("nonempty");
            if m > prev {
                return Err(JcfError::StructureUndetermined(format!(
                    "exponent of root {z} grows from {prev} to {m} along the chain; rerun with a new seed"
                )));
            }
            used[j] = true;
            segres[j].push(m);
            sums[j] += z * m as f64;
            weights[j] += m;
        }
        current = (0..k).map(|j| if used[j] { sums[j] / weights[j] as f64 } else { current[j] }).collect();
    }
    let initial: Vec<C64> = (0..k).map(|j| sums[j] / weights[j] as f64).collect();
    let entries = initial.iter().copied().zip(segres).collect();
    Ok((JordanStructure::new(entries)?, initial))
}

pub fn identify_structure(a: &Matrix, cfg: &Config, rng: &mut impl Rng) -> Result<Identification> {
    let deflation = deflate_simple(a, cfg.delta)?;
    let k = deflation.leading();
    let mut warnings = Vec::new();
    if k == 0 {
        return Ok(Identification {
            structure: JordanStructure::default(),
            initial: Vec::new(),
            deflation,
            chain: None,
            factorizations: Vec::new(),
            warnings,
        });
    }
    let b = deflation.schur.t.submatrix(0, k, 0, k);
    let chain = minimal_polynomial_chain(&b, &ChainOptions { gamma: cfg.gamma, ..ChainOptions::default() }, rng)?;
    warnings.extend(chain.warnings.iter().cloned());
    let mut facts = Vec::with_capacity(chain.polys.len());
    for (i, p) in chain.polys.iter().enumerate() {
        let f = multiple_roots(p, cfg.tau).map_err(|e| {
            JcfError::StructureUndetermined(format!("minimal polynomial {} of degree {}: {e}", i + 1, p.degree()))
        })?;
        facts.push(f);
    }
    let (mut structure, initial) = assemble_structure(&facts)?;
    if structure.total() != k {
        return Err(JcfError::StructureUndetermined(format!(
            "identified multiplicities sum to {} for a block of order {k}",
            structure.total()
        )));
    }
    let deflation = absorb_simple(deflation, &mut structure, &initial)?;
    Ok(Identification { structure, initial, deflation, chain: Some(chain), factorizations: facts, warnings })
}

/// Moves back every deflated eigenvalue that matches a multiple eigenvalue of
/// the leading block. Each one adds a trailing `1` to that eigenvalue's Segre
/// characteristic.
fn absorb_simple(deflation: Deflation, structure: &mut JordanStructure, initial: &[C64]) -> Result<Deflation> {
    let n = deflation.schur.t.rows();
    let k = deflation.leading();
    let mut keep = vec![false; n];
    let mut absorbed = false;
    for (i, &l) in deflation.simple.iter().enumerate() {
        let hit = initial
            .iter()
            .enumerate()
            .filter(|(_, z)| (*z - l).norm() <= MATCH_TOLERANCE * (1.0 + z.norm()))
            .min_by(|a, b| (a.1 - l).norm().total_cmp(&(b.1 - l).norm()));
        match hit {
            Some((j, _)) => {
                structure.entries[j].segre.push(1);
                absorbed = true;
            }
            None => keep[k + i] = true,
        }
    }
    if !absorbed {
        return Ok(deflation);
    }
    let reordered = reorder_schur(&deflation.schur, &keep)?;
    let trailing = reordered.selected.iter().rev().take_while(|&&s| s).count();
    let t = &reordered.schur.t;
    let simple: Vec<C64> = (n - trailing..n).map(|i| t[(i, i)]).collect();
    let after = simple_eigenvalue_conditions(t);
    Ok(Deflation { schur: reordered.schur, simple, conditions: after[n - trailing..].to_vec() })
}
