//! Complex Schur form by shifted QR iteration, and reordering by adjacent swaps.

use crate::error::{JcfError, Result};
use crate::matrix::{Matrix, C64, UNIT_ROUNDOFF, ZERO};
use crate::numeric::givens::Givens;
use crate::numeric::hessenberg::hessenberg_reduce;

/// `A = Q T Q^H` with `T` upper triangular.
#[derive(Clone, Debug)]
pub struct SchurForm {
    pub t: Matrix,
    pub q: Matrix,
}

impl SchurForm {
    pub fn eigenvalues(&self) -> Vec<C64> {
        self.t.diagonal()
    }
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let delta = (a - d) * 0.5;
    let bc = b * c;
    let disc = (delta * delta + bc).sqrt();
    let den1 = delta + disc;
    let den2 = delta - disc;
    let den = if den1.norm() >= den2.norm() { den1 } else { den2 };
    if den == ZERO {
        d
    } else {
        d - bc / den
    }
}

pub fn schur_form(a: &Matrix) -> Result<SchurForm> {
    let hf = hessenberg_reduce(a, None)?;
    let n = a.rows();
    let mut t = hf.h;
    let mut q = hf.q;
    let fro = t.norm_fro();
    let cap = 30 * n.max(1);
    let mut total = 0usize;
    let mut its = 0usize;
    let mut hi = n.saturating_sub(1);
    while hi > 0 {
        let mut lo = 0;
        for k in (1..=hi).rev() {
            let mut tst = t[(k - 1, k - 1)].norm() + t[(k, k)].norm();
            if tst == 0.0 {
                tst = fro;
            }
            if t[(k, k - 1)].norm() <= UNIT_ROUNDOFF * tst {
                t[(k, k - 1)] = ZERO;
                lo = k;
                break;
            }
        }
        if lo == hi {
            hi -= 1;
            its = 0;
            continue;
        }
        total += 1;
        its += 1;
        if total > cap {
            clean_lower(&mut t);
            return Err(JcfError::SchurNoConvergence { iterations: total - 1, partial: Box::new(SchurForm { t, q }) });
        }
        let mu = if its % 10 == 0 {
            t[(hi, hi)] + 0.75 * t[(hi, hi - 1)].norm()
        } else {
            wilkinson_shift(t[(hi - 1, hi - 1)], t[(hi - 1, hi)], t[(hi, hi - 1)], t[(hi, hi)])
        };
        let mut x = t[(lo, lo)] - mu;
        let mut y = t[(lo + 1, lo)];
        for k in lo..hi {
            let (g, _) = Givens::zeroing(x, y);
            let c0 = if k > lo { k - 1 } else { lo };
            g.rotate_rows(&mut t, k, k + 1, c0);
            if k > lo {
                t[(k + 1, k - 1)] = ZERO;
            }
            g.rotate_cols_adjoint(&mut t, k, k + 1, (k + 3).min(hi + 1));
            g.rotate_cols_adjoint(&mut q, k, k + 1, n);
            if k + 1 < hi {
                x = t[(k + 1, k)];
                y = t[(k + 2, k)];
            }
        }
    }
    clean_lower(&mut t);
    Ok(SchurForm { t, q })
}

fn clean_lower(t: &mut Matrix) {
    let n = t.rows();
    for i in 0..n {
        for j in 0..i {
            t[(i, j)] = ZERO;
        }
    }
}

/// Result of moving selected eigenvalues to the trailing positions.
#[derive(Clone, Debug)]
pub struct Reordered {
    pub schur: SchurForm,
    /// `true` at each trailing position holding a selected eigenvalue.
    pub selected: Vec<bool>,
    pub warnings: Vec<String>,
}

/// Swaps the adjacent diagonal entries `k` and `k+1`. Returns false when the
/// two entries are numerically equal and the swap is skipped.
fn swap_adjacent(t: &mut Matrix, q: &mut Matrix, k: usize) -> bool {
    let n = t.rows();
    let t11 = t[(k, k)];
    let t22 = t[(k + 1, k + 1)];
    let t12 = t[(k, k + 1)];
    let diff = t22 - t11;
    if diff.norm() <= 10.0 * UNIT_ROUNDOFF * (t11.norm() + t22.norm() + t12.norm()) {
        return diff == ZERO && t12 == ZERO;
    }
    let (g, _) = Givens::zeroing(t12, diff);
    g.rotate_rows(t, k, k + 1, k);
    g.rotate_cols_adjoint(t, k, k + 1, k + 2);
    g.rotate_cols_adjoint(q, k, k + 1, n);
    t[(k, k)] = t22;
    t[(k + 1, k + 1)] = t11;
    t[(k + 1, k)] = ZERO;
    true
}

/// Moves eigenvalues with `select[i]` to the bottom of the Schur form while
/// keeping their relative order.
pub fn reorder_schur(schur: &SchurForm, select: &[bool]) -> Result<Reordered> {
    let n = schur.t.rows();
    if select.len() != n {
        return Err(JcfError::Dimension(format!("selection has length {}, expected {n}", select.len())));
    }
    let mut t = schur.t.clone();
    let mut q = schur.q.clone();
    let mut sel = select.to_vec();
    let mut warnings = Vec::new();
    let mut target = n;
    for i in (0..n).rev() {
        if !sel[i] {
            continue;
        }
        target -= 1;
        let mut pos = i;
        while pos < target {
            if !swap_adjacent(&mut t, &mut q, pos) {
                warnings.push(format!(
                    "skipped swap of nearly equal eigenvalues at positions {} and {}",
                    pos,
                    pos + 1
                ));
                break;
            }
            sel.swap(pos, pos + 1);
            pos += 1;
        }
        if pos < target {
            // Could not reach the target slot; later selections stop above this one.
            target = pos;
        }
    }
    Ok(Reordered { schur: SchurForm { t, q }, selected: sel, warnings })
}
