//! The subcommands, free of argument parsing and file handling.

use std::time::Instant;

use numjcf_core::matrix::{UNIT_ROUNDOFF, ZERO};
use numjcf_core::pipeline::{numerical_jcf, Config};
use numjcf_core::staircase::triplet::project_staircase;
use numjcf_core::staircase::{cluster_condition_number, eigentriplet_refine, initial_eigentriplet};
use numjcf_core::structure::{block_of_index, bundle_codimension, conjugate_partition, prefix_sums};
use numjcf_core::testmat::{
    classic_example, frank, jordan_matrix, jordan_seeded, parametric_example, sensitivity_example,
    three_eigenvalue_example, SeededMatrix,
};
use numjcf_core::{JcfError, Matrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::report::{
    Complex, ConfigRecord, EigenRecord, FactorKind, Factors, GlobalRecord, MatrixBlock, Real, Report, StructureRecord,
    Timing, SCHEMA_VERSION,
};

/// Largest accepted ratio between a claimed and a recomputed quantity.
pub const VERIFY_FACTOR: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputKind {
    Staircase,
    Jordan,
    Structure,
}

fn config_record(cfg: &Config) -> ConfigRecord {
    ConfigRecord {
        delta: Real(cfg.delta),
        gamma: Real(cfg.gamma),
        tau: Real(cfg.tau),
        rho: Real(cfg.rho),
        seed: cfg.seed,
        max_iters: cfg.max_iters,
    }
}

/// Exit status of a finished run: 0 when clean, 2 when warnings were raised
/// or some eigenvalue failed to refine.
pub fn exit_code(report: &Report) -> u8 {
    if report.complete && report.global.warnings.is_empty() {
        0
    } else {
        2
    }
}

pub fn jcf_report(a: &Matrix, cfg: &Config, output: OutputKind, factors: bool) -> Result<Report, JcfError> {
    let start = Instant::now();
    let r = numerical_jcf(a, cfg)?;
    let eigenvalues = r
        .triplets
        .iter()
        .map(|t| EigenRecord {
            value: Complex(t.triplet.lambda),
            segre: t.segre.clone(),
            weyr: t.triplet.weyr.clone(),
            residual: Real(t.diagnostics.residual),
            staircase_cond: Real(t.diagnostics.staircase_cond),
            cluster_cond: t.diagnostics.cluster_cond.map(Real),
            iterations: t.diagnostics.iterations,
        })
        .collect();
    let structure = r
        .structure
        .entries
        .iter()
        .map(|e| StructureRecord { value: Complex(e.eigenvalue), segre: e.segre.clone() })
        .collect();
    let mut warnings = r.warnings.clone();
    let factor_block = match (factors, output) {
        (false, _) | (true, OutputKind::Structure) => None,
        (true, OutputKind::Staircase) => r.staircase.as_ref().map(|s| Factors {
            kind: FactorKind::Staircase,
            blocks: s.blocks.clone(),
            left: MatrixBlock::new(&s.u),
            right: MatrixBlock::new(&s.t),
        }),
        (true, OutputKind::Jordan) => r.jordan.as_ref().map(|j| Factors {
            kind: FactorKind::Jordan,
            blocks: j.blocks.iter().map(|b| b.1).collect(),
            left: MatrixBlock::new(&j.x),
            right: MatrixBlock::new(&j.j),
        }),
    };
    if factors && output != OutputKind::Structure && factor_block.is_none() {
        warnings.push("factors unavailable for an incomplete decomposition".into());
    }
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        command: "jcf".into(),
        dimension: a.rows(),
        config: config_record(cfg),
        seed: r.seed,
        attempts: r.attempts,
        complete: r.complete,
        eigenvalues,
        simple_eigenvalues: r.simple_eigenvalues.iter().copied().map(Complex).collect(),
        structure,
        global: GlobalRecord {
            residual: Real(r.global_residual),
            jordan_residual: r.jordan.as_ref().map(|j| Real(j.residual)),
            codimension: r.bundle_codim,
            warnings,
        },
        factors: factor_block,
        timing: Timing { seconds: start.elapsed().as_secs_f64() },
    })
}

/// Refines a single eigentriplet of the given structure from `lambda0`.
pub fn refine_report(a: &Matrix, lambda0: C64, segre: &[usize], cfg: &Config, factors: bool) -> Result<Report, JcfError> {
    let start = Instant::now();
    cfg.validate()?;
    let n = a.rows();
    let m: usize = segre.iter().sum();
    if m > n {
        return Err(JcfError::InvalidPartition(format!("Segre characteristic sums to {m} in dimension {n}")));
    }
    let weyr = conjugate_partition(segre)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (t0, aux) = initial_eigentriplet(a, lambda0, &weyr, None, &mut rng)?;
    let refined = eigentriplet_refine(a, &t0, &aux, &cfg.refine_options())?;
    let t = &refined.triplet;
    let d = &refined.diagnostics;
    let mut warnings = Vec::new();
    let cluster_cond = match cluster_condition_number(a, t) {
        Ok(c) => Some(Real(c)),
        Err(e) => {
            warnings.push(format!("cluster condition: {e}"));
            None
        }
    };
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        command: "refine".into(),
        dimension: n,
        config: config_record(cfg),
        seed: cfg.seed,
        attempts: 1,
        complete: true,
        eigenvalues: vec![EigenRecord {
            value: Complex(t.lambda),
            segre: segre.to_vec(),
            weyr,
            residual: Real(d.residual),
            staircase_cond: Real(d.staircase_cond),
            cluster_cond,
            iterations: d.iterations,
        }],
        simple_eigenvalues: Vec::new(),
        structure: vec![StructureRecord { value: Complex(t.lambda), segre: segre.to_vec() }],
        global: GlobalRecord {
            residual: Real(d.residual),
            jordan_residual: None,
            codimension: bundle_codimension(&[segre.to_vec()])?,
            warnings,
        },
        factors: factors.then(|| Factors {
            kind: FactorKind::Triplet,
            blocks: vec![m],
            left: MatrixBlock::new(&t.y),
            right: MatrixBlock::new(&t.block()),
        }),
        timing: Timing { seconds: start.elapsed().as_secs_f64() },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PaperExample {
    /// 20x20 matrix with eigenvalues 2 {9, 1} and 3 {8, 2}.
    Ex1,
    /// 6x6 matrix with eigenvalues `r` {1}, `s` {2}, `t` {3}.
    A4,
    /// 10x10 matrix with eigenvalues 1 {1}, 2 {3, 2}, 3 {2, 2}.
    A5,
    /// 10x10 family in `t` with eigenvalues 2 {3, 1}, 3 {4, 2}.
    At,
}

pub fn paper_example(kind: PaperExample, r: f64, s: f64, t: f64) -> Matrix {
    match kind {
        PaperExample::Ex1 => sensitivity_example(),
        PaperExample::A4 => three_eigenvalue_example(r, s, t),
        PaperExample::A5 => classic_example(),
        PaperExample::At => parametric_example(t),
    }
}

pub fn frank_matrix(n: usize) -> Matrix {
    frank(n)
}

/// Ground truth written next to a `jordan-seeded` matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureSidecar {
    pub schema_version: u32,
    pub eigenvalues: Vec<StructureRecord>,
    pub simple: usize,
    pub x_condition: Real,
}

impl StructureSidecar {
    pub fn new(m: &SeededMatrix) -> Self {
        StructureSidecar {
            schema_version: SCHEMA_VERSION,
            eigenvalues: m.structure.iter().map(|(l, s)| StructureRecord { value: Complex(*l), segre: s.clone() }).collect(),
            simple: m.simple,
            x_condition: Real(m.x_condition),
        }
    }
}

/// Parses `value:segre;value:segre`, e.g. `1:5,4,3,1;2:4,2,2`.
pub fn parse_structure(s: &str) -> Result<Vec<(f64, Vec<usize>)>, String> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|part| {
            let (value, segre) = part.split_once(':').ok_or_else(|| format!("`{part}` is not `value:segre`"))?;
            let value: f64 = value.trim().parse().map_err(|_| format!("invalid eigenvalue `{value}`"))?;
            Ok((value, parse_segre(segre)?))
        })
        .collect()
}

/// Parses a comma-separated Segre characteristic.
pub fn parse_segre(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|_| format!("invalid Segre part `{x}`")))
        .collect()
}

/// `jordan-seeded` test matrix. With `identity` the similarity is skipped and
/// the result is the Jordan part followed by the random simple block.
pub fn seeded_matrix(
    structure: &[(f64, Vec<usize>)],
    n: usize,
    cond: f64,
    seed: u64,
    identity: bool,
) -> Result<SeededMatrix, JcfError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if !identity {
        return jordan_seeded(structure, n, cond, &mut rng);
    }
    let seeded: Vec<(C64, Vec<usize>)> = structure.iter().map(|(l, s)| (C64::new(*l, 0.0), s.clone())).collect();
    let j = jordan_matrix(&seeded)?;
    let k = j.rows();
    if k > n {
        return Err(JcfError::Dimension(format!("Jordan part of size {k} exceeds {n}")));
    }
    let mut a = Matrix::zeros(n, n);
    a.set_block(0, 0, &j);
    for i in k..n {
        for l in k..n {
            a[(i, l)] = C64::new(rng.random_range(-1.0..1.0), 0.0);
        }
    }
    Ok(SeededMatrix { a, structure: seeded, simple: n - k, x_condition: 1.0 })
}

fn relative_residual(a: &Matrix, left: &Matrix, right: &Matrix) -> f64 {
    let r = a.matmul(left).sub(&left.matmul(right)).norm_fro();
    let na = a.norm_fro();
    if na == 0.0 {
        r
    } else {
        r / na
    }
}

fn agrees(claimed: f64, recomputed: f64) -> bool {
    let c = claimed.max(UNIT_ROUNDOFF);
    let r = recomputed.max(UNIT_ROUNDOFF);
    c <= VERIFY_FACTOR * r && r <= VERIFY_FACTOR * c
}

/// Rechecks the claims of `report` against `a`. Returns one message per
/// failing field; an empty list means the report is consistent.
pub fn verify(a: &Matrix, report: &Report) -> Vec<String> {
    let mut fails = Vec::new();
    let n = a.rows();
    if report.dimension != n || !a.is_square() {
        fails.push(format!("dimension: report has {}, matrix is {}x{}", report.dimension, a.rows(), a.cols()));
        return fails;
    }
    for (i, e) in report.eigenvalues.iter().enumerate() {
        match conjugate_partition(&e.segre) {
            Ok(w) if w == e.weyr => {}
            _ => fails.push(format!("eigenvalues[{i}].weyr: not the conjugate of segre {:?}", e.segre)),
        }
    }
    let segres: Vec<Vec<usize>> = report.structure.iter().map(|s| s.segre.clone()).collect();
    match bundle_codimension(&segres) {
        Ok(c) if c == report.global.codimension => {}
        Ok(c) => fails.push(format!("global.codimension: claimed {}, structure gives {c}", report.global.codimension)),
        Err(e) => fails.push(format!("structure: {e}")),
    }
    let total: usize = segres.iter().flatten().sum();
    if report.command == "jcf" && report.complete && total != n {
        fails.push(format!("structure: multiplicities sum to {total} in dimension {n}"));
    }
    if let Some(f) = &report.factors {
        match (f.left.to_matrix(), f.right.to_matrix()) {
            (Ok(l), Ok(r)) => verify_factors(a, report, f, &l, &r, &mut fails),
            (Err(e), _) => fails.push(format!("factors.left: {e}")),
            (_, Err(e)) => fails.push(format!("factors.right: {e}")),
        }
    }
    fails
}

fn orthogonality_bound(cols: usize) -> f64 {
    1e3 * UNIT_ROUNDOFF * cols.max(1) as f64
}

fn verify_factors(a: &Matrix, report: &Report, f: &Factors, l: &Matrix, r: &Matrix, fails: &mut Vec<String>) {
    let n = a.rows();
    let rho = report.config.rho.0;
    let value_tol = |z: C64| VERIFY_FACTOR * rho * (1.0 + z.norm());
    match f.kind {
        FactorKind::Staircase => {
            if l.shape() != (n, n) || r.shape() != (n, n) {
                fails.push("factors: U and T must be square of the matrix dimension".into());
                return;
            }
            let k: usize = report.eigenvalues.iter().map(|e| e.weyr.iter().sum::<usize>()).sum();
            let mut want: Vec<usize> = report.eigenvalues.iter().map(|e| e.weyr.iter().sum()).collect();
            if k < n {
                want.push(n - k);
            }
            if f.blocks != want {
                fails.push(format!("factors.blocks: {:?} do not match the eigenvalue records {want:?}", f.blocks));
                return;
            }
            let defect = l.orthogonality_defect();
            if defect > orthogonality_bound(n) {
                fails.push(format!("factors.left: U is not unitary, ||U^H U - I||_F = {defect:.2e}"));
            }
            let offs = prefix_sums(&f.blocks);
            let block_of = |i: usize| offs.partition_point(|&o| o <= i) - 1;
            let level: Vec<usize> = report.eigenvalues.iter().flat_map(|e| block_of_index(&e.weyr)).collect();
            let allowed = |i: usize, j: usize| match (block_of(i), block_of(j)) {
                (bi, bj) if bi != bj => bi < bj,
                _ if i >= k => i <= j,
                _ => i == j || level[i] < level[j],
            };
            if let Some((i, j)) = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).find(|&(i, j)| !allowed(i, j) && r[(i, j)] != ZERO) {
                fails.push(format!("factors.right: T has a nonzero at ({i}, {j}) outside its block pattern"));
            }
            let full = l.adjoint_mul(&a.matmul(l));
            let mut that = Matrix::from_fn(n, n, |i, j| if allowed(i, j) { full[(i, j)] } else { ZERO });
            for (bi, e) in report.eigenvalues.iter().enumerate() {
                let (r0, r1) = (offs[bi], offs[bi + 1]);
                if let Some(i) = (r0..r1).find(|&i| (r[(i, i)] - e.value.0).norm() > value_tol(e.value.0)) {
                    fails.push(format!("factors.right: diagonal {i} of T is {} for eigenvalue {}", Complex(r[(i, i)]), e.value));
                }
                // The best eigenvalue for fixed U is the mean of the block diagonal.
                let mean = (r0..r1).map(|i| full[(i, i)]).sum::<C64>() / (r1 - r0) as f64;
                for i in r0..r1 {
                    that[(i, i)] = mean;
                }
            }
            let res = relative_residual(a, l, &that);
            if !agrees(report.global.residual.0, res) {
                fails.push(format!(
                    "global.residual: claimed {:.3e}, recomputed {res:.3e}",
                    report.global.residual.0
                ));
            }
        }
        FactorKind::Jordan => {
            if l.shape() != (n, n) || r.shape() != (n, n) {
                fails.push("factors: X and J must be square of the matrix dimension".into());
                return;
            }
            let mut want: Vec<usize> = report.eigenvalues.iter().flat_map(|e| e.segre.iter().copied()).collect();
            want.extend(std::iter::repeat_n(1, report.simple_eigenvalues.len()));
            if f.blocks != want {
                fails.push(format!("factors.blocks: {:?} do not match the eigenvalue records {want:?}", f.blocks));
                return;
            }
            let offs = prefix_sums(&f.blocks);
            for row in 0..n {
                for c in 0..n {
                    let same = offs.partition_point(|&o| o <= row) == offs.partition_point(|&o| o <= c);
                    let z = r[(row, c)];
                    let ok = if row == c || !same {
                        row == c || z == ZERO
                    } else if c == row + 1 {
                        z == C64::new(1.0, 0.0)
                    } else {
                        z == ZERO
                    };
                    if !ok {
                        fails.push(format!("factors.right: J is not in Jordan form at ({row}, {c})"));
                        return;
                    }
                }
            }
            let values: Vec<C64> = report
                .eigenvalues
                .iter()
                .flat_map(|e| std::iter::repeat_n(e.value.0, e.weyr.iter().sum()))
                .chain(report.simple_eigenvalues.iter().map(|z| z.0))
                .collect();
            for (i, v) in values.iter().enumerate() {
                if (r[(i, i)] - v).norm() > value_tol(*v) {
                    fails.push(format!("factors.right: diagonal {i} of J is {} for eigenvalue {}", Complex(r[(i, i)]), Complex(*v)));
                    break;
                }
            }
            let res = relative_residual(a, l, r);
            match report.global.jordan_residual {
                Some(c) if agrees(c.0, res) => {}
                Some(c) => fails.push(format!("global.jordan_residual: claimed {:.3e}, recomputed {res:.3e}", c.0)),
                None => fails.push("global.jordan_residual: missing for Jordan factors".into()),
            }
        }
        FactorKind::Triplet => {
            let [e] = report.eigenvalues.as_slice() else {
                fails.push("eigenvalues: triplet factors need exactly one eigenvalue record".into());
                return;
            };
            let m: usize = e.weyr.iter().sum();
            if l.shape() != (n, m) || r.shape() != (m, m) {
                fails.push(format!("factors: Y must be {n}x{m} and the block {m}x{m}"));
                return;
            }
            let defect = l.orthogonality_defect();
            if defect > orthogonality_bound(m) {
                fails.push(format!("factors.left: Y is not orthonormal, ||Y^H Y - I||_F = {defect:.2e}"));
            }
            let s = r.shifted(e.value.0);
            if project_staircase(&s, &e.weyr).sub(&s).max_abs() != 0.0 {
                fails.push("factors.right: block is not lambda I plus a staircase".into());
            }
            let res = relative_residual(a, l, r);
            if !agrees(e.residual.0, res) {
                fails.push(format!("eigenvalues[0].residual: claimed {:.3e}, recomputed {res:.3e}", e.residual.0));
            }
        }
    }
}
