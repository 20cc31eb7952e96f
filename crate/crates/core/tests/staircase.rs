mod common;

use numjcf_core::matrix::{dot, norm2, Matrix, C64, UNIT_ROUNDOFF, ZERO};
use numjcf_core::numeric::householder_qr;
use numjcf_core::staircase::system::{pack, unpack};
use numjcf_core::staircase::triplet::{in_staircase_pattern, s_positions};
use numjcf_core::staircase::*;
use numjcf_core::structure::{block_of_index, conjugate_partition, phi_index_set, prefix_sums};
use numjcf_core::testmat::{frank, jordan_matrix, sensitivity_example, similarity};
use proptest::prelude::*;
use rand::Rng;

const EXAMPLE_WEYR_2: [usize; 9] = [2, 1, 1, 1, 1, 1, 1, 1, 1];
const EXAMPLE_WEYR_3: [usize; 8] = [2, 2, 1, 1, 1, 1, 1, 1];

/// Matrix with an exact unitary staircase eigentriplet `(lambda, Q_1, S)`,
/// built as `Q [[lambda I + S, C], [0, B]] Q^H`.
struct Constructed {
    a: Matrix,
    triplet: Eigentriplet,
}

fn random_staircase(weyr: &[usize], rng: &mut impl Rng) -> Matrix {
    let m: usize = weyr.iter().sum();
    let mut s = Matrix::zeros(m, m);
    for (r, c) in s_positions(weyr) {
        s[(r, c)] = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    }
    // Make the superdiagonal blocks comfortably full rank.
    let mu = prefix_sums(weyr);
    for l in 1..weyr.len() {
        for k in 0..weyr[l] {
            s[(mu[l - 1] + k, mu[l] + k)] += C64::new(2.0, 0.0);
        }
    }
    s
}

fn construct(n: usize, lambda: C64, weyr: &[usize], rng: &mut impl Rng) -> Constructed {
    let m: usize = weyr.iter().sum();
    let s = random_staircase(weyr, rng);
    let mut block = common::random_matrix(n, n, rng);
    for i in 0..m {
        for j in 0..m {
            block[(i, j)] = s[(i, j)];
        }
        block[(i, i)] += lambda;
        for j in 0..i {
            block[(i, j)] = ZERO;
        }
    }
    for i in m..n {
        for j in 0..m {
            block[(i, j)] = ZERO;
        }
        // Keep the rest of the spectrum away from lambda.
        block[(i, i)] += lambda + C64::new(3.0, 0.0);
    }
    let q = householder_qr(&common::random_matrix(n, n, rng), false).unwrap().q;
    let a = q.matmul(&block).matmul(&q.adjoint());
    let y = q.columns(0, m);
    Constructed { a, triplet: Eigentriplet { lambda, y, s, weyr: weyr.to_vec() } }
}

fn exact_aux(t: &Eigentriplet) -> AuxVectors {
    AuxVectors { b: t.y.clone(), c: t.y.clone() }
}

fn refine_example(lambda0: f64, weyr: &[usize], seed: u64) -> RefinedTriplet {
    let a = sensitivity_example();
    let mut rng = common::rng(seed);
    let (t, aux) = initial_eigentriplet(&a, C64::new(lambda0, 0.0), weyr, None, &mut rng).unwrap();
    eigentriplet_refine(&a, &t, &aux, &RefineOptions::default()).unwrap()
}

#[test]
fn system_size_counts_emitted_equations() {
    let weyr = [3, 2, 1];
    let n = 6;
    let (eta, zeta) = system_size(n, &weyr);
    let squares: usize = weyr.iter().map(|m| m * m).sum();
    assert_eq!(eta as isize - zeta as isize, squares as isize - 1);
    assert_eq!(eta - zeta, 13);
    let mut rng = common::rng(1);
    let c = construct(n, C64::new(0.5, 0.0), &weyr, &mut rng);
    let aux = exact_aux(&c.triplet);
    assert_eq!(staircase_residual(&c.a, &c.triplet, &aux).unwrap().len(), eta);
    assert_eq!(pack(&c.triplet).len(), zeta);
    assert_eq!(staircase_jacobian(&c.a, &c.triplet, &aux).unwrap().shape(), (eta, zeta));
}

#[test]
fn s_positions_ordering() {
    // Columns of block 2 then block 3, rows top to bottom.
    let pos = s_positions(&[2, 1, 1]);
    assert_eq!(pos, vec![(0, 2), (1, 2), (0, 3), (1, 3), (2, 3)]);
    let blocks = block_of_index(&[2, 1, 1]);
    assert!(pos.iter().all(|&(r, c)| in_staircase_pattern(&blocks, r, c)));
}

#[test]
fn pack_unpack_round_trip() {
    let mut rng = common::rng(2);
    let c = construct(7, C64::new(1.0, 1.0), &[2, 2, 1], &mut rng);
    let back = unpack(&pack(&c.triplet), 7, &c.triplet.weyr);
    assert_eq!(back.lambda, c.triplet.lambda);
    assert_eq!(back.y, c.triplet.y);
    assert_eq!(back.s, c.triplet.s);
}

#[test]
fn exact_triplet_has_zero_residual() {
    let mut rng = common::rng(3);
    for weyr in [vec![1], vec![2], vec![1, 1], vec![3, 2, 1], vec![2, 1, 1]] {
        let c = construct(8, C64::new(-0.3, 0.7), &weyr, &mut rng);
        let f = staircase_residual(&c.a, &c.triplet, &exact_aux(&c.triplet)).unwrap();
        assert!(norm2(&f) <= 1e-13, "{weyr:?}: {}", norm2(&f));
    }
}

#[test]
fn lambda_column_of_jacobian() {
    let mut rng = common::rng(4);
    let c = construct(5, C64::new(2.0, 0.0), &[2, 1], &mut rng);
    let jac = staircase_jacobian(&c.a, &c.triplet, &exact_aux(&c.triplet)).unwrap();
    let (n, m) = c.triplet.y.shape();
    for l in 0..m {
        for k in 0..n {
            assert_eq!(jac[(l * n + k, 0)], -c.triplet.y[(k, l)]);
        }
    }
    for r in n * m..jac.rows() {
        assert_eq!(jac[(r, 0)], ZERO);
    }
}

fn finite_difference_defect(a: &Matrix, t: &Eigentriplet, aux: &AuxVectors, rng: &mut impl Rng) -> f64 {
    let x = pack(t);
    let n = a.rows();
    let mut d: Vec<C64> = (0..x.len()).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let scale = 1e-7 / norm2(&d);
    d.iter_mut().for_each(|v| *v *= scale);
    let xp: Vec<C64> = x.iter().zip(&d).map(|(a, b)| a + b).collect();
    let f0 = staircase_residual(a, t, aux).unwrap();
    let f1 = staircase_residual(a, &unpack(&xp, n, &t.weyr), aux).unwrap();
    let jd = staircase_jacobian(a, t, aux).unwrap().mul_vec(&d);
    let diff: Vec<C64> = (0..f0.len()).map(|i| jd[i] - (f1[i] - f0[i])).collect();
    norm2(&diff) / norm2(&d)
}

#[test]
fn jacobian_matches_finite_differences() {
    let mut rng = common::rng(5);
    for weyr in [vec![1], vec![3, 2, 1], vec![2, 2], vec![1, 1, 1]] {
        let a = common::random_matrix(6, 6, &mut rng);
        let m: usize = weyr.iter().sum();
        let t = Eigentriplet {
            lambda: C64::new(0.3, -0.2),
            y: common::random_matrix(6, m, &mut rng),
            s: random_staircase(&weyr, &mut rng),
            weyr: weyr.clone(),
        };
        let aux = AuxVectors { b: common::random_matrix(6, m, &mut rng), c: common::random_matrix(6, m, &mut rng) };
        let defect = finite_difference_defect(&a, &t, &aux, &mut rng);
        assert!(defect <= 1e-6, "{weyr:?}: {defect:e}");
    }
}

#[test]
fn initial_triplet_of_scalar_matrix() {
    let mut rng = common::rng(6);
    let lambda = C64::new(2.5, -1.0);
    let a = Matrix::identity(4).scale(lambda);
    let (t, _) = initial_eigentriplet(&a, lambda, &[4], None, &mut rng).unwrap();
    assert_eq!(t.s.max_abs(), 0.0);
    assert!(t.y.orthogonality_defect() <= 1e-13);
    assert!(t.backward_residual(&a) <= 1e-15);
}

#[test]
fn initial_triplet_of_jordan_block() {
    let mut rng = common::rng(7);
    let a = jordan_matrix(&[(ZERO, vec![2])]).unwrap();
    let (t, _) = initial_eigentriplet(&a, ZERO, &[1, 1], None, &mut rng).unwrap();
    assert!((t.y[(0, 0)].norm() - 1.0).abs() <= 1e-14 && t.y[(1, 0)].norm() <= 1e-14);
    assert!((t.y[(1, 1)].norm() - 1.0).abs() <= 1e-14 && t.y[(0, 1)].norm() <= 1e-14);
    assert!((t.s[(0, 1)].norm() - 1.0).abs() <= 1e-14);
    assert_eq!(t.s[(0, 0)], ZERO);
    assert_eq!(t.s[(1, 1)], ZERO);
    assert_eq!(t.s[(1, 0)], ZERO);
}

#[test]
fn wrong_structure_is_rejected() {
    // Segre {2, 1} claimed as a single block of size 3.
    let mut rng = common::rng(8);
    let j = jordan_matrix(&[(C64::new(1.0, 0.0), vec![2, 1]), (C64::new(-1.0, 0.0), vec![1])]).unwrap();
    let x = common::random_real_matrix(4, 4, &mut rng);
    let a = similarity(&x, &j).unwrap();
    let weyr = conjugate_partition(&[3]).unwrap();
    let outcome = initial_eigentriplet(&a, C64::new(1.0, 0.0), &weyr, None, &mut rng)
        .and_then(|(t, aux)| eigentriplet_refine(&a, &t, &aux, &RefineOptions::default()));
    assert!(outcome.is_err());
}

#[test]
fn exact_triplet_is_a_fixed_point() {
    let mut rng = common::rng(9);
    let c = construct(9, C64::new(1.0, -2.0), &[3, 2, 1], &mut rng);
    let r = eigentriplet_refine(&c.a, &c.triplet, &exact_aux(&c.triplet), &RefineOptions::default()).unwrap();
    assert_eq!(r.diagnostics.iterations, 1);
    assert!(r.diagnostics.step_norms[0][0] <= 1e-14);
    assert!(r.diagnostics.residual <= 1e-15);
}

#[test]
fn sensitivity_example_double_block() {
    let r = refine_example(1.999, &EXAMPLE_WEYR_2, 0);
    let lambda = r.triplet.lambda;
    assert!((lambda - C64::new(2.0, 0.0)).norm() <= 1e-12, "{lambda}");
    assert!(r.diagnostics.residual <= 1e-15, "{:e}", r.diagnostics.residual);
    let kappa = r.diagnostics.staircase_cond;
    assert!(kappa >= 3.45e7 / 3.0 && kappa <= 3.45e7 * 3.0, "{kappa:e}");
    assert!(r.triplet.y.orthogonality_defect() <= 1e-12);
}

#[test]
fn sensitivity_example_triple_block() {
    let r = refine_example(2.999, &EXAMPLE_WEYR_3, 1);
    let lambda = r.triplet.lambda;
    assert!((lambda - C64::new(3.0, 0.0)).norm() <= 1e-12, "{lambda}");
    assert!(r.diagnostics.residual <= 1e-15, "{:e}", r.diagnostics.residual);
    let kappa = r.diagnostics.staircase_cond;
    assert!(kappa >= 5.33e5 / 3.0 && kappa <= 5.33e5 * 3.0, "{kappa:e}");
    let a = sensitivity_example();
    let cluster = cluster_condition_number(&a, &r.triplet).unwrap();
    assert!(cluster >= 6.48e11 && cluster <= 6.48e13, "{cluster:e}");
}

#[test]
fn convergence_is_superlinear_near_the_solution() {
    for (lambda0, weyr) in [(1.999, EXAMPLE_WEYR_2.to_vec()), (2.999, EXAMPLE_WEYR_3.to_vec())] {
        let r = refine_example(lambda0, &weyr, 2);
        let x = norm2(&pack(&r.triplet)).max(1.0);
        let floor = 10.0 * r.diagnostics.staircase_cond * UNIT_ROUNDOFF * x;
        let steps = &r.diagnostics.step_norms[0];
        let first = steps.iter().position(|&s| s < 1e-4).expect("steps fall below 1e-4");
        assert!(first > 0);
        for k in first..steps.len() {
            let prev = steps[k - 1];
            assert!(steps[k] <= prev.powf(1.5).max(floor), "{lambda0}: step {k} of {steps:?}");
        }
    }
}

#[test]
fn frank_double_eigenvalue() {
    let a = frank(12);
    let mut rng = common::rng(0);
    let (t, aux) = initial_eigentriplet(&a, C64::new(0.03, 0.0), &[1, 1], None, &mut rng).unwrap();
    let r = eigentriplet_refine(&a, &t, &aux, &RefineOptions::default()).unwrap();
    assert!((r.triplet.lambda - C64::new(0.0386493437615946, 0.0)).norm() <= 1e-10, "{}", r.triplet.lambda);
    assert!(r.diagnostics.residual <= 1e-11);
    let cluster = cluster_condition_number(&a, &r.triplet).unwrap();
    assert!(cluster >= 1.5e6 && cluster <= 1.5e8, "{cluster:e}");
}

#[test]
fn condition_of_simple_normal_eigenvalue() {
    let mut rng = common::rng(10);
    let q = householder_qr(&common::random_matrix(5, 5, &mut rng), false).unwrap().q;
    let d: Vec<C64> = (1..=5).map(|k| C64::new(k as f64, 0.0)).collect();
    let a = q.matmul(&Matrix::from_diag(&d)).matmul(&q.adjoint());
    let (t, aux) = initial_eigentriplet(&a, C64::new(2.01, 0.0), &[1], None, &mut rng).unwrap();
    let r = eigentriplet_refine(&a, &t, &aux, &RefineOptions::default()).unwrap();
    assert!((r.triplet.lambda - C64::new(2.0, 0.0)).norm() <= 1e-13);
    let kappa = r.diagnostics.staircase_cond;
    assert!((1.0..=100.0).contains(&kappa), "{kappa}");
    let cluster = cluster_condition_number(&a, &r.triplet).unwrap();
    assert!((cluster - 1.0).abs() <= 1e-10, "{cluster}");
}

#[test]
fn condition_is_unitarily_invariant() {
    let a = frank(12);
    let mut rng = common::rng(11);
    let (t, aux) = initial_eigentriplet(&a, C64::new(0.05, 0.0), &[1, 1, 1], None, &mut rng).unwrap();
    let r = eigentriplet_refine(&a, &t, &aux, &RefineOptions::default()).unwrap();
    let q = householder_qr(&common::random_matrix(12, 12, &mut rng), false).unwrap().q;
    let rotated_a = q.adjoint_mul(&a.matmul(&q));
    let rotated = Eigentriplet { y: q.adjoint_mul(&r.triplet.y), ..r.triplet.clone() };
    let rotated_aux = AuxVectors { b: q.adjoint_mul(&r.aux.b), c: q.adjoint_mul(&r.aux.c) };
    let k1 = r.diagnostics.staircase_cond;
    let k2 = staircase_condition_number(&rotated_a, &rotated, &rotated_aux).unwrap();
    assert!(k1 / k2 <= 2.0 && k2 / k1 <= 2.0, "{k1:e} vs {k2:e}");
}

fn assert_nearest_matrix_identity(a: &Matrix, t: &Eigentriplet) {
    let near = nearest_matrix_with_triplet(a, t).unwrap();
    let dist = a.sub(&near).norm_fro();
    let res = t.residual_matrix(a).norm_fro();
    assert!((dist - res).abs() <= 1e-12 * a.norm_fro(), "{dist:e} vs {res:e}");
    assert!(t.residual_matrix(&near).norm_fro() <= 1e-13 * near.norm_fro());
}

#[test]
fn nearest_matrix_of_sensitivity_example() {
    let a = sensitivity_example();
    let r = refine_example(1.999, &EXAMPLE_WEYR_2, 3);
    assert_nearest_matrix_identity(&a, &r.triplet);
    let near = nearest_matrix_with_triplet(&a, &r.triplet).unwrap();
    assert!(a.sub(&near).norm_fro() / a.norm_fro() <= 1e-15);
}

#[test]
fn nearest_matrix_of_exact_triplet_is_the_matrix() {
    let mut rng = common::rng(12);
    let c = construct(6, C64::new(0.0, 1.0), &[2, 1], &mut rng);
    let near = nearest_matrix_with_triplet(&c.a, &c.triplet).unwrap();
    assert!(c.a.sub(&near).norm_fro() <= 1e-13 * c.a.norm_fro());
}

#[test]
fn perturbation_bound() {
    let a = sensitivity_example();
    let base = refine_example(2.999, &EXAMPLE_WEYR_3, 4);
    let kappa = base.diagnostics.staircase_cond;
    let mut rng = common::rng(13);
    for _ in 0..20 {
        let mut e = common::random_matrix(20, 20, &mut rng);
        e = e.scale(C64::new(1e-10 * a.norm_fro() / e.norm_fro(), 0.0));
        let perturbed = a.add(&e);
        let q = norm2(&staircase_residual(&perturbed, &base.triplet, &base.aux).unwrap());
        let r = eigentriplet_refine(&perturbed, &base.triplet, &base.aux, &RefineOptions::default()).unwrap();
        let moved = (r.triplet.lambda - base.triplet.lambda).norm();
        assert!(moved <= 2.0 * kappa * (e.norm_fro() + q), "{moved:e} vs kappa {kappa:e}");
    }
}

fn weyr_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..4, 1..4).prop_map(|mut w| {
        w.sort_unstable_by(|a, b| b.cmp(a));
        w
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn refinement_recovers_constructed_triplet(weyr in weyr_strategy(), extra in 1usize..5, seed in 0u64..1000) {
        let mut rng = common::rng(seed);
        let m: usize = weyr.iter().sum();
        let n = m + extra;
        let lambda = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let c = construct(n, lambda, &weyr, &mut rng);
        let start = lambda + C64::new(1e-3, -1e-3);
        let (t, aux) = initial_eigentriplet(&c.a, start, &weyr, None, &mut rng).unwrap();
        let r = eigentriplet_refine(&c.a, &t, &aux, &RefineOptions::default()).unwrap();
        prop_assert!((r.triplet.lambda - lambda).norm() <= 1e-9);
        prop_assert!(r.diagnostics.residual <= 1e-13);
        prop_assert!(r.triplet.y.orthogonality_defect() <= 1e-12);

        // The Phi constraints hold for the auxiliary vectors of the last pass.
        for (i, j) in phi_index_set(&weyr).unwrap() {
            let v = dot(&r.aux.b.col(j), &r.triplet.y.col(i)).norm();
            prop_assert!(v <= 1e-10, "phi ({i},{j}) = {v:e}");
        }

        // Superdiagonal blocks of S are full rank.
        let mu = prefix_sums(&weyr);
        let s_norm = r.triplet.s.norm_fro();
        for l in 1..weyr.len() {
            let block = r.triplet.s.submatrix(mu[l - 1], mu[l], mu[l], mu[l + 1]);
            let sv = common::oracle_singular_values(&block);
            prop_assert!(sv[weyr[l] - 1] > 1e-8 * s_norm);
        }

        // Full column rank of the Jacobian at the solution.
        let jac = staircase_jacobian(&c.a, &r.triplet, &r.aux).unwrap();
        let sv = common::oracle_singular_values(&jac);
        prop_assert!(sv[sv.len() - 1] > 1e-8 * sv[0]);

        assert_nearest_matrix_identity(&c.a, &r.triplet);
    }

    #[test]
    fn jacobian_finite_differences_random(weyr in weyr_strategy(), seed in 0u64..1000) {
        let mut rng = common::rng(seed);
        let m: usize = weyr.iter().sum();
        let n = m + 2;
        let a = common::random_matrix(n, n, &mut rng);
        let t = Eigentriplet {
            lambda: C64::new(rng.random_range(-1.0..1.0), 0.0),
            y: common::random_matrix(n, m, &mut rng),
            s: random_staircase(&weyr, &mut rng),
            weyr: weyr.clone(),
        };
        let aux = AuxVectors { b: common::random_matrix(n, m, &mut rng), c: common::random_matrix(n, m, &mut rng) };
        prop_assert!(finite_difference_defect(&a, &t, &aux, &mut rng) <= 1e-6);
    }

    #[test]
    fn residual_is_scale_invariant(seed in 0u64..1000, scale in 0.01f64..100.0) {
        let mut rng = common::rng(seed);
        let c = construct(6, C64::new(0.5, 0.0), &[2, 1], &mut rng);
        let mut t = c.triplet.clone();
        t.lambda += C64::new(1e-3, 0.0);
        let r1 = t.backward_residual(&c.a);
        let s = C64::new(scale, 0.0);
        let scaled = Eigentriplet { lambda: t.lambda * s, s: t.s.scale(s), ..t.clone() };
        let r2 = scaled.backward_residual(&c.a.scale(s));
        prop_assert!((r1 - r2).abs() <= 1e-12 * r1.max(1e-300));
    }
}
