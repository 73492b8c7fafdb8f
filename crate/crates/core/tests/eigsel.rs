use gjbd::datagen::{fixture, random_instance};
use gjbd::eigsel::{
    eigen_basis, extract_pep_vectors, order_by_residual, scaled_residual, select_basis, solve_pencil_with, Eigenvalue,
    EigenvectorRoute, RANK_FACTOR,
};
use gjbd::linalg::spectral_norm;
use gjbd::metrics::{condition_2, subspace_angle};
use gjbd::scalar::{cplx, CMat};
use gjbd::{MatrixSet, Partition};
use nalgebra::DMatrix;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ROUTES: [EigenvectorRoute; 2] = [EigenvectorRoute::Schur, EigenvectorRoute::Polynomial];

fn random_cmat(rng: &mut ChaCha8Rng, n: usize) -> CMat<f64> {
    CMat::from_fn(n, n, |_, _| cplx(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn finite(e: &Eigenvalue<f64>) -> Complex<f64> {
    e.finite().expect("finite eigenvalue")
}

#[test]
fn sec2_eigenvalues_match_printed() {
    let fx = fixture::<f64>("sec2-3x3").unwrap();
    let pencil = fx.ms.linearize().unwrap();
    for route in ROUTES {
        let pairs = solve_pencil_with(&pencil, route).unwrap();
        assert_eq!(pairs.len(), 6);
        for printed in &fx.printed_eigenvalues {
            let best = pairs.iter().map(|p| (finite(&p.eigenvalue) - printed).norm()).fold(f64::INFINITY, f64::min);
            assert!(best <= 5e-4, "{route:?}: {printed} missed by {best}");
        }
    }
}

#[test]
fn sec2_printed_pair_has_small_residual() {
    let fx = fixture::<f64>("sec2-3x3").unwrap();
    let x2 = fx.printed_vectors.as_ref().unwrap().column(1).clone_owned();
    let p3 = fx.ms.evaluate(cplx(3.0, 0.0));
    assert!((&p3 * &x2).norm() <= 5e-4 * spectral_norm(&p3));
}

#[test]
fn sec2_extracted_vectors_match_printed_columns() {
    let fx = fixture::<f64>("sec2-3x3").unwrap();
    let printed = fx.printed_vectors.as_ref().unwrap();
    let pencil = fx.ms.linearize().unwrap();
    for route in ROUTES {
        let pairs = solve_pencil_with(&pencil, route).unwrap();
        let ext = extract_pep_vectors(&pairs, 3, 2);
        assert!(ext.dropped.is_empty());
        for (k, lambda) in fx.printed_eigenvalues.iter().enumerate() {
            let cand = ext
                .candidates
                .iter()
                .min_by(|a, b| {
                    let da = (finite(&a.eigenvalue) - lambda).norm();
                    let db = (finite(&b.eigenvalue) - lambda).norm();
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap();
            let x = CMat::from_column_slice(3, 1, cand.vector.as_slice());
            let col = printed.columns(k, 1).clone_owned();
            let angle = subspace_angle(&x, &col).unwrap();
            assert!(angle <= 2e-3, "{route:?}: column {k} off by {angle} rad");
        }
    }
}

#[test]
fn sec2_greedy_basis_is_near_best_triple() {
    let fx = fixture::<f64>("sec2-3x3").unwrap();
    let pencil = fx.ms.linearize().unwrap();
    let pairs = solve_pencil_with(&pencil, EigenvectorRoute::Schur).unwrap();
    let ext = extract_pep_vectors(&pairs, 3, 2);
    let (ordered, _) = order_by_residual(&fx.ms, ext.candidates);
    let basis = select_basis(&ordered, 3, RANK_FACTOR).unwrap();
    let cond = condition_2(&basis.x_mat);
    assert!(basis.r_nn > 0.1, "r_nn = {}", basis.r_nn);
    assert!(cond <= 50.0, "cond = {cond}");

    let mut best = f64::INFINITY;
    for a in 0..6 {
        for b in a + 1..6 {
            for c in b + 1..6 {
                let m = CMat::from_fn(3, 3, |r, k| ordered[[a, b, c][k]].vector[r]);
                best = best.min(condition_2(&m));
            }
        }
    }
    assert!(cond <= 2.0 * best, "greedy {cond} vs best {best}");
}

#[test]
fn triangular_pencil_eigenvalues_are_diagonal_ratios() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let upper = |rng: &mut ChaCha8Rng| {
            let mut m = random_cmat(rng, 3);
            for r in 0..3 {
                for c in 0..r {
                    m[(r, c)] = cplx(0.0, 0.0);
                }
                m[(r, r)] += cplx(2.0, 0.0);
            }
            m
        };
        let a0 = upper(&mut rng);
        let a1 = upper(&mut rng);
        let ms = MatrixSet::new(vec![a0.clone(), a1.clone()]).unwrap();
        let mut expected: Vec<Complex<f64>> = (0..3).map(|k| -a0[(k, k)] / a1[(k, k)]).collect();
        for route in ROUTES {
            let pairs = solve_pencil_with(&ms.linearize().unwrap(), route).unwrap();
            let mut got: Vec<Complex<f64>> = pairs.iter().map(|p| finite(&p.eigenvalue)).collect();
            let key = |z: &Complex<f64>| (z.re, z.im);
            got.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
            expected.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
            for (g, e) in got.iter().zip(&expected) {
                assert!((g - e).norm() <= 1e-10 * e.norm().max(1.0), "{g} vs {e}");
            }
        }
    }
}

#[test]
fn pencil_determinant_matches_polynomial() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let ms = MatrixSet::new((0..4).map(|_| random_cmat(&mut rng, 4)).collect()).unwrap();
    let pencil = ms.linearize().unwrap();
    for _ in 0..10 {
        let lambda = cplx(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let lhs = (&pencil.m_mat * lambda + &pencil.n_mat).determinant();
        let rhs = ms.evaluate(lambda).determinant();
        assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm(), "{lhs} vs {rhs} at {lambda}");
    }
}

#[test]
fn extracted_vectors_solve_the_polynomial() {
    let part = Partition::new(vec![2, 2]).unwrap();
    for seed in 0..5 {
        let inst = random_instance::<f64>(4, &part, 2, 40.0, seed, false).unwrap();
        let norms = inst.ms.spectral_norms();
        for route in ROUTES {
            let pairs = solve_pencil_with(&inst.ms.linearize().unwrap(), route).unwrap();
            let ext = extract_pep_vectors(&pairs, 4, 2);
            for cand in &ext.candidates {
                let r = scaled_residual(&inst.ms, &norms, cand);
                assert!(r <= 1e-8, "{route:?} seed {seed}: residual {r}");
            }
        }
    }
}

#[test]
fn eigen_basis_is_certified() {
    let part = Partition::new(vec![3, 3, 3]).unwrap();
    let inst = random_instance::<f64>(9, &part, 4, f64::INFINITY, 21, false).unwrap();
    let one = eigen_basis(&inst.ms, EigenvectorRoute::Polynomial, RANK_FACTOR).unwrap();
    assert!(one.basis.r_nn > one.basis.tol_rank);
    assert_eq!(one.eigenvalues.len(), 36);
    assert_eq!(one.basis.x_mat.shape(), (9, 9));
    assert!(one.basis.r_diag.windows(2).all(|w| w[1] <= w[0]));
    let unit: DMatrix<f64> = DMatrix::from_fn(1, 9, |_, c| one.basis.x_mat.column(c).norm());
    assert!(unit.iter().all(|v| (v - 1.0).abs() <= 1e-12));
}
