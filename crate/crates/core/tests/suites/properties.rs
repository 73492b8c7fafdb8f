//! Randomized invariant suites, run by the acceptance target.

use gjbd::bench::{read_csv, write_csv, BenchRow, BENCH_SCHEMA_VERSION};
use gjbd::blockreveal::{detect_blocks, laplacian, DetectOptions};
use gjbd::datagen::random_instance;
use gjbd::eigsel::{extract_pep_vectors, order_by_residual, select_basis, solve_pencil_with, EigenvectorRoute, RANK_FACTOR};
use gjbd::io::{from_json, to_json, MatrixSetFile};
use gjbd::linalg::pivoted_qr::pivoted_qr;
use gjbd::linalg::spectral_norm;
use gjbd::metrics::performance_index;
use gjbd::pipeline::{orthonormalize_blocks, solve_from_basis};
use gjbd::refine::{offblock_cost, refine_block};
use gjbd::scalar::{cplx, CMat};
use gjbd::{MatrixSet, Partition, SolveOptions};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config(seed: u64) -> ProptestConfig {
    ProptestConfig { cases: 128, rng_seed: RngSeed::Fixed(seed), failure_persistence: None, ..ProptestConfig::default() }
}

fn random_cmat(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat<f64> {
    CMat::from_fn(rows, cols, |_, _| cplx(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn partition() -> impl Strategy<Value = Partition> {
    prop::collection::vec(1usize..=3, 1..=3).prop_map(|parts| Partition::new(parts).unwrap())
}

fn union_find_components(adj: &DMatrix<bool>) -> usize {
    let n = adj.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in 0..n {
            if adj[(i, j)] {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    (0..n).filter(|&i| root(&mut parent, i) == i).count()
}

proptest! {
    #![proptest_config(config(0x5eed_0001))]

    fn pencil_eigenpairs_have_small_residuals(n in 1usize..=6, p in 1usize..=3, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ms = MatrixSet::new((0..=p).map(|_| random_cmat(&mut rng, n, n)).collect()).unwrap();
        let norms: Vec<f64> = ms.matrices().iter().map(spectral_norm).collect();
        for route in [EigenvectorRoute::Schur, EigenvectorRoute::Polynomial] {
            for pair in solve_pencil_with(&ms.linearize().unwrap(), route).unwrap() {
                let Some(lambda) = pair.eigenvalue.finite() else { continue };
                let x = pair.vector.rows(0, n).clone_owned();
                let scale: f64 = norms.iter().enumerate().map(|(i, a)| lambda.norm().powi(i as i32) * a).sum();
                let resid = (ms.evaluate(lambda) * &x).norm();
                prop_assert!(resid <= 1e-8 * scale * x.norm(), "{route:?}: {resid} vs {}", scale * x.norm());
            }
        }
    }
}

proptest! {
    #![proptest_config(config(0x5eed_0002))]

    fn pivoted_qr_diagonal_is_non_increasing(rows in 1usize..=9, extra in 0usize..=18, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_cmat(&mut rng, rows, rows + extra);
        let qr = pivoted_qr(&a, rows);
        prop_assert_eq!(qr.r_diag.len(), rows);
        for w in qr.r_diag.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", qr.r_diag);
        }
        let mut seen = qr.pivot.clone();
        seen.sort();
        prop_assert_eq!(seen, (0..rows + extra).collect::<Vec<_>>());
    }
}

proptest! {
    #![proptest_config(config(0x5eed_0003))]

    fn laplacian_structure(n in 1usize..=9, groups in 1usize..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let label: Vec<usize> = (0..n).map(|_| rng.random_range(0..groups)).collect();
        let mut h = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = if label[i] == label[j] { rng.random_range(0.0..10.0) } else { rng.random_range(0.0..0.1) };
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        let l = laplacian(&h);
        for k in 0..n {
            prop_assert!(l.row(k).sum().abs() <= 1e-12);
            prop_assert!(l.column(k).sum().abs() <= 1e-12);
        }
        prop_assert_eq!(&l, &l.transpose());
        let eig = SymmetricEigen::new(l.clone());
        prop_assert!(eig.eigenvalues.iter().all(|&e| e >= -1e-10));
        prop_assert!((&l * DMatrix::from_element(n, 1, 1.0)).amax() <= 1e-12);

        let means: Vec<f64> = (0..n).map(|j| h.column(j).sum() / n as f64).collect();
        let adj = DMatrix::from_fn(n, n, |i, j| i != j && (h[(i, j)] > means[j] || h[(j, i)] > means[i]));
        let components = union_find_components(&adj);
        let s = detect_blocks(&l, &DetectOptions::default()).unwrap();
        prop_assert_eq!(s.n_zero, components);
        prop_assert_eq!(s.partition.len(), components);
    }
}

proptest! {
    #![proptest_config(config(0x5eed_0004))]

    fn refinement_is_monotone_after_orthonormalization(
        part in partition(),
        p in 1usize..=4,
        snr in 20.0f64..80.0,
        seed in any::<u64>(),
    ) {
        let n = part.order();
        let inst = random_instance::<f64>(n, &part, p, snr, seed, false).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let start = inst.unmixing() + random_cmat(&mut rng, n, n) * cplx(0.1, 0.0);
        let mut w = orthonormalize_blocks(&part, &start);
        let mut f = offblock_cost(&inst.ms, &part, &w);
        for _ in 0..3 {
            for j in 0..part.len() {
                let Ok(next) = refine_block(&inst.ms, &part, &w, j) else { return Ok(()) };
                let g = offblock_cost(&inst.ms, &part, &next);
                prop_assert!(g <= f + 1e-12, "block {j}: {f} -> {g}");
                w = next;
                f = g;
            }
        }
    }
}

proptest! {
    #![proptest_config(config(0x5eed_0005))]

    fn pi_is_invariant_under_equivalence(part in partition(), seed in any::<u64>()) {
        let n = part.order();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = random_cmat(&mut rng, n, n) + CMat::identity(n, n) * cplx(2.0, 0.0);
        let w = &truth + random_cmat(&mut rng, n, n) * cplx(0.2, 0.0);

        let mut d = CMat::zeros(n, n);
        for r in part.ranges() {
            let k = r.len();
            let block = random_cmat(&mut rng, k, k) + CMat::identity(k, k) * cplx(2.0, 0.0);
            d.view_mut((r.start, r.start), (k, k)).copy_from(&block);
        }
        // Reverse the block order.
        let ranges: Vec<_> = part.ranges().collect();
        let cols: Vec<usize> = ranges.iter().rev().flat_map(|r| r.clone()).collect();
        let reversed = Partition::new(part.parts().iter().rev().copied().collect()).unwrap();
        let moved = |m: &CMat<f64>| {
            let md = m * &d;
            CMat::from_fn(n, n, |r, c| md[(r, cols[c])])
        };

        let exact = performance_index(&truth, &part, &moved(&truth), &reversed).unwrap();
        prop_assert!(exact <= 1e-12, "{exact}");
        let a = performance_index(&truth, &part, &w, &part).unwrap();
        let b = performance_index(&truth, &part, &moved(&w), &reversed).unwrap();
        prop_assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { max_global_rejects: 64, ..config(0x5eed_0006) })]

    fn disjoint_bases_are_equivalent(part in partition(), p in 2usize..=4, seed in any::<u64>()) {
        let n = part.order();
        let inst = random_instance::<f64>(n, &part, p, f64::INFINITY, seed, false).unwrap();
        let pairs = solve_pencil_with(&inst.ms.linearize().unwrap(), EigenvectorRoute::Polynomial).unwrap();
        let (ordered, _) = order_by_residual(&inst.ms, extract_pep_vectors(&pairs, n, p).candidates);
        let a = select_basis(&ordered, n, RANK_FACTOR).unwrap();
        let rest: Vec<_> = (0..ordered.len())
            .rev()
            .filter(|k| !a.pivot[..n].contains(k))
            .map(|k| ordered[k].clone())
            .collect();
        let b = select_basis(&rest, n, RANK_FACTOR).unwrap();
        let opts = SolveOptions::default();
        let sa = solve_from_basis(&inst.ms, &a.x_mat, &opts).unwrap().solution;
        let sb = solve_from_basis(&inst.ms, &b.x_mat, &opts).unwrap().solution;
        // The equivalence only holds once the true structure is revealed.
        prop_assume!(sa.partition.same_sizes(&part) && sb.partition.same_sizes(&part));
        let angle = performance_index(&sa.w_mat, &sa.partition, &sb.w_mat, &sb.partition).unwrap();
        prop_assert!(angle <= 1e-6, "{angle} {} {}", sa.partition, sb.partition);
    }
}

fn snr_value() -> impl Strategy<Value = f64> {
    prop_oneof![Just(f64::INFINITY), -50.0f64..150.0]
}

proptest! {
    #![proptest_config(config(0x5eed_0007))]

    fn matrix_set_files_round_trip(
        part in partition(),
        p in 0usize..=4,
        snr in snr_value(),
        seed in any::<u64>(),
        real in any::<bool>(),
    ) {
        let inst = random_instance::<f64>(part.order(), &part, p, snr, seed, real).unwrap();
        let file = MatrixSetFile::from_instance(&inst);
        let back: MatrixSetFile = from_json(&to_json(&file)).unwrap();
        prop_assert_eq!(&back, &file);
        let loaded = back.matrix_set().unwrap();
        prop_assert_eq!(loaded.matrices(), inst.ms.matrices());
    }

    fn bench_csv_round_trips(rows in prop::collection::vec(bench_row(), 0..8)) {
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        prop_assert_eq!(read_csv(buf.as_slice()).unwrap(), rows);
    }
}

fn maybe() -> impl Strategy<Value = Option<f64>> {
    prop::option::of(prop::num::f64::NORMAL | prop::num::f64::ZERO)
}

fn bench_row() -> impl Strategy<Value = BenchRow> {
    (
        ("[a-z0-9-]{1,12}", any::<usize>(), any::<u64>(), partition(), 0usize..30, snr_value()),
        (any::<bool>(), any::<bool>(), maybe(), maybe(), maybe(), maybe(), maybe()),
        (prop::array::uniform5(0.0f64..1e6), "[ -~]{0,30}"),
    )
        .prop_map(|((experiment, trial, seed, part, p, snr_db), (strict, merge, pi, pi_pre, cond, pre, post), (ms, error))| {
            BenchRow {
                schema_version: BENCH_SCHEMA_VERSION,
                experiment,
                trial,
                seed,
                n: part.order(),
                partition: part.to_string(),
                p,
                snr_db,
                success_strict: strict,
                success_merge: merge,
                pi,
                pi_pre,
                cond_w: cond,
                cost_pre: pre,
                cost_post: post,
                ms_eigen_basis: ms[0],
                ms_structure: ms[1],
                ms_realify: ms[2],
                ms_refine: ms[3],
                ms_total: ms[4],
                error,
            }
        })
}

/// Every suite with its name.
pub const SUITES: [(&str, fn()); 8] = [
    ("pencil eigenpair residuals", pencil_eigenpairs_have_small_residuals),
    ("pivoted QR diagonal", pivoted_qr_diagonal_is_non_increasing),
    ("Laplacian structure", laplacian_structure),
    ("refinement monotonicity", refinement_is_monotone_after_orthonormalization),
    ("PI equivalence invariance", pi_is_invariant_under_equivalence),
    ("disjoint basis equivalence", disjoint_bases_are_equivalent),
    ("matrix set file round trip", matrix_set_files_round_trip),
    ("bench CSV round trip", bench_csv_round_trips),
];
