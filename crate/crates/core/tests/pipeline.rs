use gjbd::datagen::{fixture, random_instance};
use gjbd::eigsel::{extract_pep_vectors, order_by_residual, select_basis, solve_pencil_with, EigenvectorRoute, RANK_FACTOR};
use gjbd::io::{to_json, SolutionFile};
use gjbd::metrics::performance_index;
use gjbd::pipeline::{solve_detailed, solve_from_basis};
use gjbd::refine::relative_cost;
use gjbd::{solve, MatrixSet, Partition, SolveOptions};

#[test]
fn exact_two_three_four() {
    let part = Partition::new(vec![2, 3, 4]).unwrap();
    for seed in 0..3 {
        let inst = random_instance::<f64>(9, &part, 24, f64::INFINITY, seed, false).unwrap();
        let (sol, trace) = solve(&inst.ms, &SolveOptions::default()).unwrap();
        assert_eq!(sol.partition.sorted_sizes(), vec![2, 3, 4]);
        let pi = performance_index(&inst.unmixing(), &part, &sol.w_mat, &sol.partition).unwrap();
        assert!(pi <= 1e-8, "seed {seed}: pi {pi}");
        assert!(trace.warnings.is_empty(), "{:?}", trace.warnings);
    }
}

#[test]
fn sec2_fixture_in_both_precisions() {
    let fx = fixture::<f64>("sec2-3x3").unwrap();
    let (sol, _) = solve(&fx.ms, &SolveOptions::default()).unwrap();
    assert_eq!(sol.partition.sorted_sizes(), vec![1, 2]);
    assert!(sol.max_relative_residual() <= 1e-8);

    let fx32 = fixture::<f32>("sec2-3x3").unwrap();
    let (sol32, _) = solve(&fx32.ms, &SolveOptions::default()).unwrap();
    assert_eq!(sol32.partition.sorted_sizes(), vec![1, 2]);
    assert!(sol32.max_relative_residual() <= 1e-3);
}

#[test]
fn schur_route_agrees_on_exact_data() {
    let part = Partition::new(vec![3, 3, 3]).unwrap();
    let inst = random_instance::<f64>(9, &part, 4, f64::INFINITY, 2, false).unwrap();
    let opts = SolveOptions { route: EigenvectorRoute::Schur, ..SolveOptions::default() };
    let (sol, _) = solve(&inst.ms, &opts).unwrap();
    assert_eq!(sol.partition.sorted_sizes(), vec![3, 3, 3]);
    assert!(performance_index(&inst.unmixing(), &part, &sol.w_mat, &sol.partition).unwrap() <= 1e-8);
}

#[test]
fn repeated_solves_are_bit_identical() {
    let part = Partition::new(vec![3, 3, 3]).unwrap();
    let inst = random_instance::<f64>(9, &part, 6, 40.0, 5, false).unwrap();
    let run = || {
        let (sol, trace) = solve(&inst.ms, &SolveOptions::default()).unwrap();
        to_json(&SolutionFile::new(&sol, Some(trace)))
    };
    assert_eq!(run(), run());
}

#[test]
fn disjoint_bases_give_equivalent_solutions() {
    let part = Partition::new(vec![1, 2, 3]).unwrap();
    for seed in 0..3 {
        let inst = random_instance::<f64>(6, &part, 3, f64::INFINITY, seed, false).unwrap();
        let pairs = solve_pencil_with(&inst.ms.linearize().unwrap(), EigenvectorRoute::Polynomial).unwrap();
        let (ordered, _) = order_by_residual(&inst.ms, extract_pep_vectors(&pairs, 6, 3).candidates);
        let a = select_basis(&ordered, 6, RANK_FACTOR).unwrap();
        let rest: Vec<_> = (0..ordered.len())
            .rev()
            .filter(|k| !a.pivot[..6].contains(k))
            .map(|k| ordered[k].clone())
            .collect();
        let b = select_basis(&rest, 6, RANK_FACTOR).unwrap();
        let opts = SolveOptions::default();
        let sa = solve_from_basis(&inst.ms, &a.x_mat, &opts).unwrap().solution;
        let sb = solve_from_basis(&inst.ms, &b.x_mat, &opts).unwrap().solution;
        assert!(sa.partition.same_sizes(&sb.partition));
        let pi = performance_index(&sa.w_mat, &sa.partition, &sb.w_mat, &sb.partition).unwrap();
        assert!(pi <= 1e-6, "seed {seed}: {pi}");
    }
}

#[test]
fn real_request_stays_close_to_the_complex_cost() {
    let part = Partition::new(vec![2, 3, 4]).unwrap();
    let inst = random_instance::<f64>(9, &part, 4, 60.0, 3, true).unwrap();
    let complex = solve_detailed(&inst.ms, &SolveOptions { refine_loops: 0, ..SolveOptions::default() }).unwrap();
    let real = solve_detailed(
        &inst.ms,
        &SolveOptions { refine_loops: 0, want_real: true, ..SolveOptions::default() },
    )
    .unwrap();
    assert!(real.solution.is_real);
    let cc = relative_cost(&inst.ms, &complex.solution.partition, &complex.solution.w_mat);
    let rc = relative_cost(&inst.ms, &real.solution.partition, &real.solution.w_mat);
    let warned = real.trace.warnings.iter().any(|w| w.contains("real"));
    assert!(rc <= 10.0 * cc || warned, "{rc} vs {cc}");
}

#[test]
fn real_request_on_complex_data_is_a_warning() {
    let part = Partition::new(vec![1, 2]).unwrap();
    let inst = random_instance::<f64>(3, &part, 2, f64::INFINITY, 1, false).unwrap();
    let (sol, trace) = solve(&inst.ms, &SolveOptions { want_real: true, ..SolveOptions::default() }).unwrap();
    assert!(!trace.realified);
    assert!(!sol.is_real);
    assert_eq!(trace.warnings.len(), 1);
}

#[test]
fn refinement_never_raises_the_cost() {
    let part = Partition::new(vec![3, 3, 3]).unwrap();
    for seed in 0..5 {
        let inst = random_instance::<f64>(9, &part, 4, 30.0, seed, false).unwrap();
        let (_, trace) = solve(&inst.ms, &SolveOptions::default()).unwrap();
        assert!(trace.post_refine_cost <= trace.pre_refine_cost + 1e-12);
    }
}

#[test]
fn scaled_identity_pair_is_already_diagonal() {
    let ms = MatrixSet::<f64>::from_real(vec![nalgebra::DMatrix::identity(3, 3), -nalgebra::DMatrix::identity(3, 3)])
        .unwrap();
    let (sol, _) = solve(&ms, &SolveOptions::default()).unwrap();
    assert_eq!(sol.partition.order(), 3);
    assert!(sol.cost <= 1e-24);
}
