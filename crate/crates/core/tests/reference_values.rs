//! Reference values, each checked against an independent computation:
//! characteristic-polynomial roots, direct substitution into the closed
//! forms, the minimizer, or the grid search.

use fmrmc::chain::{
    build_friendship_graph, build_transition_matrix, symmetric_laplacian, validate_chain, Equilibrium, Topology,
    Weights,
};
use fmrmc::closed_form::{classify_regime, kkt_residual, m1_thresholds, solve, RegimeTag, SolveOptions, Source};
use fmrmc::mixing::{evolve, fitted_vs_slem};
use fmrmc::oracle::{brute_force_grid, compare, grid_value, minimize_slem, OracleOptions};
use fmrmc::pareto::{frontier_curve_m1, non_dominated_filter, trace_frontier, ParetoPoint, SegmentShape};
use fmrmc::reduction::{block_diagonalize, check_interlacing, multiset_contains, multiset_eq, reduce_to_star};
use fmrmc::spectral::{eigenvalues_symmetric, slem, symmetrize};
use fmrmc::Error;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXACT: f64 = 1e-12;

fn eq(values: &[f64]) -> Equilibrium {
    Equilibrium::new(values.to_vec()).unwrap()
}

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
}

/// Roots of `det(x I - A)` for a symmetric 3x3 `A` by the trigonometric
/// formula, sorted non-increasingly.
fn cubic_roots(a: &DMatrix<f64>) -> Vec<f64> {
    let c2 = -a.trace();
    let c1 = a[(0, 0)] * a[(1, 1)] + a[(0, 0)] * a[(2, 2)] + a[(1, 1)] * a[(2, 2)]
        - a[(0, 1)] * a[(1, 0)]
        - a[(0, 2)] * a[(2, 0)]
        - a[(1, 2)] * a[(2, 1)];
    let c0 = -a.determinant();
    let shift = -c2 / 3.0;
    let p = c1 - c2 * c2 / 3.0;
    let q = 2.0 * c2.powi(3) / 27.0 - c2 * c1 / 3.0 + c0;
    let mut roots: Vec<f64> = if p.abs() < 1e-300 {
        vec![shift - q.cbrt(); 3]
    } else {
        let r = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * r)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3).map(|k| shift + r * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos()).collect()
    };
    roots.sort_by(|a, b| b.total_cmp(a));
    roots
}

#[test]
fn friendship_graph_counts() {
    let t1 = build_friendship_graph(1).unwrap();
    assert_eq!(t1.vertex_count(), 3);
    assert_eq!(t1.friend_edges().map(|e| e.key()).collect::<Vec<_>>(), vec![(1, 2)]);
    assert_eq!(t1.center_edges().map(|e| e.key()).collect::<Vec<_>>(), vec![(0, 1), (0, 2)]);
    let t2 = build_friendship_graph(2).unwrap();
    assert_eq!((t2.vertex_count(), t2.edges().len()), (5, 6));
    let t5 = build_friendship_graph(5).unwrap();
    assert_eq!((t5.vertex_count(), t5.edges().len()), (11, 15));
}

#[test]
fn laplacian_cases() {
    let t = build_friendship_graph(1).unwrap();
    let q = Weights::new().with(0, 1, 1.0).with(0, 2, 1.0);
    let l = symmetric_laplacian(&t, &q).unwrap();
    let expected = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, -1.0, -1.0, 1.0, 0.0, -1.0, 0.0, 1.0]);
    assert_eq!(l, expected);
    assert!((&l * DMatrix::from_element(3, 1, 1.0)).amax() == 0.0);
    assert!(eigenvalues_symmetric(&l).unwrap().iter().all(|v| *v >= -EXACT));
    assert_eq!(symmetric_laplacian(&t, &Weights::new()).unwrap(), DMatrix::zeros(3, 3));
}

#[test]
fn transition_matrix_cases() {
    let t = build_friendship_graph(2).unwrap();
    let mut q = Weights::new();
    for j in 1..=4 {
        q.set(0, j, 0.25);
    }
    let p = build_transition_matrix(&eq(&[1.0; 5]), &q, &t).unwrap();
    let m = p.matrix();
    assert_eq!(m, &m.transpose());
    assert_eq!(m[(0, 0)], 0.0);
    for j in 1..=4 {
        assert_eq!((m[(0, j)], m[(j, 0)], m[(j, j)]), (0.25, 0.25, 0.75));
    }
    // Regime-2 weights of the (1,1,1,1,2) example use the whole center budget.
    let q = Weights::new().with(0, 1, 7.0 / 29.0).with(0, 2, 7.0 / 29.0).with(0, 3, 5.0 / 29.0).with(0, 4, 10.0 / 29.0);
    let p = build_transition_matrix(&eq(&[1.0, 1.0, 1.0, 1.0, 2.0]), &q, &t).unwrap();
    close(p.matrix().row(0).sum(), 1.0, EXACT);
    close(p.matrix()[(0, 0)], 0.0, EXACT);
}

#[test]
fn feasibility_cases() {
    let t = build_friendship_graph(1).unwrap();
    let pi = eq(&[1.0, 1.0, 1.0]);
    let ok = Weights::new().with(0, 1, 0.3).with(0, 2, 0.3).with(1, 2, 0.3);
    assert!(validate_chain(&pi, &ok, &t).is_feasible());
    let eps = 0.05;
    let over = Weights::new().with(0, 1, 1.0 + eps).with(1, 2, 0.2);
    close(validate_chain(&pi, &over, &t).budget_violation(1).unwrap(), 0.2 + eps, EXACT);
    let mut skew = ok.clone();
    skew.set_directed(0, 1, 0.1);
    assert!(validate_chain(&pi, &skew, &t).has_detailed_balance_violation());
}

#[test]
fn symmetrized_matrix_matches_cubic_roots() {
    let t = build_friendship_graph(1).unwrap();
    let q = Weights::new().with(0, 1, 0.2).with(0, 2, 0.3).with(1, 2, 0.1);
    let uniform = build_transition_matrix(&eq(&[1.0; 3]), &q, &t).unwrap();
    assert!((symmetrize(&uniform).unwrap() - uniform.matrix()).amax() <= EXACT);
    let triangle = build_transition_matrix(&Equilibrium::from_triangle(2.0, 1.0, 1.0).unwrap(), &q, &t).unwrap();
    let s = symmetrize(&triangle).unwrap();
    assert!((&s - s.transpose()).amax() <= EXACT);

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let pi = eq(&[rng.gen_range(0.2..2.0), rng.gen_range(0.2..2.0), rng.gen_range(0.2..2.0)]);
        let cap = |a: usize, b: usize| pi[a].min(pi[b]) / 2.0;
        let q = Weights::new()
            .with(0, 1, rng.gen_range(0.0..1.0) * cap(0, 1))
            .with(0, 2, rng.gen_range(0.0..1.0) * cap(0, 2))
            .with(1, 2, rng.gen_range(0.0..1.0) * cap(1, 2));
        let p = build_transition_matrix(&pi, &q, &t).unwrap();
        let from_s = eigenvalues_symmetric(&symmetrize(&p).unwrap()).unwrap();
        let from_p = cubic_roots(p.matrix());
        assert!(multiset_eq(&from_s, &from_p, 1e-9), "{from_s:?} vs {from_p:?}");
    }
}

#[test]
fn eigensolver_cases() {
    assert_eq!(eigenvalues_symmetric(&DMatrix::identity(3, 3)).unwrap(), vec![1.0; 3]);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0, 2.0]));
    assert_eq!(eigenvalues_symmetric(&d).unwrap(), vec![3.0, 2.0, 1.0]);
    let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 5.0]);
    let got = eigenvalues_symmetric(&a).unwrap();
    for (x, y) in got.iter().zip([5.0, 3.0, 1.0]) {
        close(*x, y, EXACT);
    }
    assert!(multiset_eq(&got, &cubic_roots(&a), EXACT));
}

#[test]
fn slem_cases() {
    let t = build_friendship_graph(1).unwrap();
    let frozen = slem(&eq(&[1.0; 3]), &Weights::new(), &t).unwrap();
    assert_eq!(frozen.slem, 1.0);
    assert!(frozen.mixing_time.is_none());

    let t3 = build_friendship_graph(3).unwrap();
    let mut q = Weights::new();
    for j in 1..=6 {
        q.set(0, j, 10.0 / 13.0);
    }
    let mut pi = vec![10.0];
    pi.extend([1.0; 6]);
    close(slem(&eq(&pi), &q, &t3).unwrap().slem, 3.0 / 13.0, 1e-12);

    // The one-blade example at q12 = 0.5 mixes in one step.
    let sol = solve(&Equilibrium::from_triangle(2.0, 1.0, 1.0).unwrap(), 1, &[0.5], &SolveOptions::default()).unwrap();
    close(sol.slem, 0.0, 1e-12);
    close(slem(&sol.pi, &sol.q_opt, &t).unwrap().slem, 0.0, 1e-9);
}

#[test]
fn star_reduction_cases() {
    let t2 = build_friendship_graph(2).unwrap();
    let pi = eq(&[2.0, 1.0, 1.0, 1.0, 1.0]);
    let mut q = Weights::new();
    for j in 1..=4 {
        q.set(0, j, 0.5);
    }
    let star = reduce_to_star(&pi, &q, &t2).unwrap();
    assert_eq!(star.pi_tilde.values(), &[2.0, 2.0, 2.0]);
    assert_eq!(star.q_tilde, vec![1.0, 1.0]);
    let blocks = block_diagonalize(&pi, &q, &t2).unwrap();
    assert_eq!(blocks.singles, vec![0.5, 0.5]);
    let fine = slem(&pi, &q, &t2).unwrap().eigenvalues;
    assert!(multiset_contains(&fine, &blocks.singles, 1e-12));

    let t3 = build_friendship_graph(3).unwrap();
    let pi = eq(&[1.0; 7]);
    let mut q = Weights::new();
    for j in 1..=6 {
        q.set(0, j, 1.0 / 6.0);
    }
    let star = reduce_to_star(&pi, &q, &t3).unwrap();
    assert_eq!(star.pi_tilde.values(), &[1.0, 2.0, 2.0, 2.0]);
    star.q_tilde.iter().for_each(|x| close(*x, 1.0 / 3.0, EXACT));
    let coarse = slem(&star.pi_tilde, &star.weights(), &star.topology()).unwrap().eigenvalues;
    let fine = slem(&pi, &q, &t3).unwrap().eigenvalues;
    assert!(multiset_contains(&fine, &coarse, 1e-12));
    block_diagonalize(&pi, &q, &t3).unwrap().theta.iter().for_each(|th| close(*th, 2f64.sqrt(), EXACT));

    let pi = eq(&[1.0, 1.0, 1.0]);
    let q = Weights::new().with(0, 1, 0.3).with(0, 2, 0.1);
    let t1 = build_friendship_graph(1).unwrap();
    assert!(matches!(reduce_to_star(&pi, &q, &t1), Err(Error::NotReducible { blade: 1, .. })));
}

#[test]
fn single_eigenvalue_holds_up_to_the_minus_one_boundary() {
    let t2 = build_friendship_graph(2).unwrap();
    let pi = eq(&[2.0, 1.0, 1.0, 1.0, 1.0]);
    // s_bar = 1 - 0.5 - 2 qf reaches -1 at qf = 0.75, past the budget 0.5;
    // sweep the feasible part.
    for k in 0..=10 {
        let qf = 0.05 * k as f64;
        let mut q = Weights::new().with(1, 2, qf).with(3, 4, qf);
        for j in 1..=4 {
            q.set(0, j, 0.5);
        }
        let blocks = block_diagonalize(&pi, &q, &t2).unwrap();
        blocks.singles.iter().for_each(|s| close(*s, 0.5 - 2.0 * qf, EXACT));
        let fine = slem(&pi, &q, &t2).unwrap().eigenvalues;
        assert!(multiset_contains(&fine, &blocks.singles, 1e-12));
    }
}

#[test]
fn interlacing_cases() {
    assert!(check_interlacing(&[2.5, 1.5], &[3.0, 2.0, 1.0]).unwrap().interlaces);
    let r = check_interlacing(&[3.0, 1.0], &[3.0, 2.0, 1.0]).unwrap();
    assert!(r.tight);
    assert_eq!(r.witness_k, Some(1));
}

#[test]
fn regime_cases() {
    let mut pi = vec![10.0];
    pi.extend([1.0; 6]);
    assert_eq!(classify_regime(&eq(&pi), 3, &[0.0; 3]).unwrap().tag, RegimeTag::MGe3Interior);
    assert_eq!(classify_regime(&eq(&[3.0, 1.0, 1.0, 1.0, 3.0]), 2, &[0.0; 2]).unwrap().tag, RegimeTag::M2Regime1);
    let triangle = Equilibrium::from_triangle(2.0, 1.0, 1.0).unwrap();
    let th = m1_thresholds(&triangle);
    close(th.low_middle, 6.0 / 31.0, 1e-9);
    close(th.high, 0.2, EXACT);
    // 0.1 lies below 6/31.
    assert_eq!(classify_regime(&triangle, 1, &[0.1]).unwrap().tag, RegimeTag::M1Low);
    assert_eq!(classify_regime(&triangle, 1, &[0.197]).unwrap().tag, RegimeTag::M1Middle);
}

#[test]
fn three_blade_formulas_against_minimizer() {
    let opts = SolveOptions::default();
    let t3 = build_friendship_graph(3).unwrap();
    let oracle = |pi: &Equilibrium| minimize_slem(pi, &t3, &[0.0; 3], &OracleOptions::with_tol(1e-10)).unwrap().slem;

    let uniform = eq(&[1.0; 7]);
    let sol = solve(&uniform, 3, &[0.0; 3], &opts).unwrap();
    close(sol.slem, 5.0 / 6.0, EXACT);
    (1..=6).for_each(|j| close(sol.q_opt.get(0, j), 1.0 / 6.0, EXACT));
    sol.qf_bounds.iter().for_each(|(_, hi)| close(*hi, 5.0 / 6.0, EXACT));
    close(slem(&uniform, &sol.q_opt, &t3).unwrap().slem, 5.0 / 6.0, 1e-12);
    close(oracle(&uniform), 5.0 / 6.0, 1e-9);
    assert!(sol.kkt_residual <= 1e-8);

    let mut heavy = vec![10.0];
    heavy.extend([1.0; 6]);
    let heavy = eq(&heavy);
    let sol = solve(&heavy, 3, &[0.0; 3], &opts).unwrap();
    close(sol.slem, 3.0 / 13.0, EXACT);
    (1..=6).for_each(|j| close(sol.q_opt.get(0, j), 10.0 / 13.0, EXACT));
    sol.qf_bounds.iter().for_each(|(_, hi)| close(*hi, 3.0 / 13.0, EXACT));
    close(oracle(&heavy), 3.0 / 13.0, 1e-9);

    // Leaf mass exactly twice the center: both branches agree.
    let mut edge = vec![3.0];
    edge.extend([1.0; 6]);
    let sol = solve(&eq(&edge), 3, &[0.0; 3], &opts).unwrap();
    close(sol.slem, 0.5, EXACT);
    (1..=6).for_each(|j| close(sol.q_opt.get(0, j), 0.5, EXACT));
}

#[test]
fn two_blade_examples() {
    let opts = SolveOptions::default();
    let heavy = solve(&eq(&[3.0, 1.0, 1.0, 1.0, 3.0]), 2, &[0.0, 0.1], &opts).unwrap();
    close(heavy.slem, (8.0f64 / 35.0).sqrt(), EXACT);
    close(heavy.qf_bounds[1].0, 3.0 / 7.0 - 3.0 / 70f64.sqrt(), 1e-12);
    assert_eq!(heavy.qf_bounds[0].0, 0.0);

    let pi = eq(&[1.0, 1.0, 1.0, 1.0, 2.0]);
    let e2 = solve(&pi, 2, &[0.0, 0.1], &opts).unwrap();
    assert_eq!(e2.source, Source::ClosedForm);
    close(e2.slem, 23.0 / 29.0, EXACT);
    for (j, w) in [(1, 7.0), (2, 7.0), (3, 5.0), (4, 10.0)] {
        close(e2.q_opt.get(0, j), w / 29.0, EXACT);
    }
    close(e2.qf_bounds[1].0, 2.0 / 87.0, EXACT);
    let oracle = minimize_slem(&pi, &e2.topology(), &[0.0, 0.1], &OracleOptions::with_tol(1e-10)).unwrap();
    close(oracle.slem, 23.0 / 29.0, 1e-9);

    let balanced = eq(&[1.0, 0.5, 1.5, 1.2, 0.8]);
    let sol = solve(&balanced, 2, &[0.0, 0.0], &opts).unwrap();
    assert!(sol.qf_bounds.iter().all(|(lo, _)| *lo == 0.0));
    assert!(trace_frontier(&balanced, 2, 20).unwrap().collapsed);
}

#[test]
fn one_blade_examples() {
    let opts = SolveOptions::default();
    let t = build_friendship_graph(1).unwrap();
    let pi = Equilibrium::from_triangle(2.0, 1.0, 1.0).unwrap();
    close(solve(&pi, 1, &[0.3], &opts).unwrap().slem, 0.4 / 3f64.sqrt(), EXACT);
    close(solve(&pi, 1, &[0.1], &opts).unwrap().slem, 5.4 / 11.0, EXACT);
    let at = 6.0 / 31.0;
    close((7.0 - 16.0 * at) / 11.0, 11.0 / 31.0, EXACT);
    close((18.0 * at * at - 8.0 * at + 1.0).sqrt(), 11.0 / 31.0, EXACT);
    close(solve(&pi, 1, &[at], &opts).unwrap().slem, 11.0 / 31.0, 1e-9);

    let equal = Equilibrium::from_triangle(2.0, 2.0, 1.0).unwrap();
    let sol = solve(&equal, 1, &[0.3], &opts).unwrap();
    close(sol.slem, 0.45, EXACT);
    close(sol.q_opt.get(0, 1), 0.5, EXACT);
    close(sol.q_opt.get(0, 2), 0.5, EXACT);
    close(minimize_slem(&equal, &t, &[0.3], &OracleOptions::with_tol(1e-10)).unwrap().slem, 0.45, 1e-9);
}

#[test]
fn optimality_residual_cases() {
    let uniform = eq(&[1.0; 7]);
    let sol = solve(&uniform, 3, &[0.0; 3], &SolveOptions::default()).unwrap();
    assert!(kkt_residual(&uniform, &sol.q_opt, sol.slem) <= 1e-8);

    let mut heavy = vec![10.0];
    heavy.extend([1.0; 6]);
    let heavy = eq(&heavy);
    let t3 = build_friendship_graph(3).unwrap();
    let sol = solve(&heavy, 3, &[0.0; 3], &SolveOptions::default()).unwrap();
    let mut bumped = sol.q_opt.clone();
    bumped.set(0, 1, sol.q_opt.get(0, 1) + 0.01);
    let s = slem(&heavy, &bumped, &t3).unwrap().slem;
    assert!(s > sol.slem || kkt_residual(&heavy, &bumped, s) > 0.0);

    let frozen = eq(&[1.0; 3]);
    assert!(kkt_residual(&frozen, &Weights::new(), 1.0) > 0.0);
}

#[test]
fn minimizer_calibration_cases() {
    let opts = OracleOptions::default();
    let t3 = build_friendship_graph(3).unwrap();
    close(minimize_slem(&eq(&[1.0; 7]), &t3, &[0.0; 3], &opts).unwrap().slem, 5.0 / 6.0, 1e-6);
    let t2 = build_friendship_graph(2).unwrap();
    close(minimize_slem(&eq(&[3.0, 1.0, 1.0, 1.0, 3.0]), &t2, &[0.0; 2], &opts).unwrap().slem, 0.5, 1e-6);
    close(minimize_slem(&eq(&[1.0, 1.0, 1.0, 1.0, 2.0]), &t2, &[0.0; 2], &opts).unwrap().slem, 0.8, 1e-6);
}

#[test]
fn grid_search_cases() {
    let t = build_friendship_graph(1).unwrap();
    let pi = Equilibrium::from_triangle(2.0, 1.0, 1.0).unwrap();
    let middle = |q: f64| (18.0 * q * q - 8.0 * q + 1.0).sqrt();
    // 0.19 is below the low/middle switch at 6/31, so the low line holds there.
    close(brute_force_grid(&pi, &t, &[0.19], 400).unwrap().slem, (7.0 - 16.0 * 0.19) / 11.0, 2e-4);
    close(brute_force_grid(&pi, &t, &[0.197], 400).unwrap().slem, middle(0.197), 2e-4);

    let center_heavy = Equilibrium::from_triangle(1.0, 1.0, 2.0).unwrap();
    close(brute_force_grid(&center_heavy, &t, &[0.0], 50).unwrap().slem, 1.0 / 3.0, 1e-9);

    let coarse = grid_value(&pi, &t, &[0.1], 20).unwrap();
    let fine = grid_value(&pi, &t, &[0.1], 40).unwrap();
    assert!(fine <= coarse);
}

#[test]
fn comparison_cases() {
    let pi = eq(&[1.0, 1.0, 1.0, 1.0, 2.0]);
    let qf = [0.0, 0.1];
    let closed = solve(&pi, 2, &qf, &SolveOptions::default()).unwrap();
    let oracle = minimize_slem(&pi, &closed.topology(), &qf, &OracleOptions::default()).unwrap();
    assert!(compare(&closed, &oracle, 1e-4).pass);

    // Above the three-blade interval the answer comes from the minimizer.
    let uniform = eq(&[1.0; 7]);
    let above = solve(&uniform, 3, &[0.95, 0.0, 0.0], &SolveOptions::default()).unwrap();
    assert!(!above.within_bounds);
    let oracle = minimize_slem(&uniform, &above.topology(), &[0.95, 0.0, 0.0], &OracleOptions::with_tol(1e-8)).unwrap();
    assert!(compare(&above, &oracle, 1e-4).pass);

    let mut wrong = closed.clone();
    let (a, b) = (wrong.q_opt.get(0, 1), wrong.q_opt.get(0, 4));
    wrong.q_opt.set(0, 1, b);
    wrong.q_opt.set(0, 4, a);
    let report =
        compare(&wrong, &minimize_slem(&pi, &closed.topology(), &qf, &OracleOptions::default()).unwrap(), 1e-4);
    assert!(!report.pass && report.delta_slem > 0.0);
}

#[test]
fn frontier_cases() {
    let uniform = eq(&[1.0; 7]);
    let f = trace_frontier(&uniform, 3, 50).unwrap();
    assert!(f.collapsed);
    assert_eq!(f.points.len(), 1);
    assert_eq!(f.points[0].qf, vec![0.0; 3]);

    let center_heavy = Equilibrium::from_triangle(1.0, 1.0, 2.0).unwrap();
    let segs = frontier_curve_m1(&center_heavy).unwrap();
    assert_eq!(segs.len(), 1);
    close(segs[0].lo, 0.0, EXACT);
    close(segs[0].hi, 0.25, EXACT);
    assert!(matches!(segs[0].shape, SegmentShape::Linear { slope, .. } if slope < 0.0));

    let segs = frontier_curve_m1(&Equilibrium::from_triangle(2.0, 1.0, 1.0).unwrap()).unwrap();
    assert_eq!(
        segs.iter().map(|s| s.regime).collect::<Vec<_>>(),
        vec![RegimeTag::M1Low, RegimeTag::M1Middle, RegimeTag::M1High]
    );

    let equal = Equilibrium::from_triangle(2.0, 2.0, 1.0).unwrap();
    let t = build_friendship_graph(1).unwrap();
    let low = frontier_curve_m1(&equal).unwrap()[0];
    for k in 0..=5 {
        let q = 0.1 * k as f64;
        if q <= low.hi {
            let expected = (4.0 - 1.0 - 4.0 * q) / 4.0;
            close(low.eval(&equal, q, &SolveOptions::default()).unwrap(), expected, EXACT);
            close(minimize_slem(&equal, &t, &[q], &OracleOptions::with_tol(1e-10)).unwrap().slem, expected, 1e-9);
        }
    }

    // Heavy center: only the second blade trades, up to its lower limit.
    let heavy = eq(&[3.0, 1.0, 1.0, 1.0, 3.0]);
    let f = trace_frontier(&heavy, 2, 40).unwrap();
    assert!(f.points.iter().all(|p| p.qf[0] == 0.0));
    let top = f.points.iter().map(|p| p.qf[1]).fold(0.0, f64::max);
    close(top, 3.0 / 7.0 - 3.0 / 70f64.sqrt(), 1e-12);
}

#[test]
fn filter_cases() {
    let pi = Equilibrium::from_triangle(2.0, 1.0, 1.0).unwrap();
    let regime = classify_regime(&pi, 1, &[0.0]).unwrap();
    let pt = |s: f64, q: f64| ParetoPoint::new(&pi, vec![q], s, regime);
    let kept = non_dominated_filter(&[pt(0.5, 0.0), pt(0.5, 0.1)]);
    assert_eq!(kept.len(), 1);
    assert_eq!(kept[0].qf, vec![0.0]);
    assert_eq!(non_dominated_filter(&[pt(0.4, 0.2), pt(0.5, 0.1)]).len(), 2);
    assert_eq!(non_dominated_filter(&[pt(0.4, 0.2), pt(0.4, 0.2)]).len(), 1);
}

#[test]
fn mixing_cases() {
    let t3 = build_friendship_graph(3).unwrap();
    let uniform = eq(&[1.0; 7]);
    let sol = solve(&uniform, 3, &[0.0; 3], &SolveOptions::default()).unwrap();
    let p = build_transition_matrix(&uniform, &sol.q_opt, &t3).unwrap();
    let still = evolve(&p, &uniform.normalized(), 100).unwrap();
    assert!(still.tv_distances.iter().all(|d| *d <= 1e-12));
    assert_eq!(still.fitted_rate, 0.0);
    let r = fitted_vs_slem(&uniform, &sol.q_opt, 500).unwrap();
    assert!(r.fitted_rate >= 5.0 / 6.0 * 0.98 && r.fitted_rate <= 5.0 / 6.0 * 1.02);

    let frozen = build_transition_matrix(&eq(&[1.0; 3]), &Weights::new(), &Topology::friendship(1).unwrap()).unwrap();
    let t = evolve(&frozen, &[1.0, 0.0, 0.0], 50).unwrap();
    assert_eq!(t.fitted_rate, 1.0);
    assert!(t.non_mixing);

    let triangle = Equilibrium::from_triangle(2.0, 1.0, 1.0).unwrap();
    let sol = solve(&triangle, 1, &[0.3], &SolveOptions::default()).unwrap();
    assert!(fitted_vs_slem(&triangle, &sol.q_opt, 2000).unwrap().relative_gap <= 0.02);
    let e2 = eq(&[1.0, 1.0, 1.0, 1.0, 2.0]);
    let sol = solve(&e2, 2, &[0.0, 0.1], &SolveOptions::default()).unwrap();
    assert!(fitted_vs_slem(&e2, &sol.q_opt, 2000).unwrap().relative_gap <= 0.02);
    let slow = fitted_vs_slem(&e2, &sol.q_opt.scaled(0.5), 2000).unwrap();
    assert!(slow.fitted_rate > sol.slem);
}
