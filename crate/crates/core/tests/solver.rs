mod common;

use approx::assert_abs_diff_eq;
use common::{brute_force_qp, random_psd, rng};
use lmkad::solver::{compute_rho, kkt_violation, solve_dual, solve_dual_from};
use lmkad::{DualProblem, RhoRule, SolverOptions};
use ndarray::{array, Array1, Array2};
use proptest::prelude::*;

#[test]
fn matches_brute_force_on_random_instances() {
    let mut r = rng(11);
    for case in 0..30 {
        let n = 4 + case % 5;
        let q = random_psd(&mut r, n);
        for nu in [0.3, 0.5, 1.0] {
            let problem = DualProblem::new(q.clone(), nu).unwrap();
            let sol = solve_dual(&problem, &SolverOptions::default()).unwrap();
            let (oracle, _) = brute_force_qp(q.view(), problem.upper_bound());
            assert!(sol.converged);
            assert_abs_diff_eq!(sol.objective, oracle, epsilon = 1e-6);
        }
    }
}

#[test]
fn worked_examples() {
    let k = 0.3;
    let p = DualProblem::new(array![[1.0, k], [k, 1.0]], 1.0).unwrap();
    let sol = solve_dual(&p, &SolverOptions::default()).unwrap();
    for a in &sol.alpha {
        assert_abs_diff_eq!(*a, 0.5, epsilon = 1e-12);
    }
    assert_abs_diff_eq!(sol.objective, (1.0 + k) / 4.0, epsilon = 1e-12);
    assert_abs_diff_eq!(sol.rho, 0.5 * (1.0 + k), epsilon = 1e-12);
    assert_abs_diff_eq!(kkt_violation(sol.alpha.view(), p.q(), 1.0), 0.0, epsilon = 1e-12);

    let p = DualProblem::new(Array2::eye(3), 1.0).unwrap();
    let sol = solve_dual(&p, &SolverOptions::default()).unwrap();
    assert_abs_diff_eq!(sol.objective, 1.0 / 6.0, epsilon = 1e-12);
    assert_abs_diff_eq!(sol.rho, 1.0 / 3.0, epsilon = 1e-12);
}

#[test]
fn kkt_violation_at_a_vertex() {
    let q = Array2::eye(3);
    assert_eq!(kkt_violation(array![1.0, 0.0, 0.0].view(), q.view(), 1.0), 1.0);
}

#[test]
fn rho_rules() {
    let q = Array2::eye(4);
    let alpha = Array1::from_elem(4, 0.25);
    assert_abs_diff_eq!(compute_rho(alpha.view(), q.view(), 1.0, RhoRule::MarginMean).unwrap(), 0.25);
    let q = array![[2.0, 0.0], [0.0, 1.0]];
    let alpha = array![1.0, 0.0];
    // Only sample 0 is a support vector and it sits at the bound.
    assert_eq!(compute_rho(alpha.view(), q.view(), 1.0, RhoRule::MarginMean).unwrap(), 2.0);
    assert_eq!(compute_rho(alpha.view(), q.view(), 1.0, RhoRule::MeanAllTrain).unwrap(), 1.0);
}

#[test]
fn rejects_bad_problems() {
    let q = Array2::eye(4);
    assert!(DualProblem::new(q.clone(), 0.0).is_err());
    assert!(DualProblem::new(q.clone(), 0.2).unwrap_err().to_string().contains("infeasible nu"));
    assert!(DualProblem::new(q.clone(), 1.5).is_err());
    assert!(DualProblem::new(array![[1.0, 0.5], [0.0, 1.0]], 1.0).is_err());
    assert!(DualProblem::new(array![[-1.0, 0.0], [0.0, 1.0]], 1.0).is_err());
    assert!(DualProblem::new(Array2::zeros((2, 3)), 1.0).is_err());
}

#[test]
fn objective_never_increases_and_ends_within_tolerance() {
    let mut r = rng(5);
    for _ in 0..10 {
        let q = random_psd(&mut r, 12);
        let p = DualProblem::new(q, 0.25).unwrap();
        let opts = SolverOptions {
            record_trace: true,
            ..Default::default()
        };
        let sol = solve_dual(&p, &opts).unwrap();
        for w in sol.trace.windows(2) {
            assert!(w[1].objective <= w[0].objective + 1e-14);
        }
        assert!(sol.converged);
        assert!(kkt_violation(sol.alpha.view(), p.q(), p.upper_bound()) <= opts.tol);
    }
}

#[test]
fn margin_support_vectors_sit_on_the_boundary() {
    let mut r = rng(8);
    let q = random_psd(&mut r, 10);
    let p = DualProblem::new(q, 0.3).unwrap();
    let sol = solve_dual(&p, &SolverOptions::default()).unwrap();
    let f = sol.training_decisions();
    assert!(!sol.margin_indices.is_empty());
    for &i in &sol.margin_indices {
        assert!(f[i].abs() <= 10.0 * 1e-6, "f = {}", f[i]);
    }
}

#[test]
fn warm_start_agrees_with_cold_start() {
    let mut r = rng(21);
    for _ in 0..10 {
        let q = random_psd(&mut r, 9);
        let p = DualProblem::new(q, 0.4).unwrap();
        let opts = SolverOptions::default();
        let cold = solve_dual(&p, &opts).unwrap();
        let start = common::random_simplex(&mut r, 9);
        let warm = solve_dual_from(&p, &opts, Some(start.view())).unwrap();
        assert!((warm.objective - cold.objective).abs() <= 10.0 * opts.tol);
    }
}

#[test]
fn iteration_cap_is_a_soft_failure() {
    let mut r = rng(2);
    let p = DualProblem::new(random_psd(&mut r, 10), 0.3).unwrap();
    let sol = solve_dual(
        &p,
        &SolverOptions {
            max_iter: Some(2),
            ..Default::default()
        },
    )
    .unwrap();
    assert!(!sol.converged);
    assert!(sol.iterations <= 2);
    assert_abs_diff_eq!(sol.alpha.sum(), 1.0, epsilon = 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn solution_is_feasible_and_optimal(seed in any::<u64>(), n in 2usize..12, nu_pct in 1u32..=100) {
        let mut r = rng(seed);
        let q = random_psd(&mut r, n);
        let nu = (nu_pct as f64 / 100.0).max(1.0 / n as f64);
        let p = DualProblem::new(q, nu).unwrap();
        let opts = SolverOptions::default();
        let sol = solve_dual(&p, &opts).unwrap();
        let c = p.upper_bound();
        prop_assert!((sol.alpha.sum() - 1.0).abs() <= 1e-8);
        prop_assert!(sol.alpha.iter().all(|&a| (0.0..=c + 1e-10).contains(&a)));
        prop_assert!(sol.converged);
        prop_assert!(kkt_violation(sol.alpha.view(), p.q(), c) <= opts.tol);
        // nu-property on the multipliers: at least nu N of them are nonzero.
        prop_assert!(sol.support_indices.len() as f64 >= nu * n as f64 - 1e-9);
    }

    #[test]
    fn scaling_q_scales_only_the_objective(seed in any::<u64>(), n in 2usize..10, scale in 0.01f64..100.0) {
        let mut r = rng(seed);
        let q = random_psd(&mut r, n);
        let nu = 0.5f64.max(1.0 / n as f64);
        let opts = SolverOptions { tol: 1e-10, ..Default::default() };
        let base = solve_dual(&DualProblem::new(q.clone(), nu).unwrap(), &opts).unwrap();
        let scaled = solve_dual(&DualProblem::new(q * scale, nu).unwrap(), &opts).unwrap();
        prop_assert!((scaled.objective - scale * base.objective).abs() <= 1e-8 * scale.max(1.0));
        for (a, b) in base.alpha.iter().zip(scaled.alpha.iter()) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
    }

    #[test]
    fn deterministic(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = DualProblem::new(random_psd(&mut r, 7), 0.4).unwrap();
        let a = solve_dual(&p, &SolverOptions::default()).unwrap();
        let b = solve_dual(&p, &SolverOptions::default()).unwrap();
        prop_assert_eq!(a.alpha, b.alpha);
        prop_assert_eq!(a.rho.to_bits(), b.rho.to_bits());
    }
}
