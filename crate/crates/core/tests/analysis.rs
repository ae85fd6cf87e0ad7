use std::sync::Arc;

use afem_core::analysis::{
    check_criterion, complexity_from_series, fit_rate_loglog, fit_rlinear, random_criterion_instance,
    rates_equals_complexity, reduction_check, rlinear_constants_from_criterion, rlinear_from_tailsum, rlinear_ratio,
    tail_sum_constant, tailsum_from_rlinear, threshold_helpers, verify_axioms, Q_RED,
};
use afem_core::driver::{run_single, RunConfig, StopRule};
use afem_core::estimator::{compute_indicators, Indicators};
use afem_core::fem::{solve_galerkin_exact, ProblemDef, Space};
use afem_core::marking::doerfler_mark;
use afem_core::problems;
use afem_core::AfemError;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

/// Worst `a_n / (C q^{n-m} a_m)` over all pairs `m <= n`, computed directly.
fn all_pairs(a: &[f64], c: f64, q: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for m in 0..a.len() {
        for n in m..a.len() {
            if a[m] > 0.0 {
                worst = worst.max(a[n] / (c * q.powi((n - m) as i32) * a[m]));
            } else if a[n] > 0.0 {
                return f64::INFINITY;
            }
        }
    }
    worst
}

/// Worst truncated tail sum of `a^m` relative to `bound * a_l^m`.
fn worst_tail(a: &[f64], m: f64, bound: f64) -> f64 {
    (0..a.len())
        .filter(|&l| a[l] > 0.0)
        .map(|l| a[l + 1..].iter().map(|x| x.powf(m)).sum::<f64>() / (bound * a[l].powf(m)))
        .fold(0.0, f64::max)
}

fn geometric(q: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| q.powi(i as i32)).collect()
}

#[test]
fn geometric_sequence_without_perturbation() {
    let a = geometric(0.5, 60);
    let b = vec![0.0; 60];
    let r = rlinear_constants_from_criterion(&a, &b, 0.5, 1.0, 1.0, 1.0).unwrap();
    assert!(r.fit.holds());
    assert!(r.fit.q_lin >= 0.5 && r.fit.q_lin < 1.0);
    assert!(all_pairs(&a, r.fit.c_lin, r.fit.q_lin) <= 1.0 + 1e-12);
    assert!(r.kappa < 1.0 && r.q0 <= 0.5);
}

#[test]
fn perturbed_geometric_pair() {
    let n = 200;
    let mut a = vec![1.0];
    for l in 0..n - 1 {
        a.push(0.5 * a[l] + 0.1 * a[l]);
    }
    let b: Vec<f64> = a.iter().map(|x| 0.1 * x).collect();
    // b_{l+N} <= 0.1 a_l and sum_N b^2 <= 0.01 a_l^2 / (1 - 0.36)
    let (c1, c2) = (0.1, 0.01 / 0.64);
    check_criterion(&a, &b, 0.5, c1, c2, 1.0).unwrap();
    let r = rlinear_constants_from_criterion(&a, &b, 0.5, c1, c2, 1.0).unwrap();
    assert!(r.fit.holds());
    assert!(all_pairs(&a, r.fit.c_lin, r.fit.q_lin) <= 1.0 + 1e-12);
    assert!((r.c3 - (1.0 + c1 / 0.5)).abs() <= 1e-15);
    assert!((r.c_lin_squared - r.fit.c_lin * r.fit.c_lin).abs() <= 1e-12 * r.c_lin_squared);
}

#[test]
fn failed_hypotheses_name_the_index() {
    let err = check_criterion(&[1.0, 0.4, 0.9], &[0.0; 3], 0.5, 1.0, 1.0, 0.5).unwrap_err();
    assert!(matches!(err, AfemError::Hypothesis(_)));
    assert!(err.to_string().contains("a[2]"), "{err}");
    // b_2 = 2 exceeds C1 a_0 = 1
    let err = check_criterion(&[1.0, 1.0, 1.0], &[0.1, 0.1, 2.0], 0.9, 1.0, 100.0, 0.5).unwrap_err();
    assert!(err.to_string().contains("b[2]"), "{err}");
    assert!(check_criterion(&[1.0], &[0.0, 0.0], 0.5, 1.0, 1.0, 0.5).is_err());
    assert!(check_criterion(&[1.0], &[0.0], 1.0, 1.0, 1.0, 0.5).is_err());
    assert!(check_criterion(&[1.0], &[0.0], 0.5, 1.0, 1.0, 0.0).is_err());
}

#[test]
fn random_instances_satisfy_the_constructive_bound() {
    let mut rng = StdRng::seed_from_u64(2024);
    for i in 0..500 {
        let inst = random_criterion_instance(&mut rng);
        let r = rlinear_constants_from_criterion(&inst.a, &inst.b, inst.q, inst.c1, inst.c2, inst.delta)
            .unwrap_or_else(|e| panic!("instance {i}: {e}"));
        let worst = all_pairs(&inst.a, r.fit.c_lin, r.fit.q_lin);
        assert!(worst <= 1.0 + 1e-9, "instance {i}: {worst}");
        assert!((worst - r.fit.max_violation).abs() <= 1e-9 * worst.max(1.0));
    }
}

#[test]
fn ratio_handles_zeros_and_matches_the_pairwise_oracle() {
    let a = [3.0, 1.0, 2.0, 0.5, 0.4];
    for q in [0.3, 0.7, 0.95] {
        assert!((rlinear_ratio(&a, q) - all_pairs(&a, 1.0, q)).abs() <= 1e-12 * all_pairs(&a, 1.0, q));
    }
    assert_eq!(rlinear_ratio(&[0.0, 2.0, 1.0], 0.5), 1.0);
    assert_eq!(rlinear_ratio(&[2.0, 0.0, 1.0], 0.5), f64::INFINITY);
    assert_eq!(rlinear_ratio(&[], 0.5), 0.0);
}

#[test]
fn least_squares_fit_recovers_a_geometric_rate() {
    let a: Vec<f64> = geometric(0.8, 40).iter().map(|x| 3.0 * x).collect();
    let fit = fit_rlinear(&a).unwrap();
    assert!((fit.q_lin - 0.8).abs() <= 1e-12);
    assert!((fit.c_lin - 1.0).abs() <= 1e-9 && fit.holds());
    assert!(fit_rlinear(&[1.0, 0.0]).is_err());
}

#[test]
fn tail_sum_of_a_geometric_sequence() {
    // sum_{k >= 1} 2^{-k} = 1 up to truncation
    let a = geometric(0.5, 60);
    let (c, fit) = rlinear_from_tailsum(&a, 1.0).unwrap();
    assert!((c - 1.0).abs() <= 1e-12);
    assert!((fit.c_lin - 2.0).abs() <= 1e-12 && (fit.q_lin - 0.5).abs() <= 1e-12);
    assert!(fit.holds());
}

#[test]
fn tail_sum_of_finite_support() {
    assert_eq!(tail_sum_constant(&[1.0, 0.0, 0.0], 1.0), 0.0);
    let (c, fit) = rlinear_from_tailsum(&[5.0, 0.0, 0.0], 2.0).unwrap();
    assert_eq!(c, 0.0);
    assert_eq!(fit.q_lin, 0.0);
    assert!(fit.holds());
    assert_eq!(tail_sum_constant(&[0.0, 0.0], 1.0), 0.0);
    assert!(rlinear_from_tailsum(&[1.0], 0.0).is_err());
}

#[test]
fn higher_power_equals_unit_power_of_the_powered_sequence() {
    let a = [1.0, 0.7, 0.6, 0.2, 0.15, 0.01];
    let sq: Vec<f64> = a.iter().map(|x| x * x).collect();
    assert!((tail_sum_constant(&a, 2.0) - tail_sum_constant(&sq, 1.0)).abs() <= 1e-14);
}

#[test]
fn round_trip_through_rlinear_constants() {
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..50 {
        let a: Vec<f64> = (0..80).scan(1.0, |x, _| {
            *x *= rng.random_range(0.3..0.95);
            Some(*x)
        })
        .collect();
        for m in [1.0, 2.0, 0.5] {
            let (c, fit) = rlinear_from_tailsum(&a, m).unwrap();
            assert!(fit.holds());
            assert!(all_pairs(&a, fit.c_lin, fit.q_lin) <= 1.0 + 1e-9);
            let (bound, observed) = tailsum_from_rlinear(&a, fit.c_lin, fit.q_lin, m).unwrap();
            assert!(bound >= c * (1.0 - 1e-12), "{bound} < {c}");
            assert!(observed <= 1.0 + 1e-12);
            assert!((worst_tail(&a, m, bound) - observed).abs() <= 1e-9);
        }
    }
    assert!(tailsum_from_rlinear(&[1.0], 1.0, 1.0, 1.0).is_err());
}

#[test]
fn loglog_fits() {
    let x: Vec<f64> = (1..=30).map(|i| 10.0 * 1.5f64.powi(i)).collect();
    let y: Vec<f64> = x.iter().map(|v| v.powf(-0.5)).collect();
    assert!((fit_rate_loglog(&x, &y, 0.5).unwrap() + 0.5).abs() <= 1e-12);
    let y: Vec<f64> = x.iter().map(|v| 7.0 / v).collect();
    assert!((fit_rate_loglog(&x, &y, 1.0).unwrap() + 1.0).abs() <= 1e-12);

    let mut rng = StdRng::seed_from_u64(5);
    let noisy: Vec<f64> = x.iter().map(|v| v.powf(-0.5) * (1.0 + rng.random_range(-0.05..0.05))).collect();
    assert!((fit_rate_loglog(&x, &noisy, 1.0).unwrap() + 0.5).abs() <= 0.05);

    assert!(fit_rate_loglog(&x[..2], &y[..2], 1.0).is_err());
    assert!(fit_rate_loglog(&x, &y[..5], 1.0).is_err());
    assert!(fit_rate_loglog(&x, &y, 0.0).is_err());
    let mut bad = y.clone();
    bad[3] = 0.0;
    assert!(fit_rate_loglog(&x, &bad, 1.0).is_err());
}

/// `#T_r = 10 * 2^r` with `H_r = (#T_r)^{-1/2}`.
fn optimal_series(n: usize) -> (Vec<f64>, Vec<f64>) {
    let t: Vec<f64> = (0..n).map(|r| 10.0 * 2f64.powi(r as i32)).collect();
    let h = t.iter().map(|x| x.powf(-0.5)).collect();
    (t, h)
}

#[test]
fn complexity_of_a_single_record() {
    let c = complexity_from_series(&[12.0], &[0.4], 0.5).unwrap();
    assert_eq!(c.ratio, 1.0);
    assert!((c.m_dofs - 12f64.sqrt() * 0.4).abs() <= 1e-15);
    assert!(complexity_from_series(&[12.0], &[0.4], -1.0).is_err());
    assert!(complexity_from_series(&[], &[], 0.5).is_err());
}

#[test]
fn rates_with_respect_to_cost_on_a_geometric_series() {
    let (t, h) = optimal_series(20);
    let c = complexity_from_series(&t, &h, 0.5).unwrap();
    // cost_r = 10 (2^{r+1} - 1) < 2 #T_r
    assert!((c.m_dofs - 1.0).abs() <= 1e-12);
    assert!(c.m_cost <= 2f64.sqrt() * c.m_dofs);
    assert!(c.m_dofs <= c.m_cost);
    assert!((c.fit.q_lin - 0.5f64.sqrt()).abs() <= 1e-12);
    assert!((c.c_cost - 2.0).abs() <= 1e-9);
    assert!(c.ratio <= c.c_cost);
    assert!((c.growth - 2.0).abs() <= 1e-15 && (c.s0 - 0.5).abs() <= 1e-12);

    // faster than s0 the suprema keep growing
    let short = complexity_from_series(&t[..10], &h[..10], 0.75).unwrap();
    let long = complexity_from_series(&t, &h, 0.75).unwrap();
    assert!(long.m_dofs > 2.0 * short.m_dofs && long.m_cost > 2.0 * short.m_cost);
}

#[test]
fn threshold_examples() {
    let t = threshold_helpers(0.5, 1.0, 1.0, 0.0, 0.25);
    assert_eq!(t.theta_star, 0.5);
    assert_eq!(t.lambda_star, 1.0);
    // (2 * 1 * 0.25 + 0) / 1
    assert_eq!(t.c_alg, 0.5);
    assert_eq!(t.lambda_sym_star, 1.0);
    let t = threshold_helpers(0.9, 2.0, 1.0, 0.5, 0.1);
    assert!((t.theta_star - 0.2).abs() <= 1e-15);
    assert!((t.lambda_star - 0.1 / 1.8).abs() <= 1e-15);
    assert!((t.c_alg - (1.8 + 0.5) / 0.5).abs() <= 1e-12);
    assert!((t.lambda_sym_star - 1.0 / (2.0 * 4.6)).abs() <= 1e-12);
}

fn refined_pair() -> (Indicators, Indicators, Arc<Space>) {
    let (prob, m) = problems::kellogg();
    let coarse = Arc::new(Space::new(Arc::new(m.uniform_refine()), 1));
    let u = solve_galerkin_exact(&coarse, &prob).unwrap();
    let ind = compute_indicators(&coarse, &u, &prob).unwrap();
    let fine = Arc::new(Space::new(Arc::new(coarse.mesh().refine(doerfler_mark(&ind, 0.5).unwrap().elements()).unwrap()), 1));
    let v = afem_core::fem::prolongate(&u, &fine).unwrap();
    (ind, compute_indicators(&fine, &v, &prob).unwrap(), fine)
}

#[test]
fn reduction_check_detects_inflated_indicators() {
    let (coarse, fine, space) = refined_pair();
    let lineage = space.mesh().lineage().unwrap();
    let (r, holds) = reduction_check(&coarse, &fine, lineage).unwrap();
    assert!(holds && r <= Q_RED * (1.0 + 1e-10), "{r}");
    let inflated = Indicators::new(fine.per_element().iter().map(|x| 4.0 * x).collect()).unwrap();
    let (r, holds) = reduction_check(&coarse, &inflated, lineage).unwrap();
    assert!(!holds && r > Q_RED);
    assert!(reduction_check(&fine, &coarse, lineage).is_err());
}

#[test]
fn axioms_on_a_small_verification_run() {
    let (prob, m) = problems::kellogg();
    let cfg = RunConfig {
        verification: true,
        stop: StopRule { max_dofs: 400, ..StopRule::default() },
        ..RunConfig::default()
    };
    let h = run_single(&prob, &m, &cfg).unwrap();
    let r = verify_axioms(&prob, &h, cfg.theta, 1).unwrap();
    assert_eq!(r.levels, h.n_levels());
    assert!(r.reduction_holds);
    assert_eq!(r.reduction_ratios.len(), r.levels - 1);
    assert!(r.orthogonality_max <= 1.05, "{}", r.orthogonality_max);
    assert!(r.stability_max.is_finite() && r.stability_max > 0.0);
    assert!(r.reliability_max.unwrap() > 0.0);
    assert!(r.pythagoras_max_residual.unwrap() <= 1e-8);
    let c = rates_equals_complexity(&h, 0.5).unwrap();
    assert!(c.m_dofs <= c.m_cost && c.ratio >= 1.0 && c.ratio.is_finite());
    assert!(rates_equals_complexity(&h, 0.0).is_err());
    // same seed, same report
    let again = verify_axioms(&prob, &h, cfg.theta, 1).unwrap();
    assert_eq!(again.stability_max, r.stability_max);
}

#[test]
fn axioms_with_zero_data_are_vacuous() {
    let (_, m) = problems::kellogg();
    let prob = ProblemDef::poisson("zero", None);
    let cfg = RunConfig { verification: true, ..RunConfig::default() };
    let h = run_single(&prob, &m, &cfg).unwrap();
    let r = verify_axioms(&prob, &h, cfg.theta, 0).unwrap();
    assert!(r.reduction_holds);
    assert_eq!(r.quasi_monotonicity_max, 0.0);
    assert_eq!(r.orthogonality_max, 0.0);
    assert!(r.reliability_max.is_none());
    if h.records.len() == 1 {
        assert_eq!(rates_equals_complexity(&h, 0.5).unwrap().ratio, 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ratio_agrees_with_the_pairwise_oracle(a in prop::collection::vec(0.001f64..10.0, 1..40), q in 0.05f64..0.99) {
        let fast = rlinear_ratio(&a, q);
        let slow = all_pairs(&a, 1.0, q);
        prop_assert!((fast - slow).abs() <= 1e-9 * slow);
    }

    #[test]
    fn tail_sum_bound_from_fit(a in prop::collection::vec(0.001f64..10.0, 2..40), m in 0.5f64..3.0) {
        // the best R-linear constants always give a valid tail sum bound
        let fit = fit_rlinear(&a).unwrap();
        prop_assume!(fit.q_lin < 1.0);
        let (bound, observed) = tailsum_from_rlinear(&a, fit.c_lin, fit.q_lin, m).unwrap();
        prop_assert!(observed <= 1.0 + 1e-9);
        prop_assert!((worst_tail(&a, m, bound) - observed).abs() <= 1e-9 * observed.max(1.0));
    }
}
