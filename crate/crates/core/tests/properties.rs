mod common;

use common::{random_psd, random_spec, rng, v};
use online_lqr::estimator::EstimatorState;
use online_lqr::linalg::{bilinear, max_abs_asymmetry, min_eigenvalue, Mat, Vector};
use online_lqr::model::{NoiseModel, OutputFeedbackSpec, ProblemSpec, ScenarioFile};
use online_lqr::policies::{evaluate, u_offline, u_online, KalmanState, PolicyInput, PolicyKind};
use online_lqr::regret::{regret_case_analytic, regret_online_analytic};
use online_lqr::riccati::solve_recursions;
use online_lqr::sim::{format_sig, recost, simulate, Setting};
use proptest::prelude::*;
use rand::Rng;

fn dims() -> impl Strategy<Value = (u64, usize, usize, usize, usize)> {
    (any::<u64>(), 1..=3usize, 1..=2usize, 1..=4usize, 0..=25usize)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn riccati_iterates_are_symmetric_psd((seed, n, m, k, t) in dims()) {
        let spec = random_spec(&mut rng(seed), n, m, k, t);
        let sol = solve_recursions(&spec).unwrap();
        for s in 0..=t + 1 {
            prop_assert!(max_abs_asymmetry(sol.p(s)) < 1e-9 * (1.0 + sol.p(s).amax()));
            prop_assert!(min_eigenvalue(sol.p(s)) >= -1e-9 * (1.0 + sol.p(s).amax()));
        }
        for s in 0..=t {
            prop_assert!(min_eigenvalue(sol.upsilon(s)) > 0.0);
            prop_assert!(min_eigenvalue(sol.d(s)) >= -1e-9 * (1.0 + sol.d(s).amax()));
        }
    }

    #[test]
    fn riccati_monotone_from_zero_terminal((seed, n, m, k, t) in dims()) {
        let spec = random_spec(&mut rng(seed), n, m, k, t);
        let spec = ProblemSpec::new(
            spec.a().clone(), spec.b().clone(), spec.q(0).clone(), spec.r(0).clone(),
            Mat::zeros(n, n), spec.x0().clone(), t, spec.noise().clone(),
        ).unwrap();
        let sol = solve_recursions(&spec).unwrap();
        for s in 0..=t {
            let diff = sol.p(s) - sol.p(s + 1);
            prop_assert!(min_eigenvalue(&diff) >= -1e-9 * (1.0 + sol.p(s).amax()));
        }
    }

    #[test]
    fn adjoint_matches_product_form((seed, n, m, k, t) in dims()) {
        let spec = random_spec(&mut rng(seed), n, m, k, t.min(12));
        let sol = solve_recursions(&spec).unwrap();
        for s in 0..=spec.horizon() {
            let l = sol.l(s);
            prop_assert!((l - sol.adjoint_product_form(s)).amax() <= 1e-8 * (1.0 + l.amax()));
        }
    }

    #[test]
    fn certainty_equivalence_substitution(seed in any::<u64>(), counts in prop::collection::vec(1u64..20, 1..5)) {
        let mut r = rng(seed);
        let total: u64 = counts.iter().sum();
        let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
        let support: Vec<Vector> = counts.iter().map(|_| v(&[r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)])).collect();
        let base = random_spec(&mut r, 2, 2, counts.len(), 6);
        let spec = base.with_noise(NoiseModel::new(support, probs).unwrap()).unwrap();
        let sol = solve_recursions(&spec).unwrap();
        let est = EstimatorState::from_counts(counts);
        let x = v(&[r.random_range(-3.0..3.0), r.random_range(-3.0..3.0)]);
        for t in 0..=6 {
            let a = u_online(t, &x, &sol, &est, spec.noise().support());
            let b = u_offline(t, &x, &sol, spec.noise());
            prop_assert!((&a - &b).amax() <= 1e-12 * (1.0 + b.amax()));
        }
    }

    #[test]
    fn terminal_step_has_zero_control((seed, n, m, k, t) in dims(), x in prop::collection::vec(-5.0f64..5.0, 3)) {
        let spec = random_spec(&mut rng(seed), n, m, k, t.max(2));
        let spec = ProblemSpec::new(
            spec.a().clone(), spec.b().clone(), spec.q(0).clone(), spec.r(0).clone(),
            Mat::zeros(n, n), spec.x0().clone(), spec.horizon(), spec.noise().clone(),
        ).unwrap();
        let sol = solve_recursions(&spec).unwrap();
        let x = Vector::from_row_slice(&x[..n]);
        let est = EstimatorState::from_counts(vec![1; k]);
        let horizon = spec.horizon();
        for kind in [PolicyKind::OfflineOptimal, PolicyKind::OnlineLmmsue, PolicyKind::Case1BiasedOracle,
                     PolicyKind::Case2Frozen { t_bar: 1 }, PolicyKind::Case3NoEstimate] {
            let u = evaluate(kind, PolicyInput { t: horizon, x: &x, estimator: &est, kalman: None }, &sol, spec.noise()).unwrap();
            prop_assert_eq!(u.amax(), 0.0);
        }
    }

    #[test]
    fn regret_report_invariants((seed, n, m, k, t) in dims()) {
        let spec = random_spec(&mut rng(seed), n, m, k, t.max(2));
        let sol = solve_recursions(&spec).unwrap();
        let on = regret_online_analytic(&spec, &sol);
        let sum: f64 = on.one_step.iter().sum();
        prop_assert!((on.regret_total - sum).abs() <= 1e-9 * (1.0 + sum.abs()));
        prop_assert!(on.regret_total >= -1e-9);
        prop_assert!(on.regret_total <= on.bound_value + 1e-9);
        let c1 = regret_case_analytic(PolicyKind::Case1BiasedOracle, &spec, &sol).unwrap();
        prop_assert!(c1.regret_total <= on.regret_total + 1e-9);
        for t_bar in 1..spec.horizon() {
            let c2 = regret_case_analytic(PolicyKind::Case2Frozen { t_bar }, &spec, &sol).unwrap();
            prop_assert!(on.regret_total <= c2.regret_total + 1e-9);
        }
    }

    #[test]
    fn estimate_stays_in_simplex(m in 1usize..6, hist in prop::collection::vec(0usize..6, 0..100)) {
        let mut est = EstimatorState::new(m);
        for h in hist.into_iter().filter(|&h| h < m) {
            est.observe(h).unwrap();
            let p = est.p_hat();
            prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_covariance_is_psd(seed in any::<u64>(), k in 1usize..6, n in 1usize..4) {
        let spec = random_spec(&mut rng(seed), n, 1, k, 1);
        let nm = spec.noise();
        prop_assert!(min_eigenvalue(nm.covariance()) >= -1e-12);
        let mu = nm.mean();
        let recon = nm.covariance() + mu * mu.transpose();
        prop_assert!((recon - nm.second_moment()).amax() < 1e-12);
    }

    #[test]
    fn kalman_covariances_stay_psd(seed in any::<u64>(), steps in 1usize..30) {
        let mut r = rng(seed);
        let base = random_spec(&mut r, 2, 2, 3, 5);
        let c = random_psd(&mut r, 2, 0.3);
        let vb = r.random_range(0.01..2.0);
        let meas = NoiseModel::from_slices(&[&[vb, 0.0], &[-vb, 0.0], &[0.0, vb], &[0.0, -vb]], &[0.25; 4]).unwrap();
        let c0 = random_psd(&mut r, 2, 0.0);
        let of = OutputFeedbackSpec::new(base, c, meas, v(&[0.0, 0.0]), c0).unwrap();
        let mut ks = KalmanState::new(&of);
        for _ in 0..steps {
            let y = v(&[r.random_range(-3.0..3.0), r.random_range(-3.0..3.0)]);
            let filt = ks.measurement_update(&y, &of).unwrap();
            prop_assert!(min_eigenvalue(&filt.lambda_filt) >= -1e-10);
            prop_assert!(max_abs_asymmetry(&filt.lambda_filt) == 0.0);
            let u = v(&[r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)]);
            ks = filt.time_update(&u, &of);
            prop_assert!(min_eigenvalue(&ks.lambda_pred) >= -1e-10);
        }
    }

    #[test]
    fn trajectories_recost_exactly((seed, n, m, k, t) in dims(), run in 0u64..50) {
        let spec = random_spec(&mut rng(seed), n, m, k, t);
        let sol = solve_recursions(&spec).unwrap();
        let tr = simulate(Setting::State(&spec), &sol, PolicyKind::OnlineLmmsue, seed, run).unwrap();
        prop_assert_eq!(tr.realized_cost, recost(&spec, &tr));
        for s in 0..=t {
            let w = &tr.states[s + 1] - spec.a() * &tr.states[s] - spec.b() * &tr.controls[s];
            let scale = 1.0 + tr.states[s + 1].amax() + tr.states[s].amax();
            prop_assert!((w - &spec.noise().support()[tr.noise_indices[s]]).amax() <= 1e-12 * scale);
        }
        let direct: f64 = tr.states.iter().zip(&tr.controls).enumerate()
            .map(|(s, (x, u))| bilinear(x, spec.q(s), x) + bilinear(u, spec.r(s), u))
            .sum::<f64>() + bilinear(&tr.states[t + 1], spec.p_terminal(), &tr.states[t + 1]);
        prop_assert!((direct - tr.realized_cost).abs() <= 1e-10 * (1.0 + direct.abs()));
    }

    #[test]
    fn scenario_files_round_trip((seed, n, m, k, t) in dims()) {
        let spec = random_spec(&mut rng(seed), n, m, k, t);
        let file = ScenarioFile::from_spec(&spec, None).unwrap();
        let back = ScenarioFile::from_json(&file.to_json()).unwrap().build().unwrap();
        prop_assert_eq!(back.spec, spec);
    }

    #[test]
    fn ten_significant_digits_round_trip(x in prop::num::f64::NORMAL) {
        let back: f64 = format_sig(x).parse().unwrap();
        prop_assert!(((back - x) / x).abs() <= 5e-10);
    }
}
