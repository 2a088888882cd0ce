mod common;

use common::{random_spec, rng, v};
use online_lqr::linalg::Mat;
use online_lqr::model::{scenario_predator_prey, NoiseModel, ProblemSpec};
use online_lqr::policies::PolicyKind;
use online_lqr::regret::{brute_force_expected_cost, brute_force_policy, crossover_time, regret_case_analytic, regret_online_analytic};
use online_lqr::riccati::{offline_cost, online_cost_analytic, solve_recursions};
use online_lqr::sim::one_step_regret_trace;
use online_lqr::Error;

#[test]
fn every_state_policy_matches_its_closed_form() {
    for seed in 0..12 {
        let spec = random_spec(&mut rng(seed), 2, 1 + (seed as usize % 2), 2 + (seed as usize % 2), 4);
        let sol = solve_recursions(&spec).unwrap();
        for kind in [
            PolicyKind::OfflineOptimal,
            PolicyKind::OnlineLmmsue,
            PolicyKind::Case1BiasedOracle,
            PolicyKind::Case2Frozen { t_bar: 2 },
            PolicyKind::Case3NoEstimate,
        ] {
            let bf = brute_force_policy(&spec, &sol, kind).unwrap();
            let rep = regret_case_analytic(kind, &spec, &sol).unwrap();
            for (t, (a, b)) in bf.expected_deviation.iter().zip(&rep.one_step).enumerate() {
                assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()), "{kind} t={t}: {a} vs {b}");
            }
            let off = offline_cost(&spec, &sol);
            assert!((bf.expected_cost - off - rep.regret_total).abs() < 1e-9 * (1.0 + off.abs()), "{kind}");
        }
    }
}

#[test]
fn hand_scalar_oracle() {
    let one = Mat::identity(1, 1);
    let spec = ProblemSpec::new(
        one.clone(),
        one.clone(),
        one.clone(),
        one,
        Mat::zeros(1, 1),
        v(&[1.0]),
        3,
        NoiseModel::from_slices(&[&[1.0], &[-1.0]], &[0.5, 0.5]).unwrap(),
    )
    .unwrap();
    let sol = solve_recursions(&spec).unwrap();
    let off = brute_force_expected_cost(&spec, PolicyKind::OfflineOptimal).unwrap();
    let on = brute_force_expected_cost(&spec, PolicyKind::OnlineLmmsue).unwrap();
    assert!((off - offline_cost(&spec, &sol)).abs() < 1e-10);
    assert!((on - online_cost_analytic(&spec, &sol)).abs() < 1e-10);
}

#[test]
fn output_policy_needs_output_instance() {
    let spec = scenario_predator_prey(2);
    let sol = solve_recursions(&spec).unwrap();
    assert!(matches!(
        brute_force_policy(&spec, &sol, PolicyKind::OutputOnlineLmmsue),
        Err(Error::UnsupportedPolicy(_))
    ));
}

#[test]
fn case_orderings_on_example_1() {
    let spec = scenario_predator_prey(2000);
    let sol = solve_recursions(&spec).unwrap();
    let on = regret_online_analytic(&spec, &sol);
    let c1 = regret_case_analytic(PolicyKind::Case1BiasedOracle, &spec, &sol).unwrap();
    let c2 = regret_case_analytic(PolicyKind::Case2Frozen { t_bar: 100 }, &spec, &sol).unwrap();
    let c3 = regret_case_analytic(PolicyKind::Case3NoEstimate, &spec, &sol).unwrap();
    assert!(c1.regret_total <= on.regret_total);
    assert!(on.regret_total <= c2.regret_total);
    assert!(c2.regret_total <= c3.regret_total);
    let tc = crossover_time(&on.one_step, &c3.one_step).unwrap();
    assert!((1..10).contains(&tc), "crossover at {tc}");

    let small = scenario_predator_prey(60);
    let sol = solve_recursions(&small).unwrap();
    let on = regret_online_analytic(&small, &sol).regret_total;
    for t_bar in 1..60 {
        let c2 = regret_case_analytic(PolicyKind::Case2Frozen { t_bar }, &small, &sol).unwrap();
        assert!(on <= c2.regret_total + 1e-12);
    }
}

#[test]
fn example_1_regret_difference() {
    let reg = |t| {
        let spec = scenario_predator_prey(t);
        regret_online_analytic(&spec, &solve_recursions(&spec).unwrap()).regret_total
    };
    let d = reg(2000) - reg(1000);
    assert!((d - 1.3449).abs() < 2e-3, "{d}");
}

#[test]
fn example_1_trace() {
    let spec = scenario_predator_prey(200);
    let sol = solve_recursions(&spec).unwrap();
    let trace = one_step_regret_trace(&spec, &sol, PolicyKind::OnlineLmmsue).unwrap();
    assert_eq!(trace.len(), 201);
    assert_eq!(trace[200], 0.0);
    let mu = spec.noise().mean();
    assert!((trace[0] - online_lqr::linalg::bilinear(mu, sol.d(0), mu)).abs() < 1e-15);
    for t in 2..200 {
        assert!(trace[t] <= trace[t - 1], "t={t}");
    }
    assert!(one_step_regret_trace(&spec, &sol, PolicyKind::OutputKalmanOffline).is_err());
}

#[test]
fn single_horizon_online_cost() {
    let spec = scenario_predator_prey(0);
    let sol = solve_recursions(&spec).unwrap();
    let mu = spec.noise().mean();
    let expected = offline_cost(&spec, &sol) + online_lqr::linalg::bilinear(mu, sol.d(0), mu);
    assert!((online_cost_analytic(&spec, &sol) - expected).abs() < 1e-15);
}
