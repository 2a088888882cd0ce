//! Browser bindings for the regret tables, per-step traces and Monte Carlo
//! histograms. Every entry point returns a JSON string.

use online_lqr::linalg::Vector;
use online_lqr::model::{scenario_predator_prey, scenario_product_pricing};
use online_lqr::regret::regret_case_analytic;
use online_lqr::riccati::solve_recursions;
use online_lqr::sim::{run_costs, summarize, Setting};
use online_lqr::{PolicyKind, ProblemSpec};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MAX_HORIZON: usize = 20_000;
const MAX_RUNS: usize = 20_000;

#[derive(Serialize)]
struct TableRow {
    horizon: usize,
    j_star: f64,
    j_online: f64,
    regret: f64,
    regret_pct: f64,
    bound: f64,
}

#[derive(Serialize)]
struct Series {
    policy: String,
    one_step: Vec<f64>,
    cumulative: Vec<f64>,
    total: f64,
}

#[derive(Serialize)]
struct Simulation {
    policy: String,
    costs: Vec<f64>,
    mean: f64,
    std_error: f64,
    analytic: f64,
}

fn scenario(name: &str, horizon: usize) -> Result<ProblemSpec, String> {
    if horizon > MAX_HORIZON {
        return Err(format!("horizon above {MAX_HORIZON}"));
    }
    match name {
        "example1" => Ok(scenario_predator_prey(horizon)),
        "example2" => Ok(scenario_product_pricing(horizon, Vector::from_row_slice(&[1.0, 1.0]))),
        other => Err(format!("unknown scenario `{other}`")),
    }
}

fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| format!("`{s}`: {e}")))
        .collect()
}

fn state_policy(text: &str) -> Result<PolicyKind, String> {
    let kind: PolicyKind = text.trim().parse().map_err(|e: online_lqr::Error| e.to_string())?;
    if kind.is_output_feedback() {
        return Err(format!("{kind} needs an output-feedback scenario"));
    }
    Ok(kind)
}

fn json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

pub fn table_json(name: &str, horizons: &str) -> Result<String, String> {
    let rows = parse_list::<usize>(horizons)?
        .into_iter()
        .map(|horizon| {
            let spec = scenario(name, horizon)?;
            let sol = solve_recursions(&spec).map_err(|e| e.to_string())?;
            let rep = regret_case_analytic(PolicyKind::OnlineLmmsue, &spec, &sol).map_err(|e| e.to_string())?;
            Ok(TableRow {
                horizon,
                j_star: rep.j_star,
                j_online: rep.j_policy,
                regret: rep.regret_total,
                regret_pct: rep.percentage,
                bound: rep.bound_value,
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    json(&rows)
}

pub fn trace_json(name: &str, horizon: usize, policies: &str) -> Result<String, String> {
    let spec = scenario(name, horizon)?;
    let sol = solve_recursions(&spec).map_err(|e| e.to_string())?;
    let series = policies
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|p| {
            let kind = state_policy(p)?;
            kind.validate(horizon).map_err(|e| e.to_string())?;
            let rep = regret_case_analytic(kind, &spec, &sol).map_err(|e| e.to_string())?;
            let cumulative = rep
                .one_step
                .iter()
                .scan(0.0, |acc, x| {
                    *acc += x;
                    Some(*acc)
                })
                .collect();
            Ok(Series {
                policy: kind.to_string(),
                one_step: rep.one_step,
                cumulative,
                total: rep.regret_total,
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    json(&series)
}

pub fn simulate_json(name: &str, horizon: usize, policy: &str, runs: usize, seed: u64) -> Result<String, String> {
    if runs == 0 || runs > MAX_RUNS {
        return Err(format!("runs must be in 1..={MAX_RUNS}"));
    }
    let spec = scenario(name, horizon)?;
    let sol = solve_recursions(&spec).map_err(|e| e.to_string())?;
    let kind = state_policy(policy)?;
    kind.validate(horizon).map_err(|e| e.to_string())?;
    let costs = run_costs(Setting::State(&spec), &sol, kind, runs, seed).map_err(|e| e.to_string())?;
    let mc = summarize(kind.to_string(), &costs, seed).map_err(|e| e.to_string())?;
    let analytic = regret_case_analytic(kind, &spec, &sol).map_err(|e| e.to_string())?.j_policy;
    json(&Simulation {
        policy: kind.to_string(),
        costs,
        mean: mc.mean_cost,
        std_error: mc.std_error,
        analytic,
    })
}

/// Rows of `{horizon, j_star, j_online, regret, regret_pct, bound}`.
#[wasm_bindgen]
pub fn regret_table(scenario: &str, horizons: &str) -> Result<String, JsValue> {
    table_json(scenario, horizons).map_err(|e| JsValue::from_str(&e))
}

/// One series per comma-separated policy with per-step and cumulative regret.
#[wasm_bindgen]
pub fn regret_trace(scenario: &str, horizon: usize, policies: &str) -> Result<String, JsValue> {
    trace_json(scenario, horizon, policies).map_err(|e| JsValue::from_str(&e))
}

/// Realized costs of `runs` simulated trajectories.
#[wasm_bindgen]
pub fn simulate_costs(scenario: &str, horizon: usize, policy: &str, runs: usize, seed: u32) -> Result<String, JsValue> {
    simulate_json(scenario, horizon, policy, runs, u64::from(seed)).map_err(|e| JsValue::from_str(&e))
}
