//! Analytic regret of every policy, the logarithmic bound, slope
//! diagnostics, and an exhaustive expectation oracle for small instances.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{classify_noise_h3, lmmsbe_weight, EstimatorState};
use crate::linalg::{bilinear, psd_sqrt, trace_product, Mat, NeumaierSum, Vector};
use crate::model::{OutputFeedbackSpec, ProblemSpec};
use crate::policies::{evaluate, KalmanState, PolicyInput, PolicyKind};
use crate::riccati::{offline_cost, output_costs, RiccatiSolution};

/// Largest number of enumerated paths the oracle accepts.
pub const ENUMERATION_BUDGET: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretReport {
    pub policy: String,
    pub horizon: usize,
    pub j_star: f64,
    pub j_policy: f64,
    pub regret_total: f64,
    /// Expected one-step regret for `t = 0..=T`.
    pub one_step: Vec<f64>,
    /// `100 * regret_total / T`; zero when `T = 0`.
    pub percentage: f64,
    /// `max_{t >= 1} Tr(D(t) C_w)`.
    pub bound_c_hat: f64,
    /// `Tr(D(0) mu mu') + c_hat * H_T`.
    pub bound_value: f64,
    /// `H_T - ln T`; zero when `T = 0`.
    pub euler_gap: f64,
}

/// `H_T = sum_{t=1}^T 1/t`, summed exactly.
pub fn harmonic(horizon: usize) -> f64 {
    (1..=horizon).map(|t| 1.0 / t as f64).collect::<NeumaierSum>().value()
}

/// Per-step traces `a(t) = Tr(D(t) mu mu')` and `b(t) = Tr(D(t) C_w)`.
fn traces(spec: &ProblemSpec, sol: &RiccatiSolution) -> (Vec<f64>, Vec<f64>) {
    let mu = spec.noise().mean();
    let cw = spec.noise().covariance();
    (0..=sol.horizon())
        .map(|t| (bilinear(mu, sol.d(t), mu), trace_product(sol.d(t), cw)))
        .unzip()
}

fn build_report(policy: String, spec: &ProblemSpec, sol: &RiccatiSolution, one_step: Vec<f64>) -> RegretReport {
    let horizon = sol.horizon();
    let (a, b) = traces(spec, sol);
    let j_star = offline_cost(spec, sol);
    let regret_total = one_step.iter().copied().collect::<NeumaierSum>().value();
    let bound_c_hat = b.iter().skip(1).copied().fold(0.0, f64::max);
    let h_t = harmonic(horizon);
    let (percentage, euler_gap) = if horizon == 0 {
        (0.0, 0.0)
    } else {
        (100.0 * regret_total / horizon as f64, h_t - (horizon as f64).ln())
    };
    RegretReport {
        policy,
        horizon,
        j_star,
        j_policy: j_star + regret_total,
        regret_total,
        one_step,
        percentage,
        bound_c_hat,
        bound_value: a[0] + bound_c_hat * h_t,
        euler_gap,
    }
}

/// Regret of the sample-mean policy: `Tr(D(0) mu mu')` at `t = 0`, then
/// `Tr(D(t) C_w) / t`.
pub fn regret_online_analytic(spec: &ProblemSpec, sol: &RiccatiSolution) -> RegretReport {
    let (a, b) = traces(spec, sol);
    let one_step = (0..=sol.horizon())
        .map(|t| if t == 0 { a[0] } else { b[t] / t as f64 })
        .collect();
    build_report(PolicyKind::OnlineLmmsue.to_string(), spec, sol, one_step)
}

/// Closed-form regret of the state-feedback policies.
pub fn regret_case_analytic(kind: PolicyKind, spec: &ProblemSpec, sol: &RiccatiSolution) -> Result<RegretReport> {
    let horizon = sol.horizon();
    let (a, b) = traces(spec, sol);
    let one_step: Vec<f64> = match kind {
        PolicyKind::OfflineOptimal => vec![0.0; horizon + 1],
        PolicyKind::OnlineLmmsue => return Ok(regret_online_analytic(spec, sol)),
        PolicyKind::Case1BiasedOracle => {
            let mu = spec.noise().mean();
            let cw = spec.noise().covariance();
            let mut out = vec![a[0]];
            for t in 1..=horizon {
                let c = lmmsbe_weight(t, sol.d(t), mu, cw)?;
                let tc = t as f64 * c;
                out.push(tc * c * b[t] + (tc - 1.0).powi(2) * a[t]);
            }
            out
        }
        PolicyKind::Case2Frozen { t_bar } => {
            kind.validate(horizon)?;
            (0..=horizon)
                .map(|t| match t {
                    0 => a[0],
                    t => b[t] / t.min(t_bar) as f64,
                })
                .collect()
        }
        PolicyKind::Case3NoEstimate => a,
        other => return Err(Error::UnsupportedPolicy(format!("{other} has no state-feedback regret formula"))),
    };
    Ok(build_report(kind.to_string(), spec, sol, one_step))
}

/// Regret of the linear estimate `sum_s c_s xi(s)`; `weights[t]` holds the
/// `t` weights used at time `t` (`weights[0]` is ignored and the estimate
/// is zero there). One-step regret is
/// `sum c_s^2 Tr(D C_w) + (sum c_s - 1)^2 Tr(D mu mu')`.
pub fn regret_weighted_analytic(spec: &ProblemSpec, sol: &RiccatiSolution, weights: &[Vec<f64>]) -> Result<RegretReport> {
    let horizon = sol.horizon();
    if weights.len() != horizon + 1 {
        return Err(Error::Dimension(format!(
            "need {} weight vectors, got {}",
            horizon + 1,
            weights.len()
        )));
    }
    let (a, b) = traces(spec, sol);
    let mut one_step = vec![a[0]];
    for t in 1..=horizon {
        let w = &weights[t];
        if w.len() != t {
            return Err(Error::Dimension(format!("time {t} needs {t} weights, got {}", w.len())));
        }
        let sum: f64 = w.iter().sum();
        let sq: f64 = w.iter().map(|c| c * c).sum();
        one_step.push(sq * b[t] + (sum - 1.0).powi(2) * a[t]);
    }
    Ok(build_report("weighted".into(), spec, sol, one_step))
}

/// Earliest `t >= 1` from which `online[s] <= other[s]` holds for every
/// `s >= t`, ignoring a trailing stretch where both vanish.
pub fn crossover_time(online: &[f64], other: &[f64]) -> Option<usize> {
    let n = online.len().min(other.len());
    let mut first = None;
    for t in (1..n).rev() {
        if online[t] <= other[t] {
            first = Some(t);
        } else {
            break;
        }
    }
    first
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SlopeAxis {
    LogHorizon,
    Horizon,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub axis: SlopeAxis,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares line of regret against `ln T` or `T`.
pub fn regret_slope_fit(points: &[(usize, f64)], axis: SlopeAxis) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(points.len()));
    }
    let xs: Vec<f64> = points
        .iter()
        .map(|&(t, _)| match axis {
            SlopeAxis::LogHorizon => (t as f64).ln(),
            SlopeAxis::Horizon => t as f64,
        })
        .collect();
    let ys: Vec<f64> = points.iter().map(|&(_, r)| r).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 || !sxx.is_finite() {
        return Err(Error::InvalidArgument("horizons must be distinct and positive".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(SlopeFit {
        axis,
        slope,
        intercept,
        r_squared,
    })
}

/// Exact expectations from exhaustive enumeration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BruteForceOutcome {
    pub expected_cost: f64,
    /// `E[(u - u_ref)' Y(t) (u - u_ref)]` per `t`, where `u_ref` is the
    /// known-statistics law evaluated at the same (estimated) state.
    pub expected_deviation: Vec<f64>,
    pub paths: f64,
}

impl BruteForceOutcome {
    pub fn total_deviation(&self) -> f64 {
        self.expected_deviation.iter().copied().collect::<NeumaierSum>().value()
    }
}

#[derive(Debug, Clone, Default)]
struct Accum {
    cost: NeumaierSum,
    dev: Vec<NeumaierSum>,
}

impl Accum {
    fn new(horizon: usize) -> Self {
        Self {
            cost: NeumaierSum::default(),
            dev: vec![NeumaierSum::default(); horizon + 1],
        }
    }

    fn merge(&mut self, other: &Accum) {
        self.cost.merge(&other.cost);
        for (a, b) in self.dev.iter_mut().zip(&other.dev) {
            a.merge(b);
        }
    }

    fn finish(self, paths: f64) -> BruteForceOutcome {
        BruteForceOutcome {
            expected_cost: self.cost.value(),
            expected_deviation: self.dev.iter().map(NeumaierSum::value).collect(),
            paths,
        }
    }
}

/// Runs `f` on each branch index and merges in index order, so the
/// result does not depend on scheduling.
fn map_branches<F>(n: usize, horizon: usize, f: F) -> Result<Accum>
where
    F: Fn(usize) -> Result<Accum> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    let parts: Vec<Result<Accum>> = {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(&f).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Result<Accum>> = (0..n).map(&f).collect();
    let mut acc = Accum::new(horizon);
    for p in parts {
        acc.merge(&p?);
    }
    Ok(acc)
}

fn check_budget(paths: f64) -> Result<()> {
    if paths > ENUMERATION_BUDGET {
        Err(Error::EnumerationBudget(paths))
    } else {
        Ok(())
    }
}

struct StateEnum<'a, F> {
    spec: &'a ProblemSpec,
    sol: &'a RiccatiSolution,
    policy: &'a F,
    records: &'a (dyn Fn(usize) -> bool + Sync),
}

impl<F> StateEnum<'_, F>
where
    F: Fn(usize, &Vector, &EstimatorState) -> Result<Vector> + Sync,
{
    fn node(&self, t: usize, x: &Vector, est: &EstimatorState, prob: f64, acc: &mut Accum) -> Result<()> {
        let spec = self.spec;
        if t > self.sol.horizon() {
            acc.cost.add(prob * bilinear(x, spec.p_terminal(), x));
            return Ok(());
        }
        let next = self.stage(t, x, est, prob, acc)?;
        for (i, (w, &p)) in spec.noise().support().iter().zip(spec.noise().probs()).enumerate() {
            if p == 0.0 {
                continue;
            }
            let est_next = if (self.records)(t + 1) { est.update(i)? } else { est.clone() };
            self.node(t + 1, &(&next + w), &est_next, prob * p, acc)?;
        }
        Ok(())
    }

    /// Adds the stage cost and deviation at `t`; returns `A x + B u`.
    fn stage(&self, t: usize, x: &Vector, est: &EstimatorState, prob: f64, acc: &mut Accum) -> Result<Vector> {
        let spec = self.spec;
        let u = (self.policy)(t, x, est)?;
        let u_ref = self.sol.control(t, x, spec.noise().mean());
        acc.cost.add(prob * (bilinear(x, spec.q(t), x) + bilinear(&u, spec.r(t), &u)));
        acc.dev[t].add(prob * self.sol.deviation_cost(t, &u, &u_ref));
        Ok(spec.a() * x + spec.b() * &u)
    }
}

/// Enumerates every noise sequence for an arbitrary non-anticipative
/// policy `policy(t, x, estimator)`. `records(t)` says whether `w(t-1)`
/// is added to the estimator at time `t`.
pub fn brute_force_with<F>(
    spec: &ProblemSpec,
    sol: &RiccatiSolution,
    policy: &F,
    records: &(dyn Fn(usize) -> bool + Sync),
) -> Result<BruteForceOutcome>
where
    F: Fn(usize, &Vector, &EstimatorState) -> Result<Vector> + Sync,
{
    let horizon = spec.horizon();
    let m = spec.noise().len();
    let paths = (m as f64).powi(horizon as i32 + 1);
    check_budget(paths)?;
    let ctx = StateEnum { spec, sol, policy, records };
    let est0 = EstimatorState::new(m);
    let mut root = Accum::new(horizon);
    let next = ctx.stage(0, spec.x0(), &est0, 1.0, &mut root)?;
    let branches = map_branches(m, horizon, |i| {
        let mut acc = Accum::new(horizon);
        let p = spec.noise().probs()[i];
        if p == 0.0 {
            return Ok(acc);
        }
        let est = if records(1) { est0.update(i)? } else { est0.clone() };
        ctx.node(1, &(&next + &spec.noise().support()[i]), &est, p, &mut acc)?;
        Ok(acc)
    })?;
    root.merge(&branches);
    Ok(root.finish(paths))
}

/// Oracle for a named state-feedback policy.
pub fn brute_force_policy(spec: &ProblemSpec, sol: &RiccatiSolution, kind: PolicyKind) -> Result<BruteForceOutcome> {
    if kind.is_output_feedback() {
        return Err(Error::UnsupportedPolicy(format!("{kind} needs an output-feedback instance")));
    }
    kind.validate(spec.horizon())?;
    let noise = spec.noise();
    let policy = |t: usize, x: &Vector, est: &EstimatorState| {
        evaluate(kind, PolicyInput { t, x, estimator: est, kalman: None }, sol, noise)
    };
    let records = |t: usize| kind.records_observation(t);
    brute_force_with(spec, sol, &policy, &records)
}

/// Exact expected cost of `kind` by enumeration.
pub fn brute_force_expected_cost(spec: &ProblemSpec, kind: PolicyKind) -> Result<f64> {
    let sol = crate::riccati::solve_recursions(spec)?;
    Ok(brute_force_policy(spec, &sol, kind)?.expected_cost)
}

/// Points and weights matching the mean and covariance of the initial
/// state exactly; enough for costs that are quadratic in `x(0)`.
pub fn sigma_points(mu0: &Vector, c0: &Mat) -> Vec<(Vector, f64)> {
    let n = mu0.len();
    if c0.amax() == 0.0 {
        return vec![(mu0.clone(), 1.0)];
    }
    let root = psd_sqrt(c0) * (n as f64).sqrt();
    let w = 0.5 / n as f64;
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let col = root.column(i).into_owned();
        out.push((mu0 + &col, w));
        out.push((mu0 - &col, w));
    }
    out
}

struct OutputEnum<'a> {
    of: &'a OutputFeedbackSpec,
    sol: &'a RiccatiSolution,
    kind: PolicyKind,
}

struct OutputNode {
    x: Vector,
    prev: Option<(Vector, Vector)>,
    est: EstimatorState,
    kalman: KalmanState,
}

impl OutputEnum<'_> {
    fn node(&self, t: usize, node: &OutputNode, prob: f64, acc: &mut Accum) -> Result<()> {
        let spec = self.of.base();
        let x = &node.x;
        if t > self.sol.horizon() {
            acc.cost.add(prob * bilinear(x, spec.p_terminal(), x));
            return Ok(());
        }
        let meas = self.of.meas_noise();
        for (v, &pv) in meas.support().iter().zip(meas.probs()) {
            if pv == 0.0 {
                continue;
            }
            let p_v = prob * pv;
            let y = self.of.c() * x + v;
            let xhat = self.of.one_step_estimate(&y);
            let est = match &node.prev {
                Some((xhat_prev, u_prev)) if self.kind.records_observation(t) => {
                    let obs = classify_noise_h3(&xhat, xhat_prev, u_prev, self.of)?;
                    node.est.update(obs.index)?
                }
                _ => node.est.clone(),
            };
            let ks = node.kalman.measurement_update(&y, self.of)?;
            let input = PolicyInput {
                t,
                x: &xhat,
                estimator: &est,
                kalman: Some(&ks),
            };
            let u = evaluate(self.kind, input, self.sol, spec.noise())?;
            let u_ref = self.sol.control(t, &xhat, spec.noise().mean());
            acc.cost.add(p_v * (bilinear(x, spec.q(t), x) + bilinear(&u, spec.r(t), &u)));
            acc.dev[t].add(p_v * self.sol.deviation_cost(t, &u, &u_ref));
            let drift = spec.a() * x + spec.b() * &u;
            let ks_next = ks.time_update(&u, self.of);
            for (w, &pw) in spec.noise().support().iter().zip(spec.noise().probs()) {
                if pw == 0.0 {
                    continue;
                }
                let child = OutputNode {
                    x: &drift + w,
                    prev: Some((xhat.clone(), u.clone())),
                    est: est.clone(),
                    kalman: ks_next.clone(),
                };
                self.node(t + 1, &child, p_v * pw, acc)?;
            }
        }
        Ok(())
    }
}

/// Oracle for an output-feedback policy: enumerates measurement and
/// process noise jointly and replaces the Gaussian initial state by its
/// sigma points. Deviations are measured against the known-statistics law
/// at the one-step estimate.
pub fn brute_force_output(of: &OutputFeedbackSpec, sol: &RiccatiSolution, kind: PolicyKind) -> Result<BruteForceOutcome> {
    if !kind.is_output_feedback() {
        return Err(Error::UnsupportedPolicy(format!("{kind} is a state-feedback policy")));
    }
    if kind == PolicyKind::OutputOnlineLmmsue {
        of.require_h3()?;
    }
    let spec = of.base();
    let horizon = spec.horizon();
    let points = sigma_points(of.mu0(), of.c0());
    let per_step = (spec.noise().len() * of.meas_noise().len()) as f64;
    let paths = points.len() as f64 * per_step.powi(horizon as i32 + 1);
    check_budget(paths)?;
    let ctx = OutputEnum { of, sol, kind };
    let m = spec.noise().len();
    let acc = map_branches(points.len(), horizon, |k| {
        let (x0, weight) = &points[k];
        let mut acc = Accum::new(horizon);
        let root = OutputNode {
            x: x0.clone(),
            prev: None,
            est: EstimatorState::new(m),
            kalman: KalmanState::new(of),
        };
        ctx.node(0, &root, *weight, &mut acc)?;
        Ok(acc)
    })?;
    Ok(acc.finish(paths))
}

/// `J(out-online) - J(out-offline)` from the closed forms.
pub fn quasi_regret_analytic(of: &OutputFeedbackSpec, sol: &RiccatiSolution) -> f64 {
    let c = output_costs(of, sol);
    c.online - c.offline
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::scenario_predator_prey;
    use crate::model::NoiseModel;
    use crate::riccati::{online_cost_analytic, solve_recursions};

    fn scalar_spec(horizon: usize, support: &[&[f64]], probs: &[f64]) -> ProblemSpec {
        let one = Mat::identity(1, 1);
        ProblemSpec::new(
            one.clone(),
            one.clone(),
            one.clone(),
            one,
            Mat::zeros(1, 1),
            Vector::from_row_slice(&[1.0]),
            horizon,
            NoiseModel::from_slices(support, probs).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn harmonic_numbers() {
        assert_eq!(harmonic(0), 0.0);
        assert!((harmonic(4) - 25.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn table_row_t200() {
        let spec = scenario_predator_prey(200);
        let sol = solve_recursions(&spec).unwrap();
        let rep = regret_online_analytic(&spec, &sol);
        assert!((rep.regret_total - 12.0446).abs() < 1e-3);
        assert!((rep.percentage - 6.0223).abs() < 1e-3);
        assert_eq!(*rep.one_step.last().unwrap(), 0.0);
        assert!(rep.regret_total <= rep.bound_value);
    }

    #[test]
    fn zero_mean_point_mass_has_no_regret() {
        let spec = scalar_spec(5, &[&[0.0]], &[1.0]);
        let sol = solve_recursions(&spec).unwrap();
        assert_eq!(regret_online_analytic(&spec, &sol).regret_total, 0.0);
        let c3 = regret_case_analytic(PolicyKind::Case3NoEstimate, &spec, &sol).unwrap();
        assert_eq!(c3.regret_total, 0.0);
    }

    #[test]
    fn case2_at_last_cutoff() {
        let spec = scalar_spec(6, &[&[1.0], &[-0.5]], &[0.3, 0.7]);
        let sol = solve_recursions(&spec).unwrap();
        let on = regret_online_analytic(&spec, &sol);
        let c2 = regret_case_analytic(PolicyKind::Case2Frozen { t_bar: 5 }, &spec, &sol).unwrap();
        let (_, b) = traces(&spec, &sol);
        let expected = on.regret_total - b[6] / 6.0 + b[6] / 5.0;
        assert!((c2.regret_total - expected).abs() < 1e-9);
        assert!(regret_case_analytic(PolicyKind::Case2Frozen { t_bar: 6 }, &spec, &sol).is_err());
    }

    #[test]
    fn uniform_weights_reproduce_online() {
        let spec = scalar_spec(6, &[&[1.0], &[-0.5]], &[0.3, 0.7]);
        let sol = solve_recursions(&spec).unwrap();
        let weights: Vec<Vec<f64>> = (0..=6).map(|t| vec![1.0 / t.max(1) as f64; t]).collect();
        let w = regret_weighted_analytic(&spec, &sol, &weights).unwrap();
        let on = regret_online_analytic(&spec, &sol);
        assert!((w.regret_total - on.regret_total).abs() < 1e-12);
    }

    #[test]
    fn output_policies_rejected_by_state_formulas() {
        let spec = scalar_spec(2, &[&[1.0]], &[1.0]);
        let sol = solve_recursions(&spec).unwrap();
        assert!(matches!(
            regret_case_analytic(PolicyKind::OutputKalmanOffline, &spec, &sol),
            Err(Error::UnsupportedPolicy(_))
        ));
    }

    #[test]
    fn slope_of_exact_log() {
        let pts: Vec<(usize, f64)> = [10, 100, 1000].iter().map(|&t| (t, 2.5 * (t as f64).ln())).collect();
        let fit = regret_slope_fit(&pts, SlopeAxis::LogHorizon).unwrap();
        assert!((fit.slope - 2.5).abs() < 1e-9);
        assert!(regret_slope_fit(&pts[..2], SlopeAxis::Horizon).is_err());
    }

    #[test]
    fn crossover_detection() {
        assert_eq!(crossover_time(&[9.0, 3.0, 1.0, 0.5, 0.0], &[1.0, 1.0, 1.0, 1.0, 0.0]), Some(2));
        assert_eq!(crossover_time(&[9.0, 3.0, 2.0], &[1.0, 1.0, 1.0]), None);
    }

    #[test]
    fn oracle_matches_closed_forms() {
        let spec = scalar_spec(3, &[&[1.0], &[-0.5]], &[0.3, 0.7]);
        let sol = solve_recursions(&spec).unwrap();
        let off = brute_force_policy(&spec, &sol, PolicyKind::OfflineOptimal).unwrap();
        assert!((off.expected_cost - offline_cost(&spec, &sol)).abs() < 1e-10);
        assert_eq!(off.total_deviation(), 0.0);
        let on = brute_force_policy(&spec, &sol, PolicyKind::OnlineLmmsue).unwrap();
        assert!((on.expected_cost - online_cost_analytic(&spec, &sol)).abs() < 1e-10);
        let rep = regret_online_analytic(&spec, &sol);
        for (a, b) in on.expected_deviation.iter().zip(&rep.one_step) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn oracle_single_stage() {
        let spec = scalar_spec(0, &[&[1.0], &[-0.5]], &[0.3, 0.7]);
        let sol = solve_recursions(&spec).unwrap();
        let cost = brute_force_expected_cost(&spec, PolicyKind::OfflineOptimal).unwrap();
        let mu = spec.noise().mean();
        let x0 = spec.x0();
        let closed = bilinear(x0, sol.p(0), x0) + 2.0 * bilinear(x0, sol.l(0), mu) + sol.h(0);
        assert!((cost - closed).abs() < 1e-12);
    }

    #[test]
    fn oracle_budget_guard() {
        let spec = scalar_spec(20, &[&[1.0], &[-0.5]], &[0.3, 0.7]);
        assert!(matches!(
            brute_force_expected_cost(&spec, PolicyKind::OfflineOptimal),
            Err(Error::EnumerationBudget(_))
        ));
    }

    #[test]
    fn sigma_points_match_moments() {
        let mu0 = Vector::from_row_slice(&[1.0, -2.0]);
        let c0 = Mat::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let pts = sigma_points(&mu0, &c0);
        let mean: Vector = pts.iter().map(|(x, w)| x * *w).sum();
        let cov: Mat = pts.iter().map(|(x, w)| (x - &mu0) * (x - &mu0).transpose() * *w).sum();
        assert!((mean - mu0).amax() < 1e-14);
        assert!((cov - c0).amax() < 1e-12);
    }
}
