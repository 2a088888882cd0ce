//! Seeded trajectory simulation and Monte Carlo estimates of realized cost.
//!
//! Every run owns two ChaCha12 streams derived from `(seed, run_index)`:
//! stream `2 * run` drives the process noise and stream `2 * run + 1` the
//! measurement noise and the random initial state. Results therefore do not
//! depend on how runs are scheduled across threads.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{classify_noise_h3, extract_noise_exact, EstimatorState};
use crate::linalg::{bilinear, psd_sqrt, NeumaierSum, Vector};
use crate::model::{NoiseModel, OutputFeedbackSpec, ProblemSpec};
use crate::policies::{evaluate, KalmanState, PolicyInput, PolicyKind};
use crate::regret::regret_case_analytic;
use crate::riccati::{learning_penalty, RiccatiSolution};

/// Name recorded in output metadata.
pub const GENERATOR: &str = "ChaCha12Rng (rand_chacha 0.9), seed_from_u64(seed), stream 2*run (process) / 2*run+1 (measurement)";

/// Quantile levels reported by [`monte_carlo`].
pub const QUANTILE_LEVELS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

pub fn run_rng(seed: u64, run: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(2 * run + stream);
    rng
}

/// Inverse-CDF sampler over a finite support.
#[derive(Debug, Clone)]
pub struct Sampler {
    cdf: Vec<f64>,
}

impl Sampler {
    pub fn new(noise: &NoiseModel) -> Self {
        let mut acc = 0.0;
        let cdf = noise
            .probs()
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self { cdf }
    }

    /// First index whose cumulative probability exceeds `u`; the last bucket
    /// takes whatever rounding leaves over.
    pub fn index_of(&self, u: f64) -> usize {
        let last = self.cdf.len() - 1;
        self.cdf[..last].iter().position(|&c| u < c).unwrap_or(last)
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        self.index_of(rng.random::<f64>())
    }
}

/// Which system a simulation runs on.
#[derive(Debug, Clone, Copy)]
pub enum Setting<'a> {
    State(&'a ProblemSpec),
    Output(&'a OutputFeedbackSpec),
}

impl<'a> Setting<'a> {
    pub fn spec(&self) -> &'a ProblemSpec {
        match *self {
            Setting::State(s) => s,
            Setting::Output(of) => of.base(),
        }
    }

    fn check(&self, kind: PolicyKind) -> Result<()> {
        let output = matches!(self, Setting::Output(_));
        if kind.is_output_feedback() != output {
            return Err(Error::UnsupportedPolicy(format!(
                "{kind} on a {} instance",
                if output { "output-feedback" } else { "state-feedback" }
            )));
        }
        kind.validate(self.spec().horizon())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub policy: String,
    pub seed: u64,
    pub run: u64,
    /// `x(0..=T+1)`.
    pub states: Vec<Vector>,
    /// `u(0..=T)`.
    pub controls: Vec<Vector>,
    /// Zero-based support index of `w(t)`, `t = 0..=T`.
    pub noise_indices: Vec<usize>,
    /// `y(0..=T)`, output feedback only.
    pub measurements: Option<Vec<Vector>>,
    pub meas_noise_indices: Option<Vec<usize>>,
    /// `p_hat` in force when `u(t)` was chosen.
    pub estimator_path: Vec<Vec<f64>>,
    /// Realized `(u - u_ref)' Y(t) (u - u_ref)` against the known-statistics
    /// law at the same state (or one-step estimate).
    pub deviation: Vec<f64>,
    pub realized_cost: f64,
}

/// `sum_t x'Q(t)x + u'R(t)u + x(T+1)'P_{T+1}x(T+1)` on a stored trajectory.
pub fn recost(spec: &ProblemSpec, traj: &Trajectory) -> f64 {
    let mut acc = NeumaierSum::default();
    for (t, (x, u)) in traj.states.iter().zip(&traj.controls).enumerate() {
        acc.add(bilinear(x, spec.q(t), x));
        acc.add(bilinear(u, spec.r(t), u));
    }
    if let Some(x) = traj.states.get(traj.controls.len()) {
        acc.add(bilinear(x, spec.p_terminal(), x));
    }
    acc.value()
}

fn rollout_state(spec: &ProblemSpec, sol: &RiccatiSolution, kind: PolicyKind, seed: u64, run: u64) -> Result<Trajectory> {
    let horizon = spec.horizon();
    let noise = spec.noise();
    let sampler = Sampler::new(noise);
    let mut rng = run_rng(seed, run, 0);
    let mut est = EstimatorState::new(noise.len());
    let mut states = vec![spec.x0().clone()];
    let mut controls = Vec::with_capacity(horizon + 1);
    let mut noise_indices = Vec::with_capacity(horizon + 1);
    let mut estimator_path = Vec::with_capacity(horizon + 1);
    let mut deviation = Vec::with_capacity(horizon + 1);
    for t in 0..=horizon {
        if t >= 1 && kind.records_observation(t) {
            let obs = extract_noise_exact(&states[t], &states[t - 1], &controls[t - 1], spec)?;
            est.observe(obs.index)?;
        }
        let x = &states[t];
        let u = evaluate(kind, PolicyInput { t, x, estimator: &est, kalman: None }, sol, noise)?;
        deviation.push(sol.deviation_cost(t, &u, &sol.control(t, x, noise.mean())));
        estimator_path.push(est.p_hat());
        let h = sampler.sample(&mut rng);
        let next = spec.a() * x + spec.b() * &u + &noise.support()[h];
        noise_indices.push(h);
        controls.push(u);
        states.push(next);
    }
    let mut traj = Trajectory {
        policy: kind.to_string(),
        seed,
        run,
        states,
        controls,
        noise_indices,
        measurements: None,
        meas_noise_indices: None,
        estimator_path,
        deviation,
        realized_cost: 0.0,
    };
    traj.realized_cost = recost(spec, &traj);
    Ok(traj)
}

fn rollout_output(of: &OutputFeedbackSpec, sol: &RiccatiSolution, kind: PolicyKind, seed: u64, run: u64) -> Result<Trajectory> {
    let spec = of.base();
    let horizon = spec.horizon();
    let noise = spec.noise();
    let n = spec.state_dim();
    let sampler = Sampler::new(noise);
    let meas_sampler = Sampler::new(of.meas_noise());
    let mut rng_w = run_rng(seed, run, 0);
    let mut rng_v = run_rng(seed, run, 1);
    let x0 = if of.c0().amax() == 0.0 {
        of.mu0().clone()
    } else {
        let z = Vector::from_fn(n, |_, _| rng_v.sample::<f64, _>(StandardNormal));
        of.mu0() + psd_sqrt(of.c0()) * z
    };
    let use_filter = kind == PolicyKind::OutputKalmanOffline;
    let mut kalman = KalmanState::new(of);
    let mut est = EstimatorState::new(noise.len());
    let mut states = vec![x0];
    let mut controls: Vec<Vector> = Vec::with_capacity(horizon + 1);
    let mut noise_indices = Vec::with_capacity(horizon + 1);
    let mut measurements = Vec::with_capacity(horizon + 1);
    let mut meas_indices = Vec::with_capacity(horizon + 1);
    let mut estimator_path = Vec::with_capacity(horizon + 1);
    let mut deviation = Vec::with_capacity(horizon + 1);
    let mut xhat_prev: Option<Vector> = None;
    for t in 0..=horizon {
        let x = &states[t];
        let j = meas_sampler.sample(&mut rng_v);
        let y = of.c() * x + &of.meas_noise().support()[j];
        let xhat = of.one_step_estimate(&y);
        if let (Some(prev), Some(u_prev)) = (&xhat_prev, controls.last()) {
            if kind.records_observation(t) {
                est.observe(classify_noise_h3(&xhat, prev, u_prev, of)?.index)?;
            }
        }
        if use_filter {
            kalman = kalman.measurement_update(&y, of)?;
        }
        let input = PolicyInput {
            t,
            x: &xhat,
            estimator: &est,
            kalman: use_filter.then_some(&kalman),
        };
        let u = evaluate(kind, input, sol, noise)?;
        deviation.push(sol.deviation_cost(t, &u, &sol.control(t, &xhat, noise.mean())));
        estimator_path.push(est.p_hat());
        if use_filter {
            kalman = kalman.time_update(&u, of);
        }
        let h = sampler.sample(&mut rng_w);
        let next = spec.a() * x + spec.b() * &u + &noise.support()[h];
        noise_indices.push(h);
        meas_indices.push(j);
        measurements.push(y);
        controls.push(u);
        states.push(next);
        xhat_prev = Some(xhat);
    }
    let mut traj = Trajectory {
        policy: kind.to_string(),
        seed,
        run,
        states,
        controls,
        noise_indices,
        measurements: Some(measurements),
        meas_noise_indices: Some(meas_indices),
        estimator_path,
        deviation,
        realized_cost: 0.0,
    };
    traj.realized_cost = recost(spec, &traj);
    Ok(traj)
}

/// One seeded trajectory of `kind`. Run `run` of seed `seed` is the same
/// trajectory whether produced here or inside [`monte_carlo`].
pub fn simulate(setting: Setting<'_>, sol: &RiccatiSolution, kind: PolicyKind, seed: u64, run: u64) -> Result<Trajectory> {
    setting.check(kind)?;
    match setting {
        Setting::State(spec) => rollout_state(spec, sol, kind, seed, run),
        Setting::Output(of) => {
            if kind == PolicyKind::OutputOnlineLmmsue {
                of.require_h3()?;
            }
            rollout_output(of, sol, kind, seed, run)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloResult {
    pub policy: String,
    pub mean_cost: f64,
    /// Sample standard deviation over `sqrt(runs)`.
    pub std_error: f64,
    pub runs: usize,
    pub seed: u64,
    pub generator: &'static str,
    pub min: f64,
    pub max: f64,
    /// `(level, value)` pairs at [`QUANTILE_LEVELS`], linear interpolation.
    pub quantiles: Vec<(f64, f64)>,
}

/// Summary statistics of per-run costs, independent of their order of arrival.
pub fn summarize(policy: String, costs: &[f64], seed: u64) -> Result<MonteCarloResult> {
    let runs = costs.len();
    if runs == 0 {
        return Err(Error::InvalidArgument("need at least one run".into()));
    }
    // Shift by the first value so identical runs give exactly zero spread.
    let base = costs[0];
    let shift: NeumaierSum = costs.iter().map(|c| c - base).collect();
    let mean_shift = shift.value() / runs as f64;
    let mean_cost = base + mean_shift;
    let var = if runs > 1 {
        costs
            .iter()
            .map(|c| (c - base - mean_shift).powi(2))
            .collect::<NeumaierSum>()
            .value()
            / (runs - 1) as f64
    } else {
        0.0
    };
    let mut sorted = costs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let quantiles = QUANTILE_LEVELS
        .iter()
        .map(|&q| {
            let pos = q * (runs - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            (q, sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
        })
        .collect();
    Ok(MonteCarloResult {
        policy,
        mean_cost,
        std_error: (var / runs as f64).sqrt(),
        runs,
        seed,
        generator: GENERATOR,
        min: sorted[0],
        max: sorted[runs - 1],
        quantiles,
    })
}

/// Realized costs of runs `0..runs`, in run order.
pub fn run_costs(setting: Setting<'_>, sol: &RiccatiSolution, kind: PolicyKind, runs: usize, seed: u64) -> Result<Vec<f64>> {
    setting.check(kind)?;
    if let (Setting::Output(of), PolicyKind::OutputOnlineLmmsue) = (setting, kind) {
        of.require_h3()?;
    }
    let one = |r: usize| simulate(setting, sol, kind, seed, r as u64).map(|t| t.realized_cost);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..runs).into_par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..runs).map(one).collect()
    }
}

pub fn monte_carlo(setting: Setting<'_>, sol: &RiccatiSolution, kind: PolicyKind, runs: usize, seed: u64) -> Result<MonteCarloResult> {
    if runs == 0 {
        return Err(Error::InvalidArgument("need at least one run".into()));
    }
    let costs = run_costs(setting, sol, kind, runs, seed)?;
    summarize(kind.to_string(), &costs, seed)
}

/// Analytic expected one-step regret for `t = 0..=T`. Output-feedback
/// policies are measured against the known-statistics law at the one-step
/// estimate.
pub fn one_step_regret_trace(spec: &ProblemSpec, sol: &RiccatiSolution, kind: PolicyKind) -> Result<Vec<f64>> {
    match kind {
        PolicyKind::OutputOfflineSuboptimal => Ok(vec![0.0; sol.horizon() + 1]),
        PolicyKind::OutputOnlineLmmsue => Ok(learning_penalty(sol, spec.noise())),
        PolicyKind::OutputKalmanOffline => Err(Error::UnsupportedPolicy(format!("{kind} has no closed-form regret"))),
        _ => Ok(regret_case_analytic(kind, spec, sol)?.one_step),
    }
}

/// Formats `x` with 10 significant digits, in plain notation where that
/// stays short.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x == 0.0 { "0".into() } else { format!("{x}") };
    }
    let sci = format!("{x:.9e}");
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    if !(-5..15).contains(&exp) {
        return sci;
    }
    let decimals = (9 - exp).max(0) as usize;
    let plain = format!("{x:.decimals$}");
    if plain.contains('.') {
        plain.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        plain
    }
}

/// Writes `t, x_1..x_n, u_1..u_m, h, [y_1..y_n,] one_step_regret`, one
/// row per time step plus a final row carrying `x(T+1)` only. Support
/// indices are one-based in the file.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let n = traj.states[0].len();
    let m = traj.controls.first().map_or(0, Vector::len);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x_{i}")));
    header.extend((1..=m).map(|j| format!("u_{j}")));
    header.push("h".into());
    if traj.measurements.is_some() {
        header.extend((1..=n).map(|i| format!("y_{i}")));
    }
    header.push("one_step_regret".into());
    let err = |e: csv::Error| Error::Output(e.to_string());
    w.write_record(&header).map_err(err)?;
    for (t, x) in traj.states.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(x.iter().map(|&v| format_sig(v)));
        match traj.controls.get(t) {
            Some(u) => {
                row.extend(u.iter().map(|&v| format_sig(v)));
                row.push((traj.noise_indices[t] + 1).to_string());
            }
            None => row.extend(std::iter::repeat_n(String::new(), m + 1)),
        }
        if let Some(ys) = &traj.measurements {
            match ys.get(t) {
                Some(y) => row.extend(y.iter().map(|&v| format_sig(v))),
                None => row.extend(std::iter::repeat_n(String::new(), n)),
            }
        }
        row.push(traj.deviation.get(t).map_or(String::new(), |&d| format_sig(d)));
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| Error::Output(e.to_string()))
}
