//! Control laws. Every law is a pure function of the time index, the
//! current state (or state estimate), the Riccati solution and the
//! estimator, so expectations over them can be enumerated exactly.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{lmmsbe_weight, EstimatorState};
use crate::linalg::{spd_factor, symmetrize, Mat, Vector};
use crate::model::{NoiseModel, OutputFeedbackSpec};
use crate::riccati::RiccatiSolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PolicyKind {
    /// Knows the noise distribution.
    OfflineOptimal,
    /// Certainty equivalence with the running sample mean.
    OnlineLmmsue,
    /// Shrunk sample mean with the variance-optimal weight; needs the true
    /// statistics, so it is a benchmark only.
    Case1BiasedOracle,
    /// Stops learning after `t_bar` observations.
    Case2Frozen { t_bar: usize },
    /// Pure state feedback, ignores the noise mean.
    Case3NoEstimate,
    /// Known statistics applied to the one-step estimate `C^-1 y`.
    OutputOfflineSuboptimal,
    /// Sample mean from classified noise, applied to `C^-1 y`.
    OutputOnlineLmmsue,
    /// Known statistics applied to the Kalman filtered estimate.
    OutputKalmanOffline,
}

impl PolicyKind {
    pub fn is_output_feedback(&self) -> bool {
        matches!(
            self,
            PolicyKind::OutputOfflineSuboptimal
                | PolicyKind::OutputOnlineLmmsue
                | PolicyKind::OutputKalmanOffline
        )
    }

    /// Checks parameters that depend on the horizon.
    pub fn validate(&self, horizon: usize) -> Result<()> {
        if let PolicyKind::Case2Frozen { t_bar } = *self {
            if t_bar < 1 || t_bar >= horizon {
                return Err(Error::InvalidCutoff { t_bar, horizon });
            }
        }
        Ok(())
    }

    /// Whether the realization `w(t-1)`, revealed at time `t`, is fed to the estimator.
    pub fn records_observation(&self, t: usize) -> bool {
        match *self {
            PolicyKind::Case2Frozen { t_bar } => t <= t_bar,
            PolicyKind::OnlineLmmsue | PolicyKind::Case1BiasedOracle | PolicyKind::OutputOnlineLmmsue => true,
            _ => false,
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKind::OfflineOptimal => write!(f, "offline"),
            PolicyKind::OnlineLmmsue => write!(f, "online"),
            PolicyKind::Case1BiasedOracle => write!(f, "case1"),
            PolicyKind::Case2Frozen { t_bar } => write!(f, "case2:{t_bar}"),
            PolicyKind::Case3NoEstimate => write!(f, "case3"),
            PolicyKind::OutputOfflineSuboptimal => write!(f, "out-offline"),
            PolicyKind::OutputOnlineLmmsue => write!(f, "out-online"),
            PolicyKind::OutputKalmanOffline => write!(f, "out-kalman"),
        }
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Ok(match s {
            "offline" => PolicyKind::OfflineOptimal,
            "online" => PolicyKind::OnlineLmmsue,
            "case1" | "case1-oracle" => PolicyKind::Case1BiasedOracle,
            "case3" => PolicyKind::Case3NoEstimate,
            "out-offline" => PolicyKind::OutputOfflineSuboptimal,
            "out-online" => PolicyKind::OutputOnlineLmmsue,
            "out-kalman" => PolicyKind::OutputKalmanOffline,
            _ => {
                let t_bar = s
                    .strip_prefix("case2:")
                    .and_then(|v| v.parse::<usize>().ok())
                    .ok_or_else(|| Error::PolicyParse(s.to_string()))?;
                PolicyKind::Case2Frozen { t_bar }
            }
        })
    }
}

/// `u*(t) = -Y(t)^-1 (B'P(t+1)A x + B'(P(t+1) + L(t+1)) mu_w)`.
pub fn u_offline(t: usize, x: &Vector, sol: &RiccatiSolution, noise: &NoiseModel) -> Vector {
    sol.control(t, x, noise.mean())
}

/// The offline law with the sample mean in place of `mu_w`; at `t = 0` the
/// estimate is zero and this is pure state feedback.
pub fn u_online(t: usize, x: &Vector, sol: &RiccatiSolution, est: &EstimatorState, support: &[Vector]) -> Vector {
    sol.control(t, x, &est.mu_hat(support))
}

/// Oracle-weighted shrinkage of the sample mean.
pub fn u_case1(t: usize, x: &Vector, sol: &RiccatiSolution, est: &EstimatorState, noise: &NoiseModel) -> Result<Vector> {
    let n_obs = est.observations() as usize;
    if n_obs == 0 {
        return Ok(sol.gain(t) * x);
    }
    let c = lmmsbe_weight(n_obs, sol.d(t), noise.mean(), noise.covariance())?;
    let counts: Vec<f64> = est.counts().iter().map(|&k| k as f64 * c).collect();
    Ok(sol.control(t, x, &noise.combine(&counts)))
}

/// Sample mean frozen after `t_bar` observations. `est` must be the
/// estimator the caller stopped updating at `t_bar`.
pub fn u_case2(t: usize, x: &Vector, sol: &RiccatiSolution, est: &EstimatorState, support: &[Vector], t_bar: usize) -> Result<Vector> {
    PolicyKind::Case2Frozen { t_bar }.validate(sol.horizon())?;
    Ok(u_online(t, x, sol, est, support))
}

/// `u_3(t) = -Y(t)^-1 B'P(t+1)A x`.
pub fn u_case3(t: usize, x: &Vector, sol: &RiccatiSolution) -> Vector {
    sol.gain(t) * x
}

/// Known-statistics law evaluated at the one-step estimate.
pub fn u_output_offline(t: usize, xhat: &Vector, sol: &RiccatiSolution, noise: &NoiseModel) -> Vector {
    sol.control(t, xhat, noise.mean())
}

pub fn u_output_online(t: usize, xhat: &Vector, sol: &RiccatiSolution, est: &EstimatorState, support: &[Vector]) -> Vector {
    sol.control(t, xhat, &est.mu_hat(support))
}

/// Kalman filter for the offline output-feedback baseline; it needs the
/// true noise mean and covariance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KalmanState {
    /// `x_hat(t|t-1)`
    pub xhat_pred: Vector,
    /// `x_hat(t|t)`
    pub xhat_filt: Vector,
    pub lambda_pred: Mat,
    pub lambda_filt: Mat,
}

impl KalmanState {
    pub fn new(of: &OutputFeedbackSpec) -> Self {
        Self {
            xhat_pred: of.mu0().clone(),
            xhat_filt: of.mu0().clone(),
            lambda_pred: of.c0().clone(),
            lambda_filt: of.c0().clone(),
        }
    }

    /// Fuses the measurement `y(t)`. The covariance update uses the Joseph
    /// form, which stays PSD under round-off.
    pub fn measurement_update(&self, y: &Vector, of: &OutputFeedbackSpec) -> Result<Self> {
        let c = of.c();
        let lam = &self.lambda_pred;
        let innovation_cov = symmetrize(&(c * lam * c.transpose() + of.meas_noise().second_moment()));
        let chol = spd_factor(&innovation_cov, "innovation covariance")?;
        // K = Lam C' S^-1, computed as (S^-1 C Lam)'.
        let gain = chol.solve(&(c * lam)).transpose();
        let xhat_filt = &self.xhat_pred + &gain * (y - c * &self.xhat_pred);
        let n = lam.nrows();
        let i_kc = Mat::identity(n, n) - &gain * c;
        let lambda_filt = symmetrize(
            &(&i_kc * lam * i_kc.transpose() + &gain * of.meas_noise().second_moment() * gain.transpose()),
        );
        Ok(Self {
            xhat_pred: self.xhat_pred.clone(),
            xhat_filt,
            lambda_pred: lam.clone(),
            lambda_filt,
        })
    }

    /// Propagates to `t+1` after applying `u(t)`.
    pub fn time_update(&self, u: &Vector, of: &OutputFeedbackSpec) -> Self {
        let spec = of.base();
        let a = spec.a();
        let noise = spec.noise();
        let xhat_pred = a * &self.xhat_filt + spec.b() * u + noise.mean();
        let lambda_pred = symmetrize(&(a * &self.lambda_filt * a.transpose() + noise.covariance()));
        Self {
            xhat_pred: xhat_pred.clone(),
            xhat_filt: xhat_pred,
            lambda_pred: lambda_pred.clone(),
            lambda_filt: lambda_pred,
        }
    }
}

/// Measurement update with `y(t)` followed by the time update with `u(t)`.
pub fn kalman_step(ks: &KalmanState, y: &Vector, u: &Vector, of: &OutputFeedbackSpec) -> Result<KalmanState> {
    Ok(ks.measurement_update(y, of)?.time_update(u, of))
}

/// Everything a policy may look at when choosing `u(t)`.
#[derive(Debug, Clone, Copy)]
pub struct PolicyInput<'a> {
    pub t: usize,
    /// The true state for state-feedback laws, `C^-1 y(t)` for output-feedback laws.
    pub x: &'a Vector,
    pub estimator: &'a EstimatorState,
    /// Filtered state, required by the Kalman baseline.
    pub kalman: Option<&'a KalmanState>,
}

/// Dispatches to the law named by `kind`. `noise` carries the true
/// statistics; only oracle laws read its probabilities.
pub fn evaluate(kind: PolicyKind, input: PolicyInput<'_>, sol: &RiccatiSolution, noise: &NoiseModel) -> Result<Vector> {
    let PolicyInput { t, x, estimator, kalman } = input;
    Ok(match kind {
        PolicyKind::OfflineOptimal => u_offline(t, x, sol, noise),
        PolicyKind::OnlineLmmsue => u_online(t, x, sol, estimator, noise.support()),
        PolicyKind::Case1BiasedOracle => u_case1(t, x, sol, estimator, noise)?,
        PolicyKind::Case2Frozen { t_bar } => u_case2(t, x, sol, estimator, noise.support(), t_bar)?,
        PolicyKind::Case3NoEstimate => u_case3(t, x, sol),
        PolicyKind::OutputOfflineSuboptimal => u_output_offline(t, x, sol, noise),
        PolicyKind::OutputOnlineLmmsue => u_output_online(t, x, sol, estimator, noise.support()),
        PolicyKind::OutputKalmanOffline => {
            let ks = kalman.ok_or_else(|| Error::UnsupportedPolicy("out-kalman without filter state".into()))?;
            u_offline(t, &ks.xhat_filt, sol, noise)
        }
    })
}
