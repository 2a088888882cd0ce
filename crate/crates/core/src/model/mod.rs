//! Problem instances: finite-support noise, the LQ problem data and the
//! output-feedback extension.

mod examples;
mod file;

pub use examples::{
    example1_noise, example2_noise, scenario_predator_prey, scenario_product_pricing, PricingParams,
};
pub use file::{NoiseFile, OutputFeedbackFile, Scenario, ScenarioFile};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    check_pd, check_psd, is_observable, is_stabilizable, psd_sqrt, smallest_singular_value,
    spectral_norm, symmetrize, Mat, Vector,
};

/// Probabilities may drift this far from summing to one before being rejected.
pub const PROB_SUM_TOL: f64 = 1e-9;

/// I.i.d. noise taking one of `M` known values with (unknown to the
/// controller) probabilities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseModel {
    support: Vec<Vector>,
    probs: Vec<f64>,
    mean: Vector,
    second_moment: Mat,
    covariance: Mat,
    bound: f64,
}

impl NoiseModel {
    pub fn new(support: Vec<Vector>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::EmptySupport);
        }
        if probs.len() != support.len() {
            return Err(Error::Dimension(format!(
                "{} support points but {} probabilities",
                support.len(),
                probs.len()
            )));
        }
        let n = support[0].len();
        if let Some(bad) = support.iter().find(|w| w.len() != n) {
            return Err(Error::Dimension(format!(
                "support points have lengths {n} and {}",
                bad.len()
            )));
        }
        for (index, &value) in probs.iter().enumerate() {
            if value < 0.0 || !value.is_finite() {
                return Err(Error::NegativeProbability { index, value });
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::ProbabilitySum(total));
        }

        let mut mean = Vector::zeros(n);
        let mut second_moment = Mat::zeros(n, n);
        for (w, &p) in support.iter().zip(&probs) {
            mean += w * p;
            second_moment += w * w.transpose() * p;
        }
        let second_moment = symmetrize(&second_moment);
        let covariance = symmetrize(&(&second_moment - &mean * mean.transpose()));
        let bound = support.iter().map(|w| w.norm()).fold(0.0, f64::max);

        Ok(Self {
            support,
            probs,
            mean,
            second_moment,
            covariance,
            bound,
        })
    }

    /// Convenience constructor from plain slices.
    pub fn from_slices(support: &[&[f64]], probs: &[f64]) -> Result<Self> {
        Self::new(
            support.iter().map(|w| Vector::from_row_slice(w)).collect(),
            probs.to_vec(),
        )
    }

    pub fn point_mass(w: Vector) -> Self {
        Self::new(vec![w], vec![1.0]).expect("single point mass is always valid")
    }

    pub fn support(&self) -> &[Vector] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn mean(&self) -> &Vector {
        &self.mean
    }

    pub fn second_moment(&self) -> &Mat {
        &self.second_moment
    }

    pub fn covariance(&self) -> &Mat {
        &self.covariance
    }

    /// `max_i ||w_i||`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Number of support points `M`.
    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.support[0].len()
    }

    /// `W p` for an arbitrary weight vector over the support.
    pub fn combine(&self, weights: &[f64]) -> Vector {
        let mut out = Vector::zeros(self.dim());
        for (w, &c) in self.support.iter().zip(weights) {
            if c != 0.0 {
                out += w * c;
            }
        }
        out
    }

    /// Smallest pairwise distance between distinct support points.
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.support.len() {
            for j in (i + 1)..self.support.len() {
                best = best.min((&self.support[i] - &self.support[j]).norm());
            }
        }
        best
    }

    /// Index of the nearest support point and its distance; ties go to the
    /// lowest index.
    pub fn nearest(&self, w: &Vector) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, s) in self.support.iter().enumerate() {
            let d = (w - s).norm();
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    /// Same support with every point negated.
    pub fn negated(&self) -> Self {
        Self::new(
            self.support.iter().map(|w| -w).collect(),
            self.probs.clone(),
        )
        .expect("negation preserves validity")
    }
}

/// The full finite-horizon optimization instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemSpec {
    a: Mat,
    b: Mat,
    q_seq: Vec<Mat>,
    r_seq: Vec<Mat>,
    p_terminal: Mat,
    x0: Vector,
    horizon: usize,
    noise: NoiseModel,
}

impl ProblemSpec {
    /// Instance with time-invariant weights `Q(t) = Q`, `R(t) = R`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: Mat,
        b: Mat,
        q: Mat,
        r: Mat,
        p_terminal: Mat,
        x0: Vector,
        horizon: usize,
        noise: NoiseModel,
    ) -> Result<Self> {
        let q_seq = vec![q; horizon + 1];
        let r_seq = vec![r; horizon + 1];
        Self::with_weight_sequences(a, b, q_seq, r_seq, p_terminal, x0, noise)
    }

    /// Instance with explicit weight sequences; the horizon is `q_seq.len() - 1`.
    pub fn with_weight_sequences(
        a: Mat,
        b: Mat,
        q_seq: Vec<Mat>,
        r_seq: Vec<Mat>,
        p_terminal: Mat,
        x0: Vector,
        noise: NoiseModel,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension("A must be square".into()));
        }
        if b.nrows() != n {
            return Err(Error::Dimension(format!("B has {} rows, expected {n}", b.nrows())));
        }
        let m = b.ncols();
        if q_seq.is_empty() || q_seq.len() != r_seq.len() {
            return Err(Error::Dimension(
                "Q and R sequences must be nonempty and of equal length".into(),
            ));
        }
        if x0.len() != n {
            return Err(Error::Dimension(format!("x0 has length {}, expected {n}", x0.len())));
        }
        if noise.dim() != n {
            return Err(Error::Dimension(format!(
                "noise has dimension {}, expected {n}",
                noise.dim()
            )));
        }
        if p_terminal.shape() != (n, n) {
            return Err(Error::Dimension("P_terminal must be n x n".into()));
        }
        for (t, q) in q_seq.iter().enumerate() {
            if q.shape() != (n, n) {
                return Err(Error::Dimension(format!("Q({t}) must be n x n")));
            }
            check_psd(q, &format!("Q({t})"))?;
        }
        for (t, r) in r_seq.iter().enumerate() {
            if r.shape() != (m, m) {
                return Err(Error::Dimension(format!("R({t}) must be m x m")));
            }
            check_pd(r, &format!("R({t})"))?;
        }
        check_psd(&p_terminal, "P_terminal")?;
        let horizon = q_seq.len() - 1;
        Ok(Self {
            a,
            b,
            q_seq: q_seq.iter().map(symmetrize).collect(),
            r_seq: r_seq.iter().map(symmetrize).collect(),
            p_terminal: symmetrize(&p_terminal),
            x0,
            horizon,
            noise,
        })
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn b(&self) -> &Mat {
        &self.b
    }

    pub fn q(&self, t: usize) -> &Mat {
        &self.q_seq[t]
    }

    pub fn r(&self, t: usize) -> &Mat {
        &self.r_seq[t]
    }

    pub fn q_seq(&self) -> &[Mat] {
        &self.q_seq
    }

    pub fn r_seq(&self) -> &[Mat] {
        &self.r_seq
    }

    pub fn p_terminal(&self) -> &Mat {
        &self.p_terminal
    }

    pub fn x0(&self) -> &Vector {
        &self.x0
    }

    /// Final decision time `T`; decisions are made at `t = 0..=T`.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn with_x0(&self, x0: Vector) -> Result<Self> {
        if x0.len() != self.state_dim() {
            return Err(Error::Dimension(format!(
                "x0 has length {}, expected {}",
                x0.len(),
                self.state_dim()
            )));
        }
        Ok(Self { x0, ..self.clone() })
    }

    pub fn with_noise(&self, noise: NoiseModel) -> Result<Self> {
        if noise.dim() != self.state_dim() {
            return Err(Error::Dimension("noise dimension differs from state".into()));
        }
        Ok(Self {
            noise,
            ..self.clone()
        })
    }

    /// Same data over a different horizon. Time-varying weights are
    /// truncated or extended with their last entry.
    pub fn with_horizon(&self, horizon: usize) -> Self {
        let extend = |seq: &[Mat]| -> Vec<Mat> {
            (0..=horizon)
                .map(|t| seq[t.min(seq.len() - 1)].clone())
                .collect()
        };
        Self {
            q_seq: extend(&self.q_seq),
            r_seq: extend(&self.r_seq),
            horizon,
            ..self.clone()
        }
    }

    /// Realizes `sum_t beta^t E[x'Qx + u'Ru]` by geometric scaling of the
    /// weight sequences. The terminal weight is scaled by `beta^(T+1)`.
    pub fn apply_discount(&self, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidDiscount(beta));
        }
        if beta == 1.0 {
            return Ok(self.clone());
        }
        let mut factor = 1.0;
        let mut q_seq = Vec::with_capacity(self.q_seq.len());
        let mut r_seq = Vec::with_capacity(self.r_seq.len());
        for (q, r) in self.q_seq.iter().zip(&self.r_seq) {
            q_seq.push(q * factor);
            r_seq.push(r * factor);
            factor *= beta;
        }
        Ok(Self {
            q_seq,
            r_seq,
            p_terminal: &self.p_terminal * factor,
            ..self.clone()
        })
    }

    /// Whether the weights are constant in time.
    pub fn is_time_invariant(&self) -> bool {
        self.q_seq.iter().all(|q| q == &self.q_seq[0])
            && self.r_seq.iter().all(|r| r == &self.r_seq[0])
    }

    pub fn is_stabilizable(&self) -> bool {
        is_stabilizable(&self.a, &self.b)
    }

    /// Observability of `(A, Q(0)^{1/2})`.
    pub fn is_observable(&self) -> bool {
        is_observable(&self.a, &psd_sqrt(&self.q_seq[0]))
    }
}

/// Output-feedback instance: `y(t) = C x(t) + v(t)` with bounded zero-mean
/// measurement noise and a random initial state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputFeedbackSpec {
    base: ProblemSpec,
    c: Mat,
    c_inv: Mat,
    meas_noise: NoiseModel,
    mu0: Vector,
    c0: Mat,
    h3_margin: f64,
}

impl OutputFeedbackSpec {
    pub fn new(
        base: ProblemSpec,
        c: Mat,
        meas_noise: NoiseModel,
        mu0: Vector,
        c0: Mat,
    ) -> Result<Self> {
        let n = base.state_dim();
        if c.shape() != (n, n) {
            return Err(Error::Dimension("C must be n x n".into()));
        }
        if meas_noise.dim() != n || mu0.len() != n || c0.shape() != (n, n) {
            return Err(Error::Dimension(
                "measurement noise, mu0 and C0 must match the state dimension".into(),
            ));
        }
        let sigma_min = smallest_singular_value(&c);
        if sigma_min < 1e-12 {
            return Err(Error::SingularMeasurement(sigma_min));
        }
        let mean_norm = meas_noise.mean().norm();
        if mean_norm > 1e-12 {
            return Err(Error::NonZeroMeasurementMean(mean_norm));
        }
        check_psd(&c0, "C0")?;
        let c_inv = c
            .clone()
            .try_inverse()
            .ok_or(Error::SingularMeasurement(sigma_min))?;
        // ||C^-1 v|| <= v_b / sigma_min(C); equals v_b / ||C|| for scaled orthogonal C.
        let spread = 2.0 * (1.0 + spectral_norm(base.a())) * meas_noise.bound() / sigma_min;
        let h3_margin = base.noise().min_separation() - spread;
        Ok(Self {
            base,
            c,
            c_inv,
            meas_noise,
            mu0,
            c0: symmetrize(&c0),
            h3_margin,
        })
    }

    pub fn base(&self) -> &ProblemSpec {
        &self.base
    }

    pub fn c(&self) -> &Mat {
        &self.c
    }

    pub fn c_inv(&self) -> &Mat {
        &self.c_inv
    }

    pub fn meas_noise(&self) -> &NoiseModel {
        &self.meas_noise
    }

    pub fn mu0(&self) -> &Vector {
        &self.mu0
    }

    pub fn c0(&self) -> &Mat {
        &self.c0
    }

    /// `min_{i != j} ||w_i - w_j|| - 2 (1 + ||A||) v_b / sigma_min(C)`;
    /// positive means every realization is recoverable from measurements.
    pub fn h3_margin(&self) -> f64 {
        self.h3_margin
    }

    /// Radius within which the one-step noise estimate always falls.
    pub fn classification_radius(&self) -> f64 {
        (1.0 + spectral_norm(self.base.a())) * self.meas_noise.bound()
            / smallest_singular_value(&self.c)
    }

    pub fn require_h3(&self) -> Result<()> {
        if self.h3_margin > 0.0 {
            Ok(())
        } else {
            Err(Error::H3Violated(self.h3_margin))
        }
    }

    /// `C^-1 Q_v C^-T`, the covariance of the one-step state estimate error.
    pub fn qbar_v(&self) -> Mat {
        symmetrize(&(&self.c_inv * self.meas_noise.second_moment() * self.c_inv.transpose()))
    }

    /// `x_hat = C^-1 y`.
    pub fn one_step_estimate(&self, y: &Vector) -> Vector {
        &self.c_inv * y
    }

    pub fn with_horizon(&self, horizon: usize) -> Self {
        Self {
            base: self.base.with_horizon(horizon),
            ..self.clone()
        }
    }
}
