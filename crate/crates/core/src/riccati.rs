//! Backward recursions of the finite-horizon problem, their algebraic
//! limit, and the closed-form expected costs built from them.
//!
//! For `t = T, ..., 0`, with `P(T+1) = P_terminal` and `L(T+1) = 0`:
//!
//! ```text
//! Y(t) = R(t) + B'P(t+1)B
//! P(t) = A'P(t+1)A + Q(t) - A'P(t+1)B Y(t)^-1 B'P(t+1)A
//! W(t) = A' - A'P(t+1)B Y(t)^-1 B'                     (adjoint transition)
//! L(t) = W(t) (P(t+1) + L(t+1))
//! D(t) = (P(t+1)+L(t+1))' B Y(t)^-1 B' (P(t+1)+L(t+1))
//! H(t) = -mu'D(t)mu + 2 mu'L(t+1)mu + Tr(P(t+1) Q_w)
//! ```
//!
//! `Y(t)` is never inverted explicitly; every product with its inverse goes
//! through a Cholesky solve.

use nalgebra::{Cholesky, Dyn};

use crate::error::{Error, Result};
use crate::linalg::{
    bilinear, check_pd, check_psd, compensated_sum, is_observable, is_stabilizable, psd_sqrt,
    spd_factor, symmetrize, trace_product, Mat, NeumaierSum, Vector,
};
use crate::model::{NoiseModel, OutputFeedbackSpec, ProblemSpec};

pub const ARE_TOL: f64 = 1e-12;
pub const ARE_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    horizon: usize,
    upsilon: Vec<Mat>,
    upsilon_chol: Vec<Cholesky<f64, Dyn>>,
    p: Vec<Mat>,
    l: Vec<Mat>,
    h: Vec<f64>,
    omega: Vec<Mat>,
    d: Vec<Mat>,
    gain: Vec<Mat>,
    feedforward: Vec<Mat>,
}

impl RiccatiSolution {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `Y(t) = R(t) + B'P(t+1)B`, `t = 0..=T`.
    pub fn upsilon(&self, t: usize) -> &Mat {
        &self.upsilon[t]
    }

    /// `P(t)`, `t = 0..=T+1`.
    pub fn p(&self, t: usize) -> &Mat {
        &self.p[t]
    }

    /// Adjoint `L(t)`, `t = 0..=T+1`.
    pub fn l(&self, t: usize) -> &Mat {
        &self.l[t]
    }

    pub fn h(&self, t: usize) -> f64 {
        self.h[t]
    }

    pub fn h_values(&self) -> &[f64] {
        &self.h
    }

    pub fn omega(&self, t: usize) -> &Mat {
        &self.omega[t]
    }

    /// Weight of the mean-estimation error in the one-step regret.
    pub fn d(&self, t: usize) -> &Mat {
        &self.d[t]
    }

    /// State-feedback gain `K_P(t) = -Y(t)^-1 B'P(t+1)A`.
    pub fn gain(&self, t: usize) -> &Mat {
        &self.gain[t]
    }

    /// `G(t) = Y(t)^-1 B'(P(t+1) + L(t+1))`; the policy applies `-G(t) mu`.
    pub fn feedforward(&self, t: usize) -> &Mat {
        &self.feedforward[t]
    }

    /// `Y(t)^-1 rhs` via the stored Cholesky factor.
    pub fn solve_upsilon(&self, t: usize, rhs: &Vector) -> Vector {
        self.upsilon_chol[t].solve(rhs)
    }

    /// Affine control `K_P(t) x - G(t) mu` shared by every certainty
    /// equivalent policy.
    pub fn control(&self, t: usize, x: &Vector, mean_estimate: &Vector) -> Vector {
        &self.gain[t] * x - &self.feedforward[t] * mean_estimate
    }

    /// `(u - v)' Y(t) (u - v)`.
    pub fn deviation_cost(&self, t: usize, u: &Vector, v: &Vector) -> f64 {
        let e = u - v;
        bilinear(&e, &self.upsilon[t], &e)
    }

    /// `L(t)` rebuilt as `sum_{i=t+1}^{T+1} (prod_{j=t}^{i-1} W(j)) P(i)`.
    pub fn adjoint_product_form(&self, t: usize) -> Mat {
        let n = self.p[0].nrows();
        let mut out = Mat::zeros(n, n);
        let mut prod = Mat::identity(n, n);
        for i in (t + 1)..=(self.horizon + 1) {
            prod = &prod * &self.omega[i - 1];
            out += &prod * &self.p[i];
        }
        out
    }
}

/// Runs the backward recursions for `spec`.
pub fn solve_recursions(spec: &ProblemSpec) -> Result<RiccatiSolution> {
    let horizon = spec.horizon();
    let a = spec.a();
    let b = spec.b();
    let n = spec.state_dim();
    let mu = spec.noise().mean();
    let qw = spec.noise().second_moment();

    let mut p = vec![Mat::zeros(n, n); horizon + 2];
    let mut l = vec![Mat::zeros(n, n); horizon + 2];
    p[horizon + 1] = spec.p_terminal().clone();

    let mut upsilon = Vec::with_capacity(horizon + 1);
    let mut upsilon_chol = Vec::with_capacity(horizon + 1);
    let mut h = Vec::with_capacity(horizon + 1);
    let mut omega = Vec::with_capacity(horizon + 1);
    let mut d = Vec::with_capacity(horizon + 1);
    let mut gain = Vec::with_capacity(horizon + 1);
    let mut feedforward = Vec::with_capacity(horizon + 1);

    for t in (0..=horizon).rev() {
        let p_next = &p[t + 1];
        let l_next = &l[t + 1];

        let ups = symmetrize(&(spec.r(t) + b.transpose() * p_next * b));
        let chol = spd_factor(&ups, &format!("Upsilon({t})"))?;

        let bt_pa = b.transpose() * p_next * a;
        let k = -chol.solve(&bt_pa);
        let s = p_next + l_next;
        let bt_s = b.transpose() * &s;
        let g = chol.solve(&bt_s);

        let p_t = symmetrize(&(a.transpose() * p_next * a + spec.q(t) + bt_pa.transpose() * &k));
        let om = a.transpose() + k.transpose() * b.transpose();
        let l_t = &om * &s;
        let d_t = symmetrize(&(bt_s.transpose() * &g));
        let h_t = compensated_sum([
            -bilinear(mu, &d_t, mu),
            2.0 * bilinear(mu, l_next, mu),
            trace_product(p_next, qw),
        ]);

        p[t] = p_t;
        l[t] = l_t;
        upsilon.push(ups);
        upsilon_chol.push(chol);
        h.push(h_t);
        omega.push(om);
        d.push(d_t);
        gain.push(k);
        feedforward.push(g);
    }

    for v in [&mut upsilon, &mut omega, &mut d, &mut gain, &mut feedforward] {
        v.reverse();
    }
    upsilon_chol.reverse();
    h.reverse();

    Ok(RiccatiSolution {
        horizon,
        upsilon,
        upsilon_chol,
        p,
        l,
        h,
        omega,
        d,
        gain,
        feedforward,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AreSolution {
    pub p_hat: Mat,
    pub iterations: usize,
    /// `||P_hat - Phi(P_hat)||_inf` after the last iterate.
    pub residual: f64,
}

fn riccati_map(a: &Mat, b: &Mat, q: &Mat, r: &Mat, p: &Mat) -> Result<Mat> {
    let ups = r + b.transpose() * p * b;
    let chol = spd_factor(&ups, "R + B'PB")?;
    let bt_pa = b.transpose() * p * a;
    Ok(symmetrize(
        &(a.transpose() * p * a + q - bt_pa.transpose() * chol.solve(&bt_pa)),
    ))
}

/// Fixed-point iteration of the Riccati map from `P = 0`.
pub fn solve_are(a: &Mat, b: &Mat, q: &Mat, r: &Mat, tol: f64, max_iter: usize) -> Result<AreSolution> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || q.shape() != (n, n) || r.shape() != (b.ncols(), b.ncols()) {
        return Err(Error::Dimension("inconsistent ARE data".into()));
    }
    check_psd(q, "Q")?;
    check_pd(r, "R")?;
    if !is_stabilizable(a, b) {
        return Err(Error::NotStabilizable);
    }
    if !is_observable(a, &psd_sqrt(q)) {
        return Err(Error::NotObservable);
    }

    let mut p = Mat::zeros(n, n);
    let mut change = f64::INFINITY;
    for iter in 1..=max_iter {
        let next = riccati_map(a, b, q, r, &p)?;
        change = (&next - &p).amax();
        p = next;
        if change < tol {
            let residual = (&riccati_map(a, b, q, r, &p)? - &p).amax();
            return Ok(AreSolution {
                p_hat: p,
                iterations: iter,
                residual,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual: change,
    })
}

/// `J* = x0'P(0)x0 + 2 x0'L(0)mu + sum_t H(t)`, the expected cost of the
/// optimal policy that knows the noise distribution.
pub fn offline_cost(spec: &ProblemSpec, sol: &RiccatiSolution) -> f64 {
    let x0 = spec.x0();
    let mu = spec.noise().mean();
    let mut acc: NeumaierSum = sol.h.iter().copied().collect();
    acc.add(bilinear(x0, &sol.p[0], x0));
    acc.add(2.0 * bilinear(x0, &sol.l[0], mu));
    acc.value()
}

/// Price of learning the mean: `Tr(D(0) mu mu')` at `t = 0` and
/// `Tr(D(t) C_w) / t` afterwards.
pub fn learning_penalty(sol: &RiccatiSolution, noise: &NoiseModel) -> Vec<f64> {
    let mu = noise.mean();
    let cw = noise.covariance();
    (0..=sol.horizon)
        .map(|t| {
            if t == 0 {
                bilinear(mu, &sol.d[0], mu)
            } else {
                trace_product(&sol.d[t], cw) / t as f64
            }
        })
        .collect()
}

/// Expected cost of the sample-mean certainty-equivalent policy.
pub fn online_cost_analytic(spec: &ProblemSpec, sol: &RiccatiSolution) -> f64 {
    let mut acc: NeumaierSum = learning_penalty(sol, spec.noise()).into_iter().collect();
    acc.add(offline_cost(spec, sol));
    acc.value()
}

/// Closed-form costs in the output-feedback setting, with the
/// reduced-cost view (on the one-step estimate) and the offset that maps it
/// back to the true-state cost.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct OutputCosts {
    /// Expected cost of the one-step-estimate policy that knows the noise law.
    pub offline: f64,
    /// Expected cost of the same policy driven by the sample-mean estimate.
    pub online: f64,
    /// `sum_t Tr(Q(t) Qbar_v) + Tr(P_{T+1} Qbar_v)`.
    pub offset: f64,
    /// `offline + offset`: the cost measured on the estimated state.
    pub reduced_offline: f64,
}

/// `sum_t Tr(Q(t) Qbar_v) + Tr(P_{T+1} Qbar_v)`.
pub fn measurement_offset(of: &OutputFeedbackSpec) -> f64 {
    let qbar = of.qbar_v();
    let spec = of.base();
    let mut acc: NeumaierSum = spec.q_seq().iter().map(|q| trace_product(q, &qbar)).collect();
    acc.add(trace_product(spec.p_terminal(), &qbar));
    acc.value()
}

/// Aggregate constant of the one-step-estimate policy's cost:
///
/// ```text
/// sum_t { -mu'D(t)mu + 2mu'L(t+1)mu + Tr(A'P(t+1)B Y^-1 B'P(t+1)A Qbar_v) + Tr(P(t+1)Q_w) }
///   - Tr(P(0) Qbar_v)
/// ```
pub fn output_h_total(of: &OutputFeedbackSpec, sol: &RiccatiSolution) -> f64 {
    let spec = of.base();
    let a = spec.a();
    let b = spec.b();
    let qbar = of.qbar_v();
    let mut acc = NeumaierSum::default();
    for t in 0..=sol.horizon {
        acc.add(sol.h[t]);
        let bt_pa = b.transpose() * &sol.p[t + 1] * a;
        let m = bt_pa.transpose() * sol.upsilon_chol[t].solve(&bt_pa);
        acc.add(trace_product(&m, &qbar));
    }
    acc.add(-trace_product(&sol.p[0], &qbar));
    acc.value()
}

/// Expected costs of the one-step-estimate policies. The initial state is
/// random with mean `mu0` and covariance `C0`, so the quadratic in
/// `x_hat(0)` is averaged: `E[x_hat(0)'P x_hat(0)] = mu0'P mu0 + Tr(P (C0 + Qbar_v))`.
pub fn output_costs(of: &OutputFeedbackSpec, sol: &RiccatiSolution) -> OutputCosts {
    let spec = of.base();
    let mu = spec.noise().mean();
    let mu0 = of.mu0();
    let cov0 = of.c0() + of.qbar_v();
    let mut acc = NeumaierSum::default();
    acc.add(bilinear(mu0, &sol.p[0], mu0));
    acc.add(trace_product(&sol.p[0], &cov0));
    acc.add(2.0 * bilinear(mu0, &sol.l[0], mu));
    acc.add(output_h_total(of, sol));
    let offline = acc.value();
    let online = compensated_sum(
        std::iter::once(offline).chain(learning_penalty(sol, spec.noise())),
    );
    let offset = measurement_offset(of);
    OutputCosts {
        offline,
        online,
        offset,
        reduced_offline: offline + offset,
    }
}
