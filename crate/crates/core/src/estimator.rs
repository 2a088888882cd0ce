//! Sample-mean (minimum-variance unbiased) estimation of the support
//! probabilities, recovery of noise realizations from the trajectory, and
//! the oracle shrinkage weight of the biased alternative.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{bilinear, trace_product, Mat, Vector};
use crate::model::{OutputFeedbackSpec, ProblemSpec};

/// Largest residual accepted when reading the noise off an exact state trajectory.
pub const EXTRACTION_TOL: f64 = 1e-9;

/// Indicator counts of the observed support indices.
///
/// The estimate is `counts / t_obs`, recomputed on demand so no rounding
/// accumulates. Before the first observation the estimate is the zero vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct EstimatorState {
    counts: Vec<u64>,
    t_obs: u64,
}

impl EstimatorState {
    pub fn new(support_len: usize) -> Self {
        Self {
            counts: vec![0; support_len],
            t_obs: 0,
        }
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        let t_obs = counts.iter().sum();
        Self { counts, t_obs }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn observations(&self) -> u64 {
        self.t_obs
    }

    pub fn support_len(&self) -> usize {
        self.counts.len()
    }

    /// Records one more realization with index `h`.
    pub fn observe(&mut self, h: usize) -> Result<()> {
        let len = self.counts.len();
        let slot = self
            .counts
            .get_mut(h)
            .ok_or(Error::IndexOutOfRange { index: h, len })?;
        *slot += 1;
        self.t_obs += 1;
        Ok(())
    }

    pub fn update(&self, h: usize) -> Result<Self> {
        let mut next = self.clone();
        next.observe(h)?;
        Ok(next)
    }

    pub fn p_hat(&self) -> Vec<f64> {
        if self.t_obs == 0 {
            return vec![0.0; self.counts.len()];
        }
        let t = self.t_obs as f64;
        self.counts.iter().map(|&c| c as f64 / t).collect()
    }

    /// `W p_hat`.
    pub fn mu_hat(&self, support: &[Vector]) -> Vector {
        let n = support.first().map_or(0, Vector::len);
        let mut out = Vector::zeros(n);
        if self.t_obs == 0 {
            return out;
        }
        for (w, &c) in support.iter().zip(&self.counts) {
            if c != 0 {
                out += w * c as f64;
            }
        }
        out / self.t_obs as f64
    }
}

/// Sample mean of indicator observations.
pub fn batch_mean(history: &[usize], support_len: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; support_len];
    if history.is_empty() {
        return Ok(out);
    }
    let t = history.len() as f64;
    for &h in history {
        if h >= support_len {
            return Err(Error::IndexOutOfRange {
                index: h,
                len: support_len,
            });
        }
        out[h] += 1.0;
    }
    Ok(out.into_iter().map(|c| c / t).collect())
}

/// One step of the floating-point recursion
/// `p_i(t) = ((t-1) p_i(t-1) + [i == h]) / t` where `t = t_prev + 1`.
pub fn recursive_update(prev: &[f64], t_prev: u64, h: usize) -> Result<Vec<f64>> {
    if h >= prev.len() {
        return Err(Error::IndexOutOfRange {
            index: h,
            len: prev.len(),
        });
    }
    let t = (t_prev + 1) as f64;
    let tp = t_prev as f64;
    Ok(prev
        .iter()
        .enumerate()
        .map(|(i, &p)| (tp * p + if i == h { 1.0 } else { 0.0 }) / t)
        .collect())
}

/// Linear estimate `sum_i c_i xi(i)` with arbitrary observation weights.
pub fn weighted_estimate(history: &[usize], weights: &[f64], support_len: usize) -> Result<Vec<f64>> {
    if weights.len() != history.len() {
        return Err(Error::Dimension(format!(
            "{} weights for {} observations",
            weights.len(),
            history.len()
        )));
    }
    let mut out = vec![0.0; support_len];
    for (&h, &c) in history.iter().zip(weights) {
        if h >= support_len {
            return Err(Error::IndexOutOfRange {
                index: h,
                len: support_len,
            });
        }
        out[h] += c;
    }
    Ok(out)
}

/// A recovered noise realization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observation {
    /// Zero-based support index.
    pub index: usize,
    /// The raw recovered vector.
    pub raw: Vector,
    /// Distance from `raw` to the chosen support point.
    pub residual: f64,
}

/// Reads `w(t-1) = x(t) - A x(t-1) - B u(t-1)` off an exactly observed
/// trajectory and identifies its support point.
pub fn extract_noise_exact(x_next: &Vector, x: &Vector, u: &Vector, spec: &ProblemSpec) -> Result<Observation> {
    let raw = x_next - spec.a() * x - spec.b() * u;
    let (index, residual) = spec.noise().nearest(&raw);
    let scale = 1.0 + x_next.amax().max(x.amax());
    if residual >= EXTRACTION_TOL * scale {
        return Err(Error::ExtractionResidual(residual));
    }
    Ok(Observation {
        index,
        raw,
        residual,
    })
}

/// Nearest-support classification of `x_hat(t) - A x_hat(t-1) - B u(t-1)`
/// from one-step state estimates. Exact whenever the separation margin is positive.
pub fn classify_noise_h3(
    xhat_next: &Vector,
    xhat: &Vector,
    u: &Vector,
    of: &OutputFeedbackSpec,
) -> Result<Observation> {
    of.require_h3()?;
    let spec = of.base();
    let raw = xhat_next - spec.a() * xhat - spec.b() * u;
    let (index, residual) = spec.noise().nearest(&raw);
    Ok(Observation {
        index,
        raw,
        residual,
    })
}

/// Common per-observation weight minimizing the one-step regret of a
/// linear biased estimate at time `t`:
/// `Tr(D mu mu') / (t Tr(D mu mu') + Tr(D C_w))`. Falls back to `1/t` when
/// both traces vanish.
pub fn lmmsbe_weight(t: usize, d: &Mat, mu: &Vector, cw: &Mat) -> Result<f64> {
    if t == 0 {
        return Err(Error::InvalidArgument("shrinkage weight needs t >= 1".into()));
    }
    let bias = bilinear(mu, d, mu);
    let var = trace_product(d, cw);
    let den = t as f64 * bias + var;
    if den == 0.0 {
        return Ok(1.0 / t as f64);
    }
    Ok(bias / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NoiseModel;

    fn scalar(x: f64) -> Vector {
        Vector::from_row_slice(&[x])
    }

    fn scalar_spec(support: &[&[f64]]) -> ProblemSpec {
        let one = Mat::identity(1, 1);
        let probs = vec![1.0 / support.len() as f64; support.len()];
        ProblemSpec::new(
            one.clone(),
            one.clone(),
            one.clone(),
            one,
            Mat::zeros(1, 1),
            scalar(0.0),
            3,
            NoiseModel::from_slices(support, &probs).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn sample_mean_updates() {
        let s = EstimatorState::new(3);
        assert_eq!(s.p_hat(), vec![0.0; 3]);
        let s = s.update(1).unwrap();
        assert_eq!(s.p_hat(), vec![0.0, 1.0, 0.0]);
        let s = s.update(0).unwrap();
        assert_eq!(s.p_hat(), vec![0.5, 0.5, 0.0]);
        let s = EstimatorState::from_counts(vec![2, 0, 1]);
        assert_eq!(s.observations(), 3);
        assert_eq!(s.p_hat(), vec![2.0 / 3.0, 0.0, 1.0 / 3.0]);
        assert_eq!(
            s.update(3),
            Err(Error::IndexOutOfRange { index: 3, len: 3 })
        );
    }

    #[test]
    fn exact_extraction() {
        let spec = scalar_spec(&[&[1.0], &[-1.0]]);
        let obs = extract_noise_exact(&scalar(1.5), &scalar(1.0), &scalar(-0.5), &spec).unwrap();
        assert_eq!(obs.index, 0);
        assert_eq!(obs.residual, 0.0);
        let obs = extract_noise_exact(&scalar(-0.5), &scalar(1.0), &scalar(-0.5), &spec).unwrap();
        assert_eq!(obs.index, 1);
        let err = extract_noise_exact(&scalar(1.4), &scalar(1.0), &scalar(-0.5), &spec);
        match err {
            Err(Error::ExtractionResidual(r)) => assert!((r - 0.1).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn h3_spec() -> OutputFeedbackSpec {
        let base = scalar_spec(&[&[0.0], &[1.0]]);
        let meas = NoiseModel::from_slices(&[&[0.1], &[-0.1]], &[0.5, 0.5]).unwrap();
        OutputFeedbackSpec::new(base, Mat::identity(1, 1) * 2.0, meas, scalar(0.0), Mat::zeros(1, 1))
            .unwrap()
    }

    #[test]
    fn h3_nearest_neighbour() {
        let of = h3_spec();
        // x_hat = 0, u = 0: the raw estimate equals x_hat_next
        let zero = scalar(0.0);
        assert_eq!(classify_noise_h3(&scalar(0.93), &zero, &zero, &of).unwrap().index, 1);
        assert_eq!(classify_noise_h3(&scalar(0.07), &zero, &zero, &of).unwrap().index, 0);
        assert_eq!(classify_noise_h3(&scalar(0.5), &zero, &zero, &of).unwrap().index, 0);
    }

    #[test]
    fn h3_violation_is_reported() {
        let base = scalar_spec(&[&[0.0], &[0.3]]);
        let meas = NoiseModel::from_slices(&[&[0.1], &[-0.1]], &[0.5, 0.5]).unwrap();
        let of = OutputFeedbackSpec::new(base, Mat::identity(1, 1), meas, scalar(0.0), Mat::zeros(1, 1))
            .unwrap();
        assert!(of.h3_margin() < 0.0);
        let zero = scalar(0.0);
        assert!(matches!(
            classify_noise_h3(&zero, &zero, &zero, &of),
            Err(Error::H3Violated(_))
        ));
    }

    #[test]
    fn shrinkage_weight_cases() {
        let d = Mat::identity(1, 1);
        let zero_cov = Mat::zeros(1, 1);
        assert_eq!(lmmsbe_weight(3, &d, &scalar(0.0), &d).unwrap(), 0.0);
        assert!((lmmsbe_weight(4, &d, &scalar(2.0), &zero_cov).unwrap() - 0.25).abs() < 1e-15);
        assert!((lmmsbe_weight(4, &d, &scalar(1.0), &d).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(lmmsbe_weight(5, &d, &scalar(0.0), &zero_cov).unwrap(), 0.2);
    }

    #[test]
    fn batch_and_recursive_agree() {
        let hist = [2, 0, 0, 1, 2, 2, 0];
        let mut p = vec![0.0; 3];
        for (t, &h) in hist.iter().enumerate() {
            p = recursive_update(&p, t as u64, h).unwrap();
        }
        let batch = batch_mean(&hist, 3).unwrap();
        for (a, b) in p.iter().zip(&batch) {
            assert!((a - b).abs() < 1e-15);
        }
        let w = vec![1.0 / 7.0; 7];
        let weighted = weighted_estimate(&hist, &w, 3).unwrap();
        for (a, b) in weighted.iter().zip(&batch) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
