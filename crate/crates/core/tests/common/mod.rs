#![allow(dead_code)]

use online_lqr::linalg::{Mat, Vector};
use online_lqr::model::{NoiseModel, ProblemSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

pub fn v(xs: &[f64]) -> Vector {
    Vector::from_row_slice(xs)
}

pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

pub fn random_probs(rng: &mut ChaCha12Rng, m: usize) -> Vec<f64> {
    let mut p: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    p
}

pub fn random_mat(rng: &mut ChaCha12Rng, r: usize, c: usize, scale: f64) -> Mat {
    Mat::from_fn(r, c, |_, _| rng.random_range(-scale..scale))
}

pub fn random_psd(rng: &mut ChaCha12Rng, n: usize, floor: f64) -> Mat {
    let g = random_mat(rng, n, n, 1.0);
    &g * g.transpose() + Mat::identity(n, n) * floor
}

/// Random instance with `n` states, `m` inputs and `k` support points.
pub fn random_spec(rng: &mut ChaCha12Rng, n: usize, m: usize, k: usize, horizon: usize) -> ProblemSpec {
    let a = random_mat(rng, n, n, 1.2);
    let b = random_mat(rng, n, m, 1.0);
    let q = random_psd(rng, n, 0.05);
    let r = random_psd(rng, m, 0.2);
    let pt = if rng.random_bool(0.5) { random_psd(rng, n, 0.0) } else { Mat::zeros(n, n) };
    let support: Vec<Vector> = (0..k)
        .map(|_| Vector::from_fn(n, |_, _| rng.random_range(-1.5..1.5)))
        .collect();
    let probs = random_probs(rng, k);
    let x0 = Vector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
    ProblemSpec::new(a, b, q, r, pt, x0, horizon, NoiseModel::new(support, probs).unwrap()).unwrap()
}
