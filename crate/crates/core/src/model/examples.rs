//! Builders for the two worked scenarios: pursuit-evasion and product pricing.

use crate::linalg::{Mat, Vector};

use super::{NoiseModel, ProblemSpec};

const EVADING_MOVES: [[f64; 2]; 4] = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
const EVADING_PROBS: [f64; 4] = [0.2, 0.1, 0.6, 0.1];

/// Relative-position disturbance of the pursuit-evasion scenario.
///
/// With `x = x_p - x_e` the prey's move enters with a minus sign, so the
/// support is the negated set of evading moves.
pub fn example1_noise() -> NoiseModel {
    NoiseModel::new(
        EVADING_MOVES.iter().map(|v| -Vector::from_row_slice(v)).collect(),
        EVADING_PROBS.to_vec(),
    )
    .expect("static distribution is valid")
}

/// Pursuit-evasion: `A = B = Q = R = I_2`, `x0 = [1, 0]`, `P_{T+1} = 0`.
pub fn scenario_predator_prey(horizon: usize) -> ProblemSpec {
    let eye = Mat::identity(2, 2);
    ProblemSpec::new(
        eye.clone(),
        eye.clone(),
        eye.clone(),
        eye,
        Mat::zeros(2, 2),
        Vector::from_row_slice(&[1.0, 0.0]),
        horizon,
        example1_noise(),
    )
    .expect("static scenario is valid")
}

/// Parameters of the product pricing scenario after its reduction to
/// state `[y, z]` and input `[v, u]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PricingParams {
    /// Price sensitivity of demand.
    pub alpha: f64,
    /// Mean product utility.
    pub utility: f64,
    /// Unit production cost.
    pub product_cost: f64,
    pub tracking_weight: f64,
    pub rate_weight: f64,
    pub profit_weight: f64,
    /// Utility perturbations `e` and their probabilities.
    pub perturbations: Vec<f64>,
    pub perturbation_probs: Vec<f64>,
}

impl Default for PricingParams {
    fn default() -> Self {
        Self {
            alpha: 0.25,
            utility: 2.0,
            // Chosen so that E[w] = 3.6 with E[e] = 0.
            product_cost: 0.8,
            tracking_weight: 1.0,
            rate_weight: 1.0,
            profit_weight: 1.0,
            perturbations: vec![0.0, 0.1, -0.1, 0.2, -0.2, 0.3, -0.3, 0.4, -0.4],
            perturbation_probs: vec![0.25, 0.15, 0.15, 0.1, 0.1, 0.075, 0.075, 0.05, 0.05],
        }
    }
}

impl PricingParams {
    /// `w = e / alpha - (C - b / alpha) / 2`.
    pub fn demand_shift(&self, e: f64) -> f64 {
        e / self.alpha - 0.5 * (self.product_cost - self.utility / self.alpha)
    }

    /// Disturbance `W = [w, 0]`.
    pub fn noise(&self) -> NoiseModel {
        NoiseModel::new(
            self.perturbations
                .iter()
                .map(|&e| Vector::from_row_slice(&[self.demand_shift(e), 0.0]))
                .collect(),
            self.perturbation_probs.clone(),
        )
        .expect("pricing distribution is valid")
    }

    pub fn spec(&self, horizon: usize, x0: Vector) -> ProblemSpec {
        let a = Mat::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let b = Mat::identity(2, 2);
        let al = self.alpha;
        let q = Mat::from_row_slice(2, 2, &[al * al, -al, -al, 1.0]) * self.tracking_weight;
        let r = Mat::from_row_slice(2, 2, &[self.profit_weight, 0.0, 0.0, self.rate_weight]);
        ProblemSpec::new(a, b, q, r, Mat::zeros(2, 2), x0, horizon, self.noise())
            .expect("pricing scenario is valid")
    }
}

pub fn example2_noise() -> NoiseModel {
    PricingParams::default().noise()
}

/// Product pricing with the default parameters.
pub fn scenario_product_pricing(horizon: usize, x0: Vector) -> ProblemSpec {
    PricingParams::default().spec(horizon, x0)
}
