//! Finite-horizon linear-quadratic control when the controller does not
//! know the distribution of a finitely supported process noise.
//!
//! The crate solves the known-statistics problem through backward Riccati
//! recursions, learns the noise law online with the sample mean of the
//! observed support indices, and quantifies what learning costs: exact
//! regret formulas, a logarithmic bound, an enumeration oracle for small
//! instances and seeded Monte Carlo simulation. An output-feedback variant
//! recovers the noise from noisy measurements by nearest-support
//! classification.
//!
//! ```
//! use online_lqr::model::scenario_predator_prey;
//! use online_lqr::regret::regret_online_analytic;
//! use online_lqr::riccati::solve_recursions;
//!
//! let spec = scenario_predator_prey(200);
//! let sol = solve_recursions(&spec).unwrap();
//! let report = regret_online_analytic(&spec, &sol);
//! assert!((report.regret_total - 12.0446).abs() < 1e-3);
//! ```

pub mod error;
pub mod estimator;
pub mod linalg;
pub mod model;
pub mod policies;
pub mod regret;
pub mod riccati;
pub mod sim;

pub use error::{Error, Result};
pub use estimator::EstimatorState;
pub use model::{NoiseModel, OutputFeedbackSpec, ProblemSpec};
pub use policies::{KalmanState, PolicyKind};
pub use regret::RegretReport;
pub use riccati::RiccatiSolution;
pub use sim::{MonteCarloResult, Setting, Trajectory};
