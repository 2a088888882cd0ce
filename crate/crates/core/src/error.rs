use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("noise support is empty")]
    EmptySupport,

    #[error("probability {index} is negative ({value})")]
    NegativeProbability { index: usize, value: f64 },

    #[error("probabilities sum to {0}, expected 1 within 1e-9")]
    ProbabilitySum(f64),

    #[error("discount factor {0} outside (0, 1]")]
    InvalidDiscount(f64),

    #[error("{0} is not symmetric positive semidefinite")]
    NotPsd(String),

    #[error("{0} is not symmetric positive definite")]
    NotPositiveDefinite(String),

    #[error("measurement matrix C is singular (smallest singular value {0:e})")]
    SingularMeasurement(f64),

    #[error("measurement noise mean is not zero (norm {0:e})")]
    NonZeroMeasurementMean(f64),

    #[error("support separation hypothesis violated (margin {0})")]
    H3Violated(f64),

    #[error("support index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("extracted noise does not match any support point (residual {0:e})")]
    ExtractionResidual(f64),

    #[error("Riccati fixed point did not converge after {iterations} iterations (change {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("(A, B) is not stabilizable")]
    NotStabilizable,

    #[error("(A, Q^1/2) is not observable")]
    NotObservable,

    #[error("enumeration needs {0} paths, budget is 1e6")]
    EnumerationBudget(f64),

    #[error("freeze time {t_bar} outside [1, {horizon})")]
    InvalidCutoff { t_bar: usize, horizon: usize },

    #[error("policy {0} is not supported here")]
    UnsupportedPolicy(String),

    #[error("cannot parse policy `{0}`")]
    PolicyParse(String),

    #[error("scenario: {0}")]
    Scenario(String),

    #[error("need at least 3 distinct horizons for a slope fit, got {0}")]
    InsufficientData(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("write failed: {0}")]
    Output(String),
}

impl Error {
    /// Whether the error reflects a numerical breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite(_)
                | Error::NotConverged { .. }
                | Error::NotStabilizable
                | Error::NotObservable
                | Error::ExtractionResidual(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
