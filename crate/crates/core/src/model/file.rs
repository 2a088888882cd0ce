//! JSON scenario documents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{mat_from_rows, mat_to_rows, Vector};

use super::{NoiseModel, OutputFeedbackSpec, ProblemSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseFile {
    pub support: Vec<Vec<f64>>,
    pub probs: Vec<f64>,
}

impl NoiseFile {
    pub fn to_model(&self) -> Result<NoiseModel> {
        NoiseModel::new(
            self.support.iter().map(|w| Vector::from_row_slice(w)).collect(),
            self.probs.clone(),
        )
    }

    pub fn from_model(nm: &NoiseModel) -> Self {
        Self {
            support: nm.support().iter().map(|w| w.iter().copied().collect()).collect(),
            probs: nm.probs().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputFeedbackFile {
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    pub meas_noise: NoiseFile,
    pub mu0: Vec<f64>,
    #[serde(rename = "C0")]
    pub c0: Vec<Vec<f64>>,
}

/// On-disk scenario. Matrices are row-major nested arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    pub r: Vec<Vec<f64>>,
    #[serde(rename = "P_terminal")]
    pub p_terminal: Vec<Vec<f64>>,
    pub x0: Vec<f64>,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub noise: NoiseFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_feedback: Option<OutputFeedbackFile>,
}

/// A parsed scenario: the state-feedback instance plus the optional
/// output-feedback extension built on top of it.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub spec: ProblemSpec,
    pub output: Option<OutputFeedbackSpec>,
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Scenario(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn build(&self) -> Result<Scenario> {
        let spec = ProblemSpec::new(
            mat_from_rows(&self.a, "A")?,
            mat_from_rows(&self.b, "B")?,
            mat_from_rows(&self.q, "Q")?,
            mat_from_rows(&self.r, "R")?,
            mat_from_rows(&self.p_terminal, "P_terminal")?,
            Vector::from_row_slice(&self.x0),
            self.horizon,
            self.noise.to_model()?,
        )?;
        let spec = match self.beta {
            Some(beta) => spec.apply_discount(beta)?,
            None => spec,
        };
        let output = match &self.output_feedback {
            Some(of) => Some(OutputFeedbackSpec::new(
                spec.clone(),
                mat_from_rows(&of.c, "C")?,
                of.meas_noise.to_model()?,
                Vector::from_row_slice(&of.mu0),
                mat_from_rows(&of.c0, "C0")?,
            )?),
            None => None,
        };
        Ok(Scenario { spec, output })
    }

    /// Serializes a time-invariant instance.
    pub fn from_spec(spec: &ProblemSpec, output: Option<&OutputFeedbackSpec>) -> Result<Self> {
        if !spec.is_time_invariant() {
            return Err(Error::Scenario(
                "time-varying weights cannot be written as a scenario file".into(),
            ));
        }
        Ok(Self {
            a: mat_to_rows(spec.a()),
            b: mat_to_rows(spec.b()),
            q: mat_to_rows(spec.q(0)),
            r: mat_to_rows(spec.r(0)),
            p_terminal: mat_to_rows(spec.p_terminal()),
            x0: spec.x0().iter().copied().collect(),
            horizon: spec.horizon(),
            noise: NoiseFile::from_model(spec.noise()),
            beta: None,
            output_feedback: output.map(|of| OutputFeedbackFile {
                c: mat_to_rows(of.c()),
                meas_noise: NoiseFile::from_model(of.meas_noise()),
                mu0: of.mu0().iter().copied().collect(),
                c0: mat_to_rows(of.c0()),
            }),
        })
    }
}
