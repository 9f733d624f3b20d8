//! Scenario configuration files.
//!
//! ```json
//! {
//!   "description": "optional free text",
//!   "domain": {"kind": "interval", "a": 0.0, "b": 1.0, "n": 256},
//!   "alpha": {"kind": "constant", "coeffs": [1.0]},
//!   "beta": {"kind": "constant", "coeffs": [1.0]},
//!   "gamma": {"kind": "constant", "coeffs": [0.0]},
//!   "eta": 0.5,
//!   "experiment": "spectrum",
//!   "params": {}
//! }
//! ```

use std::fmt;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use wentzell_core::{FieldSpec, Mesh, ProblemData};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Spectrum,
    Evolve,
    GammaSweep,
    Positivity,
    OracleCompare,
    GreenCheck,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Experiment::Spectrum => "spectrum",
            Experiment::Evolve => "evolve",
            Experiment::GammaSweep => "gamma-sweep",
            Experiment::Positivity => "positivity",
            Experiment::OracleCompare => "oracle-compare",
            Experiment::GreenCheck => "green-check",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DomainSpec {
    Interval {
        #[serde(default)]
        a: f64,
        #[serde(default = "one")]
        b: f64,
        n: usize,
    },
    Square {
        n: usize,
    },
    Disk {
        rings: usize,
        sectors: usize,
    },
}

fn one() -> f64 {
    1.0
}

impl DomainSpec {
    pub fn mesh(&self) -> Result<Mesh, CliError> {
        let mesh = match *self {
            DomainSpec::Interval { a, b, n } => Mesh::interval(a, b, n),
            DomainSpec::Square { n } => Mesh::unit_square(n),
            DomainSpec::Disk { rings, sectors } => Mesh::polygonal_disk(rings, sectors),
        };
        mesh.map_err(|e| CliError::Config(format!("domain: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub domain: DomainSpec,
    pub alpha: FieldSpec,
    pub beta: FieldSpec,
    pub gamma: FieldSpec,
    pub eta: f64,
    pub experiment: Experiment,
    #[serde(default = "empty_object")]
    pub params: serde_json::Value,
}

fn empty_object() -> serde_json::Value {
    serde_json::Value::Object(Default::default())
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: ScenarioConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for (name, field) in [("alpha", &self.alpha), ("beta", &self.beta), ("gamma", &self.gamma)] {
            field.validate().map_err(|e| CliError::Config(format!("{name}: {e}")))?;
        }
        if !(self.eta > 0.0) {
            return Err(CliError::Config(format!("eta: must be positive, got {}", self.eta)));
        }
        self.domain.mesh()?;
        Ok(())
    }

    pub fn problem(&self) -> ProblemData {
        ProblemData {
            alpha: self.alpha.clone(),
            beta: self.beta.clone(),
            gamma: self.gamma.clone(),
            eta: self.eta,
        }
    }

    /// Experiment parameters, with unknown keys rejected.
    pub fn params<T: DeserializeOwned>(&self) -> Result<T, CliError> {
        serde_json::from_value(self.params.clone()).map_err(|e| CliError::Config(format!("params: {e}")))
    }
}

/// Scale applied to a time grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    Absolute,
    /// Times are multiples of `1 / lambda_1`.
    Lambda1,
    /// Times are multiples of `1 / lambda_2`.
    Lambda2,
}

/// Geometric time grid `start..=stop` with `points` entries, optionally
/// preceded by `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGridSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default = "absolute")]
    pub unit: TimeUnit,
    #[serde(default)]
    pub include_zero: bool,
}

fn absolute() -> TimeUnit {
    TimeUnit::Absolute
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialData {
    /// `H`-projection of an interior and an independent boundary field.
    Fields { interior: FieldSpec, boundary: FieldSpec },
    /// Nodal values uniform in `[-1, 1]` drawn from the run seed.
    Random,
    /// The nodal hat function of one node.
    Hat { node: usize },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumParams {
    /// Number of eigenpairs; all of them by default.
    #[serde(default)]
    pub eigencount: Option<usize>,
    /// Number of eigenvectors written to `eigenvectors.json`.
    #[serde(default)]
    pub eigenvectors: usize,
    /// Random vectors whose Rayleigh quotients are tested against `gamma_0`.
    #[serde(default)]
    pub rayleigh_samples: usize,
    /// Constant `gamma` values solved in turn instead of the configured `gamma`;
    /// eigenvalues must be nondecreasing along it when it increases.
    #[serde(default)]
    pub gamma_ladder: Option<Vec<f64>>,
    /// Expected kernel class per solve: `zero`, `positive` or `negative`.
    #[serde(default)]
    pub expect: Option<Vec<ExpectedKernel>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpectedKernel {
    Zero,
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveParams {
    pub initial: InitialData,
    pub times: TimeGridSpec,
    /// Eigenpairs in the expansion; the full spectrum by default.
    #[serde(default)]
    pub eigencount: Option<usize>,
    /// Independent random initial data for the envelope check
    /// (`initial` must be `random`).
    #[serde(default = "one_sample")]
    pub samples: usize,
    /// Random `(t, s, f)` triples for the semigroup law.
    #[serde(default)]
    pub law_samples: usize,
    #[serde(default)]
    pub snapshots: bool,
}

fn one_sample() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaSweepParams {
    pub ladder: Vec<f64>,
    #[serde(default = "one_sample")]
    pub eigencount: usize,
    /// Maximal relative gap between the last rung and the clamped target.
    #[serde(default)]
    pub target_tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositivityParams {
    /// Grid for the non-positivity search over hat functions.
    #[serde(default)]
    pub witness_times: Option<TimeGridSpec>,
    /// Also search the indicator of the lower half of the domain for
    /// `L^inf` growth.
    #[serde(default)]
    pub indicator: bool,
    /// Grid for the eventual-positivity sweep over hat functions.
    #[serde(default)]
    pub eventual_times: Option<TimeGridSpec>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleCompareParams {
    pub sizes: Vec<usize>,
    pub count: usize,
    /// Maximal relative error on the finest mesh.
    #[serde(default = "one_percent")]
    pub tolerance: f64,
    /// Minimal error ratio of the second eigenvalue between the last two sizes.
    #[serde(default)]
    pub min_ratio: Option<f64>,
}

fn one_percent() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreenCheckParams {
    #[serde(default = "fifty")]
    pub pairs: usize,
    #[serde(default = "green_tolerance")]
    pub tolerance: f64,
}

fn fifty() -> usize {
    50
}

fn green_tolerance() -> f64 {
    1e-9
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "domain": {"kind": "interval", "n": 8},
        "alpha": {"kind": "constant", "coeffs": [1.0]},
        "beta": {"kind": "constant", "coeffs": [1.0]},
        "gamma": {"kind": "constant", "coeffs": [0.0]},
        "eta": 0.5,
        "experiment": "spectrum"
    }"#;

    #[test]
    fn parses_minimal_config() {
        let config = ScenarioConfig::from_json(BASE).unwrap();
        assert_eq!(config.experiment, Experiment::Spectrum);
        assert_eq!(config.domain, DomainSpec::Interval { a: 0.0, b: 1.0, n: 8 });
        let params: SpectrumParams = config.params().unwrap();
        assert_eq!(params.eigencount, None);
    }

    #[test]
    fn unknown_experiment_is_a_config_error() {
        let text = BASE.replace("\"spectrum\"", "\"heat-death\"");
        let err = ScenarioConfig::from_json(&text).unwrap_err();
        assert!(matches!(&err, CliError::Config(msg) if msg.contains("unknown variant") && msg.contains("line")));
    }

    #[test]
    fn invalid_fields_and_domains_are_rejected() {
        assert!(ScenarioConfig::from_json(&BASE.replace("\"n\": 8", "\"n\": 0")).is_err());
        assert!(ScenarioConfig::from_json(&BASE.replace("\"eta\": 0.5", "\"eta\": -1")).is_err());
        assert!(ScenarioConfig::from_json(&BASE.replace("[0.0]", "[]")).is_err());
    }

    #[test]
    fn unknown_params_are_rejected() {
        let text = BASE.replace("\"experiment\": \"spectrum\"", "\"experiment\": \"spectrum\", \"params\": {\"eigencnt\": 3}");
        let config = ScenarioConfig::from_json(&text).unwrap();
        let err = config.params::<SpectrumParams>().unwrap_err();
        assert!(err.to_string().contains("eigencnt"));
    }
}
