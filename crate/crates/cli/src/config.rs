//! Run configuration (JSON).

use std::path::Path;

use rdreg::simulator::{Reference, SimConfig};
use rdreg::spectral_model::{ModelOptions, PlantSpec, Scenario};
use rdreg::synthesis::Pole;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub plant: PlantSpec,
    #[serde(default)]
    pub model: ModelOptions,
    #[serde(default)]
    pub eig: EigBlock,
    #[serde(default)]
    pub design: DesignBlock,
    #[serde(default)]
    pub certify: CertifyBlock,
    #[serde(default)]
    pub simulate: SimConfig,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigBlock {
    pub n_max: usize,
    pub grid_points: Option<usize>,
}

impl Default for EigBlock {
    fn default() -> Self {
        Self {
            n_max: 20,
            grid_points: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignBlock {
    pub delta: f64,
    /// Overrides the automatic choice of N0.
    pub n0: Option<usize>,
    /// N0 + 2 targets for eig(A1 + B1 K).
    pub controller_poles: Option<Vec<Pole>>,
    /// N0 targets for eig(A0 - L C0).
    pub observer_poles: Option<Vec<Pole>>,
    /// Gain overrides; both or neither.
    pub k: Option<Vec<f64>>,
    pub l: Option<Vec<f64>>,
}

impl Default for DesignBlock {
    fn default() -> Self {
        Self {
            delta: 0.5,
            n0: None,
            controller_poles: None,
            observer_poles: None,
            k: None,
            l: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyBlock {
    /// Certify at this N only, instead of searching for the smallest.
    pub n: Option<usize>,
    pub n_max: usize,
    /// Re-check the certificate independently.
    pub verify: bool,
}

impl Default for CertifyBlock {
    fn default() -> Self {
        Self {
            n: None,
            n_max: 20,
            verify: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    /// Used when --out is not given.
    pub directory: String,
    pub eig_report: String,
    pub design_report: String,
    pub metrics_report: String,
    pub trajectory: String,
    pub profile: String,
    /// z(t, x) snapshot CSV; skipped when absent.
    pub snapshot: Option<String>,
    pub snapshot_time_stride: usize,
    pub snapshot_space_stride: usize,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            directory: ".".into(),
            eig_report: "eig.json".into(),
            design_report: "design.json".into(),
            metrics_report: "metrics.json".into(),
            trajectory: "trajectory.csv".into(),
            profile: "equilibrium_profile.csv".into(),
            snapshot: None,
            snapshot_time_stride: 20,
            snapshot_space_stride: 40,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if !(self.design.delta > 0.0 && self.design.delta.is_finite()) {
            return Err(CliError::Config(format!(
                "design.delta must be positive, got {}",
                self.design.delta
            )));
        }
        if self.design.k.is_some() != self.design.l.is_some() {
            return Err(CliError::Config("design.k and design.l must be given together".into()));
        }
        if self.design.k.is_some() && (self.design.controller_poles.is_some() || self.design.observer_poles.is_some()) {
            return Err(CliError::Config("gain overrides exclude pole targets".into()));
        }
        Ok(())
    }

    /// The example of the text: p = 1, q = 0, q_c = 3, delta = 0.5, published
    /// gains, N = 3, M = 50, unit step from z0 = x^2.
    pub fn paper_fixture() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            plant: PlantSpec::constant(1.0, 0.0, 3.0, Scenario::DirichletMeasNeumannReg),
            model: ModelOptions::default(),
            eig: EigBlock::default(),
            design: DesignBlock {
                k: Some(vec![-10.4134, -11.3747, 2.3100]),
                l: Some(vec![1.4373]),
                ..DesignBlock::default()
            },
            certify: CertifyBlock {
                n: Some(3),
                ..CertifyBlock::default()
            },
            simulate: SimConfig {
                modal_order: 50,
                horizon: 20.0,
                reference: Reference::Constant { value: 1.0 },
                ..SimConfig::default()
            },
            output: OutputBlock {
                snapshot: Some("snapshot.csv".into()),
                ..OutputBlock::default()
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_round_trips() {
        let c = RunConfig::paper_fixture();
        let text = serde_json::to_string_pretty(&c).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), c);
    }

    #[test]
    fn minimal_config() {
        let c = RunConfig::from_json(
            r#"{"schema_version": 1, "plant": {"p": {"kind": "polynomial", "coefficients": [1]},
                "q": {"kind": "polynomial", "coefficients": [0]}, "q_c": 3, "scenario": "neumann_meas_neumann_reg"}}"#,
        )
        .unwrap();
        assert_eq!(c.design.delta, 0.5);
        assert_eq!(c.simulate.modal_order, 50);
    }

    #[test]
    fn unknown_field_names_the_field() {
        let mut v = serde_json::to_value(RunConfig::paper_fixture()).unwrap();
        v["design"]["deltaa"] = serde_json::json!(1.0);
        let err = RunConfig::from_json(&v.to_string()).unwrap_err().to_string();
        assert!(err.contains("deltaa"), "{err}");
    }

    #[test]
    fn version_and_gain_pairs_checked() {
        let mut c = RunConfig::paper_fixture();
        c.schema_version = 2;
        assert!(RunConfig::from_json(&serde_json::to_string(&c).unwrap()).is_err());
        let mut c = RunConfig::paper_fixture();
        c.design.l = None;
        assert!(RunConfig::from_json(&serde_json::to_string(&c).unwrap()).is_err());
    }
}
