//! TOML run configuration. Unknown keys are rejected.

use std::path::Path;

use qcoin::bounds::{AbortScaling, AliceBoundForm};
use qcoin::classical::{ClassicalProtocolSpec, Lemma1Inequality};
use qcoin::ExperimentParams;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; `--seed` overrides it.
    pub seed: Option<u64>,
    pub params: Option<ParamsSection>,
    pub simulate: Option<SimulateSection>,
    pub sweep: Option<SweepSection>,
    pub optimize: Option<OptimizeSection>,
    pub classical: Option<ClassicalSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub alpha_sq: f64,
    pub att_transmission_db: f64,
    pub att_bob_db: f64,
    pub detector_efficiency: f64,
    pub qber_per_photon: f64,
    pub dark_count_prob: f64,
    /// Measured honest abort rate; replaces the click-model value.
    pub measured_abort: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub alice: String,
    pub bob: String,
    pub sessions: u64,
    /// Outcome the cheating party is after.
    #[serde(default = "default_target_bit")]
    pub target_bit: u8,
}

fn default_target_bit() -> u8 {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Explicit transmission losses in dB.
    pub grid_db: Option<Vec<f64>>,
    /// Alternatively an evenly spaced grid.
    pub start_db: Option<f64>,
    pub stop_db: Option<f64>,
    pub points: Option<usize>,
    #[serde(default)]
    pub scaling: ScalingName,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingName {
    Fixed,
    #[default]
    ModelScaled,
}

impl From<ScalingName> for AbortScaling {
    fn from(s: ScalingName) -> Self {
        match s {
            ScalingName::Fixed => AbortScaling::FixedMeasured,
            ScalingName::ModelScaled => AbortScaling::ModelScaled,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormName {
    Published,
    Tight,
}

impl From<FormName> for AliceBoundForm {
    fn from(f: FormName) -> Self {
        match f {
            FormName::Published => AliceBoundForm::Published,
            FormName::Tight => AliceBoundForm::Tight,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    #[serde(default = "default_lower")]
    pub lower: f64,
    #[serde(default = "default_upper")]
    pub upper: f64,
    /// Alice bound forms to optimise; both by default.
    pub alice_bound: Option<Vec<FormName>>,
}

fn default_lower() -> f64 {
    0.01
}

fn default_upper() -> f64 {
    2.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", tag = "mode")]
pub enum ClassicalSection {
    /// Two-round trit protocol given by its move probabilities.
    Spec { spec: ClassicalProtocolSpec },
    /// Arbitrary protocol tree in text notation.
    Tree { tree: String },
    /// Symmetric correct family with parameters t and s.
    CorrectFamily { t: f64, s: f64 },
    /// Family saturating one classical inequality.
    SaturatingFamily {
        inequality: InequalityName,
        q01: f64,
        s: f64,
    },
    /// Random correct trees checked in bulk.
    Audit {
        trees: usize,
        #[serde(default = "default_max_depth")]
        max_depth: usize,
        #[serde(default = "default_max_branch")]
        max_branch: usize,
    },
}

fn default_max_depth() -> usize {
    6
}

fn default_max_branch() -> usize {
    3
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InequalityName {
    First,
    Second,
}

impl From<InequalityName> for Lemma1Inequality {
    fn from(i: InequalityName) -> Self {
        match i {
            InequalityName::First => Lemma1Inequality::First,
            InequalityName::Second => Lemma1Inequality::Second,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn params(&self) -> Result<ExperimentParams, CliError> {
        let p = self
            .params
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [params] section".into()))?;
        let params = ExperimentParams::new(
            p.alpha_sq,
            p.att_transmission_db,
            p.att_bob_db,
            p.detector_efficiency,
            p.qber_per_photon,
            p.dark_count_prob,
        )
        .map_err(|e| CliError::Config(format!("[params]: {e}")))?;
        if let Some(m) = p.measured_abort {
            if !(m.is_finite() && (0.0..=1.0).contains(&m)) {
                return Err(CliError::Config(format!(
                    "[params]: measured_abort = {m} is outside [0, 1]"
                )));
            }
        }
        Ok(params)
    }

    pub fn measured_abort(&self) -> Option<f64> {
        self.params.as_ref().and_then(|p| p.measured_abort)
    }

    pub fn section<'a, T>(&self, name: &str, section: &'a Option<T>) -> Result<&'a T, CliError> {
        section
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("missing [{name}] section")))
    }
}

impl SweepSection {
    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        match (&self.grid_db, self.start_db, self.stop_db, self.points) {
            (Some(grid), None, None, None) => {
                if grid.is_empty() {
                    Err(CliError::Config("[sweep]: grid_db is empty".into()))
                } else {
                    Ok(grid.clone())
                }
            }
            (None, Some(start), Some(stop), Some(points)) => {
                if points == 0 {
                    return Err(CliError::Config(
                        "[sweep]: points must be at least 1".into(),
                    ));
                }
                if points == 1 {
                    return Ok(vec![start]);
                }
                let step = (stop - start) / (points - 1) as f64;
                Ok((0..points).map(|i| start + step * i as f64).collect())
            }
            _ => Err(CliError::Config(
                "[sweep]: give either grid_db or all of start_db, stop_db, points".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAB: &str = r#"
        seed = 7
        [params]
        alpha_sq = 0.27
        att_transmission_db = 0.0
        att_bob_db = 6.0
        detector_efficiency = 0.1
        qber_per_photon = 0.005
        dark_count_prob = 4.7e-5
        measured_abort = 1.4e-4
    "#;

    #[test]
    fn parses_params() {
        let c = RunConfig::parse(LAB).unwrap();
        assert_eq!(c.params().unwrap(), ExperimentParams::lab_operating_point());
        assert_eq!(c.measured_abort(), Some(1.4e-4));
        assert_eq!(c.seed, Some(7));
    }

    #[test]
    fn unknown_keys_are_errors() {
        let text = LAB.replace("seed = 7", "seed = 7\nsed = 3");
        let err = RunConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("sed"), "{err}");
        assert!(err.contains("line"), "{err}");
        let text = format!("{LAB}\nextra = 1\n");
        assert!(RunConfig::parse(&text).is_err());
    }

    #[test]
    fn invalid_params_name_the_field() {
        let text = LAB.replace("detector_efficiency = 0.1", "detector_efficiency = 1.5");
        let err = RunConfig::parse(&text)
            .unwrap()
            .params()
            .unwrap_err()
            .to_string();
        assert!(err.contains("detector_efficiency"), "{err}");
    }

    #[test]
    fn classical_modes() {
        let c = RunConfig::parse(
            "[classical]\nmode = \"spec\"\n[classical.spec]\nq01 = 0.6\nq0perp = 0.2\n\
             q1perp = 0.2\nq0_given_01 = 0.5\nq0_given_0perp = 0.75\nq1_given_1perp = 0.75\n",
        )
        .unwrap();
        assert!(matches!(c.classical, Some(ClassicalSection::Spec { .. })));
        let c = RunConfig::parse("[classical]\nmode = \"audit\"\ntrees = 10\n").unwrap();
        assert!(matches!(
            c.classical,
            Some(ClassicalSection::Audit {
                trees: 10,
                max_depth: 6,
                max_branch: 3
            })
        ));
        assert!(RunConfig::parse("[classical]\nmode = \"audit\"\ntrees = 1\nbogus = 2\n").is_err());
        assert!(RunConfig::parse("[classical]\nmode = \"nope\"\n").is_err());
    }

    #[test]
    fn sweep_grids() {
        let c = RunConfig::parse("[sweep]\nstart_db = 0.0\nstop_db = 1.0\npoints = 3\n").unwrap();
        assert_eq!(c.sweep.unwrap().grid().unwrap(), vec![0.0, 0.5, 1.0]);
        let c = RunConfig::parse("[sweep]\ngrid_db = []\n").unwrap();
        assert!(c.sweep.unwrap().grid().is_err());
        let c = RunConfig::parse("[sweep]\ngrid_db = [1.0]\npoints = 3\n").unwrap();
        assert!(c.sweep.unwrap().grid().is_err());
    }
}
