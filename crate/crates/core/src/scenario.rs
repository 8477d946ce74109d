//! Scenario files: the JSON document that fully describes one experiment.
//!
//! ```json
//! {
//!   "version": 1,
//!   "name": "scenario_b",
//!   "alpha": [0.6, 0.4],
//!   "snr_db": { "good": -12.2, "bad": -15.2 },
//!   "blocklength": { "N": 1000, "d": 16 },
//!   "state": { "a_max": 5, "a_out": 3, "initial": [1, 1, 0, 0] },
//!   "optimizer": { "epsilon_cvg": 1e-5, "max_iter": 200, "seeds": 10, "master_seed": 1 },
//!   "simulation": { "reps": 100, "periods": 2500, "master_seed": 2020 }
//! }
//! ```
//!
//! Unknown keys are rejected. `state.outage_rule` (`"exceeds"` or
//! `"reaches"`), `name`, `version` and `optimizer.master_seed` are optional.

use serde::{Deserialize, Serialize};

use crate::config::{OutageRule, SystemConfig};
use crate::error::{Error, Result};
use crate::optimizer::DEFAULT_MAX_ITER;
use crate::phy::{ChannelProfile, LinkParams};
use crate::state::SystemState;

pub const SCHEMA_VERSION: u32 = 1;

pub const PRESET_NAMES: [&str; 3] = ["scenario_a", "scenario_b", "scenario_c"];

const PRESETS: [&str; 3] = [
    include_str!("../scenarios/scenario_a.json"),
    include_str!("../scenarios/scenario_b.json"),
    include_str!("../scenarios/scenario_c.json"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default = "schema_version")]
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub alpha: [f64; 2],
    pub snr_db: SnrSection,
    pub blocklength: BlocklengthSection,
    pub state: StateSection,
    pub optimizer: OptimizerSettings,
    pub simulation: SimulationSettings,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnrSection {
    pub good: f64,
    pub bad: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlocklengthSection {
    #[serde(rename = "N")]
    pub total: u32,
    #[serde(rename = "d")]
    pub payload_bits: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSection {
    pub a_max: u32,
    pub a_out: u32,
    pub initial: [u32; 4],
    #[serde(default)]
    pub outage_rule: OutageRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSettings {
    pub epsilon_cvg: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    pub seeds: usize,
    #[serde(default = "default_optimizer_seed")]
    pub master_seed: u64,
}

fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}

fn default_optimizer_seed() -> u64 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSettings {
    pub reps: usize,
    pub periods: usize,
    pub master_seed: u64,
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub system: SystemConfig,
    pub optimizer: OptimizerSettings,
    pub simulation: SimulationSettings,
    /// The document the scenario was built from.
    pub file: ScenarioFile,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        if file.version != SCHEMA_VERSION {
            return Err(Error::invalid(
                "version",
                format!(
                    "unsupported schema version {}, expected {SCHEMA_VERSION}",
                    file.version
                ),
            ));
        }
        let profile = ChannelProfile::new(file.alpha, file.snr_db.good, file.snr_db.bad)?;
        let link = LinkParams::new(file.blocklength.total, file.blocklength.payload_bits)?;
        let initial = SystemState::from_tuple(file.state.initial)
            .map_err(|_| Error::invalid("state.initial", "channel bits must be 0 or 1"))?;
        let system = SystemConfig::new(
            profile,
            link,
            file.state.a_max,
            file.state.a_out,
            file.optimizer.epsilon_cvg,
            initial,
        )?
        .with_outage_rule(file.state.outage_rule);
        system.validate()?;
        if file.optimizer.max_iter == 0 {
            return Err(Error::invalid("optimizer.max_iter", "must be at least 1"));
        }
        if file.optimizer.seeds == 0 {
            return Err(Error::invalid("optimizer.seeds", "must be at least 1"));
        }
        if file.simulation.reps == 0 {
            return Err(Error::invalid("simulation.reps", "must be at least 1"));
        }
        if file.simulation.periods == 0 {
            return Err(Error::invalid("simulation.periods", "must be at least 1"));
        }
        Ok(Scenario {
            name: file.name.clone().unwrap_or_else(|| "custom".to_owned()),
            system,
            optimizer: file.optimizer,
            simulation: file.simulation,
            file,
        })
    }

    /// One of the built-in scenarios `scenario_a`, `scenario_b`, `scenario_c`.
    pub fn preset(name: &str) -> Result<Self> {
        let pos = PRESET_NAMES
            .iter()
            .position(|&n| n == name)
            .ok_or_else(|| Error::Config(format!("unknown preset `{name}`")))?;
        Self::from_json(PRESETS[pos])
    }

    pub fn presets() -> Vec<Scenario> {
        PRESET_NAMES
            .iter()
            .map(|n| Self::preset(n).expect("built-in presets are valid"))
            .collect()
    }

    /// Same scenario under a different outage rule.
    pub fn with_outage_rule(mut self, rule: OutageRule) -> Self {
        self.system = self.system.with_outage_rule(rule);
        self.file.state.outage_rule = rule;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.file).expect("scenario files serialize")
    }
}

pub fn preset_json(name: &str) -> Option<&'static str> {
    PRESET_NAMES
        .iter()
        .position(|&n| n == name)
        .map(|i| PRESETS[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_table_values() {
        let [a, b, c] = [0, 1, 2].map(|i| Scenario::preset(PRESET_NAMES[i]).unwrap());
        assert_eq!(a.system.profile.alpha(), [0.9, 0.7]);
        assert_eq!(b.system.profile.alpha(), [0.6, 0.4]);
        assert_eq!(c.system.profile.alpha(), [0.9, 0.2]);
        for s in [&a, &b, &c] {
            assert_eq!(s.system.profile.gamma_good_db(), -12.2);
            assert_eq!(s.system.profile.gamma_bad_db(), -15.2);
            assert_eq!(s.system.link.blocklength_total, 1000);
            assert_eq!(s.system.link.payload_bits, 16);
            assert_eq!((s.system.a_max, s.system.a_out), (5, 3));
            assert_eq!(s.system.epsilon_cvg, 1e-5);
            assert_eq!(s.system.initial_state, SystemState::new(1, 1, false, false));
            assert_eq!(s.system.outage_rule, OutageRule::Exceeds);
        }
    }

    #[test]
    fn unknown_key_is_named() {
        let text = preset_json("scenario_b")
            .unwrap()
            .replace("\"seeds\"", "\"sedes\"");
        let err = Scenario::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("sedes"), "{err}");
    }

    #[test]
    fn invalid_values_are_named() {
        let text = preset_json("scenario_a")
            .unwrap()
            .replace("[0.9, 0.7]", "[1.2, 0.7]");
        let err = Scenario::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("alpha"), "{err}");
        let text = preset_json("scenario_a")
            .unwrap()
            .replace("\"a_out\": 3", "\"a_out\": 9");
        assert!(Scenario::from_json(&text)
            .unwrap_err()
            .to_string()
            .contains("a_out"));
        let text = preset_json("scenario_a")
            .unwrap()
            .replace("\"version\": 1", "\"version\": 2");
        assert!(Scenario::from_json(&text)
            .unwrap_err()
            .to_string()
            .contains("version"));
        assert!(Scenario::preset("scenario_z").is_err());
    }

    #[test]
    fn outage_rule_is_parsed() {
        let text = preset_json("scenario_b").unwrap().replace(
            "\"initial\": [1, 1, 0, 0]",
            "\"initial\": [1, 1, 0, 0], \"outage_rule\": \"reaches\"",
        );
        let s = Scenario::from_json(&text).unwrap();
        assert_eq!(s.system.outage_rule, OutageRule::Reaches);
        let back = Scenario::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
    }
}
