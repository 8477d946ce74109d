use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phy::{ChannelProfile, LinkParams};
use crate::state::{self, SystemState};

/// Which end-of-period AoI values count as an outage for threshold `A_out`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutageRule {
    /// Outage iff some device has `A > A_out`.
    #[default]
    Exceeds,
    /// Outage iff some device has `A >= A_out`, i.e. its age just before the
    /// next delivery, `A + 1`, exceeds `A_out`.
    Reaches,
}

impl OutageRule {
    pub fn as_str(self) -> &'static str {
        match self {
            OutageRule::Exceeds => "exceeds",
            OutageRule::Reaches => "reaches",
        }
    }
}

/// Complete parameterization of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub profile: ChannelProfile,
    pub link: LinkParams,
    pub a_max: u32,
    pub a_out: u32,
    pub epsilon_cvg: f64,
    pub initial_state: SystemState,
    #[serde(default)]
    pub outage_rule: OutageRule,
}

impl SystemConfig {
    pub fn new(
        profile: ChannelProfile,
        link: LinkParams,
        a_max: u32,
        a_out: u32,
        epsilon_cvg: f64,
        initial_state: SystemState,
    ) -> Result<Self> {
        let cfg = SystemConfig {
            profile,
            link,
            a_max,
            a_out,
            epsilon_cvg,
            initial_state,
            outage_rule: OutageRule::Exceeds,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_outage_rule(mut self, rule: OutageRule) -> Self {
        self.outage_rule = rule;
        self
    }

    /// Checks the cross-field invariants. Warns when the outage set is empty.
    pub fn validate(&self) -> Result<()> {
        if self.a_max == 0 {
            return Err(Error::invalid("a_max", "must be at least 1"));
        }
        if self.a_out == 0 || self.a_out > self.a_max {
            return Err(Error::invalid(
                "a_out",
                format!("must lie in 1..={}, got {}", self.a_max, self.a_out),
            ));
        }
        if !(self.epsilon_cvg > 0.0) {
            return Err(Error::invalid("epsilon_cvg", "must be positive"));
        }
        if !self.initial_state.is_valid(self.a_max) {
            return Err(Error::invalid(
                "initial",
                format!(
                    "{} is not a state under a_max = {}",
                    self.initial_state, self.a_max
                ),
            ));
        }
        if self.outage_threshold() >= self.a_max {
            log::warn!(
                "a_out = {} with a_max = {} leaves the outage set empty",
                self.a_out,
                self.a_max
            );
        }
        Ok(())
    }

    /// Threshold for the strict comparison `A > threshold` under the configured rule.
    pub fn outage_threshold(&self) -> u32 {
        match self.outage_rule {
            OutageRule::Exceeds => self.a_out,
            OutageRule::Reaches => self.a_out - 1,
        }
    }

    pub fn is_outage(&self, s: SystemState) -> bool {
        state::is_outage(s, self.outage_threshold())
    }

    pub fn state_count(&self) -> usize {
        state::state_count(self.a_max)
    }

    /// Outage indicator for every state, in index order.
    pub fn outage_mask(&self) -> Vec<bool> {
        state::enumerate_states(self.a_max)
            .into_iter()
            .map(|s| self.is_outage(s))
            .collect()
    }

    pub fn blocklength(&self) -> u32 {
        self.link.blocklength_total
    }
}
