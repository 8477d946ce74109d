//! Age-of-Information outage in a two-device finite-blocklength uplink.
//!
//! Two devices share `N` channel uses per period. The allocation policy maps
//! the current state (both AoI values and both Bernoulli channel bits) to the
//! blocklength of device 1. Under a fixed policy the state is a finite ergodic
//! Markov chain, so the long-run outage probability is the stationary mass of
//! the outage set.
//!
//! * [`phy`]: normal-approximation block error rate.
//! * [`state`]: state indexing and the outage predicate.
//! * [`chain`]: transition law, transition matrix, stationary distribution.
//! * [`optimizer`]: recursive policy optimizer and benchmark policies.
//! * [`burst`]: analytic outage-duration and inter-outage statistics.
//! * [`sim`]: seeded Monte-Carlo simulation.
//! * [`scenario`], [`experiments`]: scenario files and experiment drivers.

// `!(x > 0.0)` style checks are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod burst;
pub mod chain;
pub mod config;
pub mod error;
pub mod experiments;
pub mod optimizer;
pub mod phy;
pub mod rng;
pub mod scenario;
pub mod sim;
pub mod state;

pub use burst::{BurstReport, BurstStats, DurationConvention};
pub use chain::{Policy, SteadyState, TransitionMatrix};
pub use config::{OutageRule, SystemConfig};
pub use error::{Error, Result};
pub use optimizer::{OptimizeReport, PenaltyKind, Termination};
pub use phy::{ChannelProfile, LinkParams};
pub use scenario::Scenario;
pub use sim::{RepetitionSummary, SimResult};
pub use state::SystemState;
