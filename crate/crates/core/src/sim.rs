//! Seeded period-by-period simulation of the two-device uplink.
//!
//! Per period, in this order, four uniforms are drawn from the stream:
//! failure of device 1, failure of device 2, next channel bit of device 1,
//! next channel bit of device 2. Error rates come from the channel bits of
//! the state the period starts in, as in the analytic chain.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{Kernel, Policy};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::optimizer::median_sorted;
use crate::rng::{self, SimRng};
use crate::state::{self, SystemState};

/// Per-period record of one simulated run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Outage indicator of the state reached at the end of each period.
    pub outages: Vec<bool>,
    pub final_state: SystemState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub periods: usize,
    pub outage_count: usize,
    pub outage_rate: f64,
    pub burst_durations: Vec<u32>,
    pub ioi_durations: Vec<u32>,
    pub mean_burst: Option<f64>,
    pub mean_ioi: Option<f64>,
    pub seed: u64,
    pub final_state: SystemState,
}

impl SimResult {
    /// Statistics of the first `periods` entries of an outage sequence.
    pub fn from_outages(outages: &[bool], seed: u64, final_state: SystemState) -> Self {
        let outage_count = outages.iter().filter(|&&o| o).count();
        let (burst_durations, ioi_durations) = measure_bursts(outages);
        SimResult {
            periods: outages.len(),
            outage_count,
            outage_rate: outage_count as f64 / outages.len().max(1) as f64,
            mean_burst: mean_u32(&burst_durations),
            mean_ioi: mean_u32(&ioi_durations),
            burst_durations,
            ioi_durations,
            seed,
            final_state,
        }
    }
}

fn mean_u32(v: &[u32]) -> Option<f64> {
    if v.is_empty() {
        None
    } else {
        Some(v.iter().map(|&x| f64::from(x)).sum::<f64>() / v.len() as f64)
    }
}

/// Runs `periods` periods from the configured initial state.
pub fn simulate_trajectory(
    cfg: &SystemConfig,
    policy: &Policy,
    periods: usize,
    seed: u64,
) -> Result<Trajectory> {
    if periods == 0 {
        return Err(Error::invalid("periods", "must be at least 1"));
    }
    policy.check(cfg)?;
    let kernel = Kernel::new(cfg);
    let alpha = cfg.profile.alpha();
    let mut rng = SimRng::new(seed);
    let mut s = cfg.initial_state;
    let mut outages = Vec::with_capacity(periods);
    for _ in 0..periods {
        let lambda = policy.at(state::position(s, cfg.a_max));
        let eps = kernel.error_rates(s, lambda);
        let failed = [rng.bernoulli(eps[0]), rng.bernoulli(eps[1])];
        let good = [rng.bernoulli(alpha[0]), rng.bernoulli(alpha[1])];
        let mut aoi = [1, 1];
        for m in 0..2 {
            if failed[m] {
                aoi[m] = (s.aoi[m] + 1).min(cfg.a_max);
            }
        }
        s = SystemState { aoi, good };
        outages.push(cfg.is_outage(s));
    }
    Ok(Trajectory {
        outages,
        final_state: s,
    })
}

pub fn simulate(
    cfg: &SystemConfig,
    policy: &Policy,
    periods: usize,
    seed: u64,
) -> Result<SimResult> {
    let t = simulate_trajectory(cfg, policy, periods, seed)?;
    Ok(SimResult::from_outages(&t.outages, seed, t.final_state))
}

/// Lengths of the maximal runs of outage (`true`) and non-outage periods.
/// Runs touching either end of the sequence are dropped.
pub fn measure_bursts(outages: &[bool]) -> (Vec<u32>, Vec<u32>) {
    let mut bursts = Vec::new();
    let mut iois = Vec::new();
    let n = outages.len();
    let mut start = 0;
    while start < n {
        let value = outages[start];
        let mut end = start;
        while end < n && outages[end] == value {
            end += 1;
        }
        if start > 0 && end < n {
            let len = (end - start) as u32;
            if value {
                bursts.push(len);
            } else {
                iois.push(len);
            }
        }
        start = end;
    }
    (bursts, iois)
}

/// Analytic values that simulated statistics are compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticTargets {
    pub p_out: f64,
    pub mean_outage_duration: Option<f64>,
    pub mean_ioi: Option<f64>,
}

/// Squared estimation error normalized to the squared measurement,
/// `((measured - analytic) / measured)^2`. `None` when nothing was measured.
pub fn normalized_error(measured: Option<f64>, analytic: Option<f64>) -> Option<f64> {
    let (m, a) = (measured?, analytic?);
    if m == 0.0 {
        return None;
    }
    Some(((m - a) / m).powi(2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedErrors {
    pub p_out: Option<f64>,
    pub mean_burst: Option<f64>,
    pub mean_ioi: Option<f64>,
}

impl NormalizedErrors {
    pub fn new(
        outage_rate: f64,
        mean_burst: Option<f64>,
        mean_ioi: Option<f64>,
        targets: &AnalyticTargets,
    ) -> Self {
        NormalizedErrors {
            p_out: normalized_error(Some(outage_rate), Some(targets.p_out)),
            mean_burst: normalized_error(mean_burst, targets.mean_outage_duration),
            mean_ioi: normalized_error(mean_ioi, targets.mean_ioi),
        }
    }
}

/// Aggregate of several independent repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionSummary {
    pub reps: usize,
    pub periods: usize,
    pub master_seed: u64,
    pub outage_rates: Vec<f64>,
    pub mean_outage_rate: f64,
    pub std_outage_rate: f64,
    /// Standard error of `mean_outage_rate`.
    pub std_error: f64,
    pub median_outage_rate: f64,
    pub burst_count: usize,
    pub ioi_count: usize,
    pub mean_burst: Option<f64>,
    pub mean_ioi: Option<f64>,
    pub errors: Option<NormalizedErrors>,
}

impl RepetitionSummary {
    /// Aggregates results; the statistics do not depend on the order of `results`.
    pub fn from_results(
        results: &[SimResult],
        master_seed: u64,
        targets: Option<&AnalyticTargets>,
    ) -> Self {
        let reps = results.len();
        let mut rates: Vec<f64> = results.iter().map(|r| r.outage_rate).collect();
        let mut sorted = rates.clone();
        sorted.sort_by(f64::total_cmp);
        // summing in sorted order makes the aggregate order independent
        let mean = sorted.iter().sum::<f64>() / reps as f64;
        let var = if reps > 1 {
            let mut dev: Vec<f64> = sorted.iter().map(|r| (r - mean).powi(2)).collect();
            dev.sort_by(f64::total_cmp);
            dev.iter().sum::<f64>() / (reps - 1) as f64
        } else {
            0.0
        };
        let bursts: u64 = results
            .iter()
            .flat_map(|r| &r.burst_durations)
            .map(|&d| u64::from(d))
            .sum();
        let burst_count: usize = results.iter().map(|r| r.burst_durations.len()).sum();
        let iois: u64 = results
            .iter()
            .flat_map(|r| &r.ioi_durations)
            .map(|&d| u64::from(d))
            .sum();
        let ioi_count: usize = results.iter().map(|r| r.ioi_durations.len()).sum();
        let mean_burst = (burst_count > 0).then(|| bursts as f64 / burst_count as f64);
        let mean_ioi = (ioi_count > 0).then(|| iois as f64 / ioi_count as f64);
        let errors = targets.map(|t| NormalizedErrors::new(mean, mean_burst, mean_ioi, t));
        if reps == 0 {
            rates.clear();
        }
        RepetitionSummary {
            reps,
            periods: results.first().map_or(0, |r| r.periods),
            master_seed,
            outage_rates: rates,
            mean_outage_rate: mean,
            std_outage_rate: var.sqrt(),
            std_error: (var / reps as f64).sqrt(),
            median_outage_rate: if sorted.is_empty() {
                f64::NAN
            } else {
                median_sorted(&sorted)
            },
            burst_count,
            ioi_count,
            mean_burst,
            mean_ioi,
            errors,
        }
    }
}

/// Runs `reps` repetitions; repetition `i` uses seed `derive_seed(master_seed, i)`.
pub fn run_repetitions(
    cfg: &SystemConfig,
    policy: &Policy,
    reps: usize,
    periods: usize,
    master_seed: u64,
    targets: Option<&AnalyticTargets>,
) -> Result<(Vec<SimResult>, RepetitionSummary)> {
    if reps == 0 {
        return Err(Error::invalid("reps", "must be at least 1"));
    }
    let results: Vec<SimResult> = (0..reps as u64)
        .into_par_iter()
        .map(|i| simulate(cfg, policy, periods, rng::derive_seed(master_seed, i)))
        .collect::<Result<_>>()?;
    let summary = RepetitionSummary::from_results(&results, master_seed, targets);
    Ok((results, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::{ChannelProfile, LinkParams};

    fn cfg() -> SystemConfig {
        SystemConfig::new(
            ChannelProfile::new([0.6, 0.4], -12.2, -15.2).unwrap(),
            LinkParams::new(1000, 16).unwrap(),
            5,
            3,
            1e-5,
            SystemState::new(1, 1, false, false),
        )
        .unwrap()
    }

    #[test]
    fn run_measurement_examples() {
        let (f, t) = (false, true);
        assert_eq!(measure_bursts(&[f, t, t, f, f, f, t]), (vec![2], vec![3]));
        assert_eq!(measure_bursts(&[f; 6]), (vec![], vec![]));
        assert_eq!(measure_bursts(&[f, t, f, t, f]), (vec![1, 1], vec![1]));
        assert_eq!(measure_bursts(&[]), (vec![], vec![]));
    }

    #[test]
    fn starved_device_saturates() {
        let c = cfg();
        let t = simulate_trajectory(&c, &Policy::constant(0, &c), 50, 9).unwrap();
        // device 1 fails every period: AoI 2, 3, 4, ... so outage from period 3 on
        assert!(!t.outages[0] && !t.outages[1]);
        assert!(t.outages[2..].iter().all(|&o| o));
        assert_eq!(t.final_state.aoi[0], 5);
    }

    #[test]
    fn deterministic_under_seed() {
        let c = cfg();
        let p = Policy::constant(480, &c);
        assert_eq!(
            simulate(&c, &p, 2000, 5).unwrap(),
            simulate(&c, &p, 2000, 5).unwrap()
        );
        assert_ne!(
            simulate(&c, &p, 2000, 5).unwrap(),
            simulate(&c, &p, 2000, 6).unwrap()
        );
    }

    #[test]
    fn result_invariants() {
        let c = cfg();
        let r = simulate(&c, &Policy::constant(200, &c), 5000, 1).unwrap();
        assert_eq!(r.outage_rate, r.outage_count as f64 / 5000.0);
        assert!(r
            .burst_durations
            .iter()
            .chain(&r.ioi_durations)
            .all(|&d| d >= 1));
        let covered: u32 = r.burst_durations.iter().chain(&r.ioi_durations).sum();
        assert!(covered as usize <= r.periods);
        assert!(r.final_state.is_valid(5));
        assert!(simulate(&c, &Policy::constant(200, &c), 0, 1).is_err());
    }

    #[test]
    fn single_repetition_equals_simulate() {
        let c = cfg();
        let p = Policy::constant(450, &c);
        let (results, summary) = run_repetitions(&c, &p, 1, 1000, 77, None).unwrap();
        let direct = simulate(&c, &p, 1000, rng::derive_seed(77, 0)).unwrap();
        assert_eq!(results[0], direct);
        assert_eq!(summary.mean_outage_rate, direct.outage_rate);
        assert_eq!(summary.mean_burst, direct.mean_burst);
    }

    #[test]
    fn aggregation_ignores_order() {
        let c = cfg();
        let p = Policy::constant(300, &c);
        let (mut results, summary) = run_repetitions(&c, &p, 12, 800, 3, None).unwrap();
        results.reverse();
        results.swap(2, 7);
        let again = RepetitionSummary::from_results(&results, 3, None);
        assert_eq!(again.mean_outage_rate, summary.mean_outage_rate);
        assert_eq!(again.std_outage_rate, summary.std_outage_rate);
        assert_eq!(again.mean_burst, summary.mean_burst);
        assert_eq!(again.mean_ioi, summary.mean_ioi);
    }

    #[test]
    fn error_normalization() {
        assert_eq!(normalized_error(Some(2.0), Some(1.0)), Some(0.25));
        assert_eq!(normalized_error(None, Some(1.0)), None);
        assert_eq!(normalized_error(Some(0.0), Some(1.0)), None);
    }
}
