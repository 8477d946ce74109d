//! Recursive blocklength-policy optimizer.
//!
//! Each iteration solves the stationary distribution of the current policy
//! and then, state by state, picks the allocation that minimizes the expected
//! penalty of the next state. The loop stops once the policy stops moving.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{self, Kernel, Policy, SteadyState};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::rng::{self, SimRng};
use crate::state::{self, SystemState};

/// Default iteration cap of [`optimize`].
pub const DEFAULT_MAX_ITER: usize = 200;

/// Per-state cost of landing in a successor state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyKind {
    /// 1 in the outage set, 0 elsewhere.
    #[serde(rename = "binary")]
    BinaryOutage,
    /// `A1 + A2`.
    #[serde(rename = "sum-aoi")]
    MeanSumAoI,
    /// `max(A1, A2)`.
    #[serde(rename = "peak-aoi")]
    MeanPeakAoI,
    /// `exp(max(A1, A2))`.
    #[serde(rename = "exp-peak-aoi")]
    ExpMeanPeakAoI,
}

impl PenaltyKind {
    pub const ALL: [PenaltyKind; 4] = [
        PenaltyKind::BinaryOutage,
        PenaltyKind::MeanSumAoI,
        PenaltyKind::MeanPeakAoI,
        PenaltyKind::ExpMeanPeakAoI,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PenaltyKind::BinaryOutage => "binary",
            PenaltyKind::MeanSumAoI => "sum-aoi",
            PenaltyKind::MeanPeakAoI => "peak-aoi",
            PenaltyKind::ExpMeanPeakAoI => "exp-peak-aoi",
        }
    }

    /// Cost assigned to the successor state `s`.
    pub fn weight(self, cfg: &SystemConfig, s: SystemState) -> f64 {
        match self {
            PenaltyKind::BinaryOutage => {
                if cfg.is_outage(s) {
                    1.0
                } else {
                    0.0
                }
            }
            PenaltyKind::MeanSumAoI => f64::from(s.sum_aoi()),
            PenaltyKind::MeanPeakAoI => f64::from(s.peak_aoi()),
            PenaltyKind::ExpMeanPeakAoI => f64::from(s.peak_aoi()).exp(),
        }
    }
}

impl fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PenaltyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PenaltyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::invalid(
                    "penalty",
                    format!(
                        "unknown penalty `{s}`; expected binary, sum-aoi, peak-aoi or exp-peak-aoi"
                    ),
                )
            })
    }
}

/// Expected successor cost from `from` under `lambda`, before weighting by `pi_i`.
#[inline]
fn expected_weight(kernel: &Kernel<'_>, kind: PenaltyKind, from: SystemState, lambda: u32) -> f64 {
    kernel
        .successors(from, lambda)
        .iter()
        .map(|&(to, p)| kind.weight(kernel.config(), to) * p)
        .sum()
}

/// Penalty of allocating `lambda` in the state with 1-based index `from_index`:
/// `pi_i * sum_j w(s_j) P(s_i -> s_j)`.
///
/// Only the `i`-th term of the full double sum depends on `lambda_i`, so the
/// other terms are dropped.
pub fn penalty(
    cfg: &SystemConfig,
    lambda: u32,
    from_index: usize,
    pi: &SteadyState,
    kind: PenaltyKind,
) -> Result<f64> {
    if lambda > cfg.blocklength() {
        return Err(Error::AllocationOutOfRange {
            lambda,
            total: cfg.blocklength(),
        });
    }
    let from = state::index_to_state(from_index, cfg.a_max)?;
    let kernel = Kernel::new(cfg);
    Ok(pi.as_slice()[from_index - 1] * expected_weight(&kernel, kind, from, lambda))
}

/// Smallest allocation minimizing the expected weight out of `from`.
fn best_allocation(kernel: &Kernel<'_>, kind: PenaltyKind, from: SystemState) -> u32 {
    let mut best = (0, f64::INFINITY);
    for lambda in 0..=kernel.config().blocklength() {
        let v = expected_weight(kernel, kind, from, lambda);
        if v < best.1 {
            best = (lambda, v);
        }
    }
    best.0
}

fn improve_with(kernel: &Kernel<'_>, pi: &SteadyState, kind: PenaltyKind) -> Policy {
    let a_max = kernel.config().a_max;
    let lambda = state::enumerate_states(a_max)
        .into_par_iter()
        .zip(pi.as_slice().par_iter())
        .map(|(from, &weight)| {
            // every allocation scores zero in a state of zero stationary mass
            if weight == 0.0 {
                0
            } else {
                best_allocation(kernel, kind, from)
            }
        })
        .collect();
    Policy::from_vec(lambda)
}

/// One improvement step: per state, the allocation in `0..=N` with the least
/// penalty under `pi`; ties go to the smaller allocation.
pub fn improve_policy(cfg: &SystemConfig, pi: &SteadyState, kind: PenaltyKind) -> Policy {
    improve_with(&Kernel::new(cfg), pi, kind)
}

/// `2 sqrt(|new - old|_2 / |new + old|_2)`.
pub fn convergence_metric(new: &Policy, old: &Policy) -> Result<f64> {
    if new.len() != old.len() {
        return Err(Error::PolicyLength {
            expected: old.len(),
            got: new.len(),
        });
    }
    let (mut diff, mut sum) = (0.0, 0.0);
    for (&a, &b) in new.as_slice().iter().zip(old.as_slice()) {
        let (a, b) = (f64::from(a), f64::from(b));
        diff += (a - b) * (a - b);
        sum += (a + b) * (a + b);
    }
    if sum == 0.0 {
        return Err(Error::DegenerateMetric);
    }
    Ok(2.0 * (diff.sqrt() / sum.sqrt()).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    MaxIterations,
    CycleDetected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub metric: f64,
    pub p_out: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport {
    pub penalty: PenaltyKind,
    pub seed: u64,
    pub initial_p_out: f64,
    pub final_policy: Policy,
    pub final_p_out: f64,
    pub iterations: usize,
    pub convergence_trace: Vec<TraceEntry>,
    pub terminated_by: Termination,
}

/// Runs the recursive optimizer from a random initial policy drawn from `seed`.
///
/// On convergence the last policy is returned; when the loop is cut short by
/// `max_iter` or revisits an earlier policy, the iterate with the lowest
/// stationary outage probability is returned instead.
pub fn optimize(
    cfg: &SystemConfig,
    kind: PenaltyKind,
    seed: u64,
    max_iter: usize,
) -> Result<OptimizeReport> {
    if max_iter == 0 {
        return Err(Error::invalid("max_iter", "must be at least 1"));
    }
    let kernel = Kernel::new(cfg);
    let total = cfg.blocklength();
    let mut rng = SimRng::new(seed);
    let mut policy = Policy::from_vec((0..cfg.state_count()).map(|_| rng.up_to(total)).collect());

    let mut pi = chain::steady_state(&chain::build_with(&kernel, &policy)?)?;
    let initial_p_out = chain::outage_probability(&pi, cfg);
    let mut best = (initial_p_out, policy.clone());
    let mut seen = HashSet::from([policy.clone()]);
    let mut trace = Vec::new();

    loop {
        let iteration = trace.len() + 1;
        let next = improve_with(&kernel, &pi, kind);
        let metric = if next == policy {
            0.0
        } else {
            convergence_metric(&next, &policy)?
        };
        policy = next;
        pi = chain::steady_state(&chain::build_with(&kernel, &policy)?)?;
        let p_out = chain::outage_probability(&pi, cfg);
        trace.push(TraceEntry {
            iteration,
            metric,
            p_out,
        });
        if p_out < best.0 {
            best = (p_out, policy.clone());
        }

        let terminated_by = if metric <= cfg.epsilon_cvg {
            Some(Termination::Converged)
        } else if !seen.insert(policy.clone()) {
            Some(Termination::CycleDetected)
        } else if iteration >= max_iter {
            Some(Termination::MaxIterations)
        } else {
            None
        };

        if let Some(terminated_by) = terminated_by {
            let (final_p_out, final_policy) = match terminated_by {
                Termination::Converged => (p_out, policy),
                _ => best,
            };
            return Ok(OptimizeReport {
                penalty: kind,
                seed,
                initial_p_out,
                final_policy,
                final_p_out,
                iterations: trace.len(),
                convergence_trace: trace,
                terminated_by,
            });
        }
    }
}

/// Reports of `n_seeds` independent runs, seeds derived from `master_seed`.
pub fn optimize_many(
    cfg: &SystemConfig,
    kind: PenaltyKind,
    master_seed: u64,
    n_seeds: usize,
    max_iter: usize,
) -> Result<Vec<OptimizeReport>> {
    (0..n_seeds as u64)
        .into_par_iter()
        .map(|i| optimize(cfg, kind, rng::derive_seed(master_seed, i), max_iter))
        .collect()
}

/// Best and median final outage probability over several runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub best_index: usize,
    pub best_p_out: f64,
    pub median_p_out: f64,
}

pub fn summarize(reports: &[OptimizeReport]) -> Option<SeedSummary> {
    let (best_index, best) = reports
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.final_p_out.total_cmp(&b.1.final_p_out))?;
    let mut values: Vec<f64> = reports.iter().map(|r| r.final_p_out).collect();
    values.sort_by(f64::total_cmp);
    Some(SeedSummary {
        best_index,
        best_p_out: best.final_p_out,
        median_p_out: median_sorted(&values),
    })
}

pub(crate) fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Equal split, `floor(N / 2)` to device 1 in every state.
pub fn naive_policy(cfg: &SystemConfig) -> Policy {
    Policy::constant(cfg.blocklength() / 2, cfg)
}

/// Per state, the split minimizing the sum of both devices' error rates
/// under the current channel bits; ties go to the smaller allocation.
pub fn min_error_policy(cfg: &SystemConfig) -> Policy {
    let kernel = Kernel::new(cfg);
    let total = cfg.blocklength();
    let mut by_bits = [[0u32; 2]; 2];
    for x1 in [false, true] {
        for x2 in [false, true] {
            let probe = SystemState::new(1, 1, x1, x2);
            let mut best = (0, f64::INFINITY);
            for lambda in 0..=total {
                let [e1, e2] = kernel.error_rates(probe, lambda);
                if e1 + e2 < best.1 {
                    best = (lambda, e1 + e2);
                }
            }
            by_bits[usize::from(x1)][usize::from(x2)] = best.0;
        }
    }
    Policy::from_vec(
        state::enumerate_states(cfg.a_max)
            .into_iter()
            .map(|s| by_bits[usize::from(s.good[0])][usize::from(s.good[1])])
            .collect(),
    )
}
