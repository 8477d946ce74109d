//! Experiment drivers shared by the command-line tool, the Python bindings
//! and the acceptance tests.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::burst::{self, BurstReport, DurationConvention};
use crate::chain::{self, Policy};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::optimizer::{self, OptimizeReport, PenaltyKind, SeedSummary};
use crate::rng::{self, SimRng};
use crate::scenario::Scenario;
use crate::sim::{self, AnalyticTargets, RepetitionSummary, SimResult};

/// Observation horizons of the burst-convergence study.
pub const CHECKPOINTS: [usize; 5] = [500, 1000, 2500, 5000, 10_000];

const REFERENCE_CSV: &str = include_str!("../data/reference_outage_rates.csv");

/// Where the evaluated policy comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolicySource {
    Naive,
    MinError,
    Optimized(PenaltyKind),
}

impl PolicySource {
    /// The six rows of the benchmark table, optimized policies first.
    pub const TABLE: [PolicySource; 6] = [
        PolicySource::Optimized(PenaltyKind::BinaryOutage),
        PolicySource::Optimized(PenaltyKind::MeanSumAoI),
        PolicySource::Optimized(PenaltyKind::MeanPeakAoI),
        PolicySource::Optimized(PenaltyKind::ExpMeanPeakAoI),
        PolicySource::Naive,
        PolicySource::MinError,
    ];

    pub fn label(self) -> &'static str {
        match self {
            PolicySource::Naive => "naive",
            PolicySource::MinError => "min-error",
            PolicySource::Optimized(kind) => kind.name(),
        }
    }
}

/// Published outage rate (as a probability) for a policy label and scenario.
pub fn reference_rate(policy: &str, scenario: &str) -> Option<f64> {
    let mut lines = REFERENCE_CSV
        .lines()
        .filter(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty());
    let header: Vec<&str> = lines.next()?.split(',').collect();
    let column = header.iter().position(|&h| h == scenario)?;
    lines
        .map(|l| l.split(',').collect::<Vec<_>>())
        .find(|cells| cells[0] == policy)
        .and_then(|cells| cells.get(column)?.trim().parse::<f64>().ok())
        .map(|percent| percent / 100.0)
}

/// Per-seed optimizer reports with their summary.
pub type SeedRuns = (Vec<OptimizeReport>, SeedSummary);

/// Builds the policy for `source`; optimized sources also return the per-seed reports.
pub fn resolve_policy(
    scenario: &Scenario,
    source: PolicySource,
) -> Result<(Policy, Option<SeedRuns>)> {
    let cfg = &scenario.system;
    match source {
        PolicySource::Naive => Ok((optimizer::naive_policy(cfg), None)),
        PolicySource::MinError => Ok((optimizer::min_error_policy(cfg), None)),
        PolicySource::Optimized(kind) => {
            let settings = &scenario.optimizer;
            let reports = optimizer::optimize_many(
                cfg,
                kind,
                settings.master_seed,
                settings.seeds,
                settings.max_iter,
            )?;
            let summary =
                optimizer::summarize(&reports).ok_or_else(|| Error::invalid("seeds", "no runs"))?;
            let policy = reports[summary.best_index].final_policy.clone();
            Ok((policy, Some((reports, summary))))
        }
    }
}

/// Analytic targets of a policy (outage probability and burst statistics).
pub fn analytic_targets(
    cfg: &SystemConfig,
    policy: &Policy,
) -> Result<(AnalyticTargets, BurstReport)> {
    let report = burst::burst_stats(cfg, policy, DurationConvention::RunLength)?;
    let targets = AnalyticTargets {
        p_out: report.p_out(),
        mean_outage_duration: report.stats().map(|s| s.mean_outage_duration),
        mean_ioi: report.stats().map(|s| s.mean_ioi),
    };
    Ok((targets, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub scenario: String,
    pub policy: String,
    pub analytic_p_out: f64,
    pub empirical_p_out: f64,
    pub empirical_std_error: f64,
    pub reps: usize,
    pub periods: usize,
    pub reference_p_out: Option<f64>,
    /// Best and median over optimizer seeds, for optimized rows.
    pub optimizer: Option<SeedSummary>,
}

/// Evaluates one scenario/policy cell of the benchmark table.
pub fn table2_cell(scenario: &Scenario, source: PolicySource) -> Result<Table2Row> {
    let cfg = &scenario.system;
    let (policy, opt) = resolve_policy(scenario, source)?;
    let (_, pi) = chain::solve_policy(cfg, &policy)?;
    let analytic = chain::outage_probability(&pi, cfg);
    let s = &scenario.simulation;
    let (_, summary) = sim::run_repetitions(cfg, &policy, s.reps, s.periods, s.master_seed, None)?;
    Ok(Table2Row {
        scenario: scenario.name.clone(),
        policy: source.label().to_owned(),
        analytic_p_out: analytic,
        empirical_p_out: summary.mean_outage_rate,
        empirical_std_error: summary.std_error,
        reps: s.reps,
        periods: s.periods,
        reference_p_out: reference_rate(source.label(), &scenario.name),
        optimizer: opt.map(|(_, summary)| summary),
    })
}

/// All six policies for every given scenario, in table order.
pub fn table2(scenarios: &[Scenario]) -> Result<Vec<Table2Row>> {
    let cells: Vec<(&Scenario, PolicySource)> = scenarios
        .iter()
        .flat_map(|s| PolicySource::TABLE.into_iter().map(move |p| (s, p)))
        .collect();
    cells
        .into_par_iter()
        .map(|(s, p)| table2_cell(s, p))
        .collect()
}

/// Uniformly random allocation in every state.
pub fn random_policy(cfg: &SystemConfig, seed: u64) -> Policy {
    let mut rng = SimRng::new(seed);
    Policy::from_vec(
        (0..cfg.state_count())
            .map(|_| rng.up_to(cfg.blocklength()))
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub policy_id: usize,
    pub checkpoint: usize,
    pub measured_p_out: f64,
    pub measured_mean_burst: Option<f64>,
    pub measured_mean_ioi: Option<f64>,
    pub analytic_p_out: f64,
    pub analytic_mean_burst: Option<f64>,
    pub analytic_mean_ioi: Option<f64>,
    pub err_p_out: Option<f64>,
    pub err_mean_burst: Option<f64>,
    pub err_mean_ioi: Option<f64>,
}

/// Simulates `n_policies` random policies and compares prefix statistics at
/// each checkpoint with the analytic estimates.
///
/// Policy `i` is drawn from seed `derive_seed(master_seed, 2 i)` and simulated
/// with seed `derive_seed(master_seed, 2 i + 1)`.
pub fn burst_convergence(
    cfg: &SystemConfig,
    n_policies: usize,
    checkpoints: &[usize],
    master_seed: u64,
    convention: DurationConvention,
) -> Result<Vec<ConvergenceRow>> {
    let horizon = checkpoints
        .iter()
        .copied()
        .max()
        .ok_or_else(|| Error::invalid("checkpoints", "empty"))?;
    let shift = match convention {
        DurationConvention::RunLength => 0.0,
        DurationConvention::Bracketed => 1.0,
    };
    let per_policy: Vec<Vec<ConvergenceRow>> = (0..n_policies)
        .into_par_iter()
        .map(|id| {
            let policy = random_policy(cfg, rng::derive_seed(master_seed, 2 * id as u64));
            let report = burst::burst_stats(cfg, &policy, convention)?;
            let targets = AnalyticTargets {
                p_out: report.p_out(),
                mean_outage_duration: report.stats().map(|s| s.mean_outage_duration),
                mean_ioi: report.stats().map(|s| s.mean_ioi),
            };
            let sim_seed = rng::derive_seed(master_seed, 2 * id as u64 + 1);
            let trajectory = sim::simulate_trajectory(cfg, &policy, horizon, sim_seed)?;
            Ok(checkpoints
                .iter()
                .map(|&c| {
                    let r = SimResult::from_outages(
                        &trajectory.outages[..c],
                        sim_seed,
                        trajectory.final_state,
                    );
                    let burst = r.mean_burst.map(|m| m + shift);
                    let errors =
                        sim::NormalizedErrors::new(r.outage_rate, burst, r.mean_ioi, &targets);
                    ConvergenceRow {
                        policy_id: id,
                        checkpoint: c,
                        measured_p_out: r.outage_rate,
                        measured_mean_burst: burst,
                        measured_mean_ioi: r.mean_ioi,
                        analytic_p_out: targets.p_out,
                        analytic_mean_burst: targets.mean_outage_duration,
                        analytic_mean_ioi: targets.mean_ioi,
                        err_p_out: errors.p_out,
                        err_mean_burst: errors.mean_burst,
                        err_mean_ioi: errors.mean_ioi,
                    }
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_policy.into_iter().flatten().collect())
}

/// Median normalized errors per checkpoint; missing measurements count as infinite error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMedians {
    pub checkpoint: usize,
    pub p_out: f64,
    pub mean_burst: f64,
    pub mean_ioi: f64,
}

pub fn median_errors(rows: &[ConvergenceRow]) -> Vec<CheckpointMedians> {
    let mut checkpoints: Vec<usize> = rows.iter().map(|r| r.checkpoint).collect();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    checkpoints
        .into_iter()
        .map(|c| {
            let at: Vec<&ConvergenceRow> = rows.iter().filter(|r| r.checkpoint == c).collect();
            let med = |f: fn(&ConvergenceRow) -> Option<f64>| {
                let mut v: Vec<f64> = at.iter().map(|r| f(r).unwrap_or(f64::INFINITY)).collect();
                v.sort_by(f64::total_cmp);
                optimizer::median_sorted(&v)
            };
            CheckpointMedians {
                checkpoint: c,
                p_out: med(|r| r.err_p_out),
                mean_burst: med(|r| r.err_mean_burst),
                mean_ioi: med(|r| r.err_mean_ioi),
            }
        })
        .collect()
}

/// Simulated repetitions of `policy` compared against its analytic values.
pub fn simulate_against_analytic(
    scenario: &Scenario,
    policy: &Policy,
) -> Result<(Vec<SimResult>, RepetitionSummary, BurstReport)> {
    let cfg = &scenario.system;
    let (targets, report) = analytic_targets(cfg, policy)?;
    let s = &scenario.simulation;
    let (results, summary) = sim::run_repetitions(
        cfg,
        policy,
        s.reps,
        s.periods,
        s.master_seed,
        Some(&targets),
    )?;
    Ok((results, summary, report))
}
