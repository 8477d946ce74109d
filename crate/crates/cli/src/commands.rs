use std::path::Path;

use aoi_outage::experiments::{self, PolicySource};
use aoi_outage::optimizer::{self, OptimizeReport, SeedSummary};
use aoi_outage::sim::{AnalyticTargets, RepetitionSummary};
use aoi_outage::{chain, BurstReport, DurationConvention, OutageRule, PenaltyKind, Scenario};
use serde::Serialize;

use crate::output::{self, CliError, CliResult, Metadata, PolicyDoc};
use crate::{Command, ScenarioArgs};

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Optimize {
            scenario,
            penalty,
            seeds,
            master_seed,
            out,
        } => optimize(
            &load(&scenario)?,
            penalty,
            seeds,
            master_seed,
            out.out.as_deref(),
        ),
        Command::Evaluate {
            scenario,
            policy,
            convention,
            out,
        } => evaluate(
            &load(&scenario)?,
            &policy.policy,
            convention.into(),
            out.out.as_deref(),
        ),
        Command::Simulate {
            scenario,
            policy,
            reps,
            periods,
            master_seed,
            csv,
            out,
        } => {
            let mut s = load(&scenario)?;
            if let Some(r) = reps {
                s.file.simulation.reps = r;
            }
            if let Some(p) = periods {
                s.file.simulation.periods = p;
            }
            if let Some(m) = master_seed {
                s.file.simulation.master_seed = m;
            }
            let s = Scenario::from_file(s.file)?;
            simulate(&s, &policy.policy, csv.as_deref(), out.out.as_deref())
        }
        Command::ReproduceTable2 {
            configs,
            outage_rule,
            out,
        } => {
            let names: Vec<String> = if configs.is_empty() {
                aoi_outage::scenario::PRESET_NAMES
                    .iter()
                    .map(|s| s.to_string())
                    .collect()
            } else {
                configs
            };
            let scenarios = names
                .iter()
                .map(|c| {
                    Ok(apply_rule(
                        output::load_scenario(c)?,
                        outage_rule.map(Into::into),
                    ))
                })
                .collect::<CliResult<Vec<_>>>()?;
            reproduce_table2(&scenarios, out.out.as_deref())
        }
        Command::BurstConvergence {
            scenario,
            policies,
            checkpoints,
            master_seed,
            convention,
            out,
        } => {
            let s = load(&scenario)?;
            let seed = master_seed.unwrap_or(s.simulation.master_seed);
            burst_convergence(
                &s,
                policies,
                &checkpoints,
                seed,
                convention.into(),
                out.out.as_deref(),
            )
        }
    }
}

fn load(args: &ScenarioArgs) -> CliResult<Scenario> {
    Ok(apply_rule(
        output::load_scenario(&args.config)?,
        args.outage_rule.map(Into::into),
    ))
}

fn apply_rule(s: Scenario, rule: Option<OutageRule>) -> Scenario {
    match rule {
        Some(r) => s.with_outage_rule(r),
        None => s,
    }
}

#[derive(Serialize)]
struct OptimizeOutput<'a> {
    metadata: Metadata,
    penalty: PenaltyKind,
    seeds: usize,
    master_seed: u64,
    max_iter: usize,
    summary: SeedSummary,
    best_p_out: f64,
    best_policy: PolicyDoc,
    runs: &'a [OptimizeReport],
}

fn optimize(
    scenario: &Scenario,
    penalty: PenaltyKind,
    seeds: Option<usize>,
    master_seed: Option<u64>,
    out: Option<&Path>,
) -> CliResult<()> {
    let seeds = seeds.unwrap_or(scenario.optimizer.seeds);
    if seeds == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    let master_seed = master_seed.unwrap_or(scenario.optimizer.master_seed);
    let max_iter = scenario.optimizer.max_iter;
    let cfg = &scenario.system;
    let runs = optimizer::optimize_many(cfg, penalty, master_seed, seeds, max_iter)?;
    let summary = optimizer::summarize(&runs).expect("at least one run");
    let best = &runs[summary.best_index];
    log::info!("best of {seeds} seeds: P_out = {:.6e}", best.final_p_out);
    let doc = OptimizeOutput {
        metadata: Metadata::new(scenario, DurationConvention::RunLength),
        penalty,
        seeds,
        master_seed,
        max_iter,
        best_p_out: best.final_p_out,
        best_policy: PolicyDoc::new(&best.final_policy, cfg.a_max),
        summary,
        runs: &runs,
    };
    output::write_json(out, &doc)
}

#[derive(Serialize)]
struct EvaluateOutput {
    metadata: Metadata,
    policy_source: String,
    p_out: f64,
    bursts: BurstReport,
    policy: PolicyDoc,
}

fn evaluate(
    scenario: &Scenario,
    source: &str,
    convention: DurationConvention,
    out: Option<&Path>,
) -> CliResult<()> {
    let cfg = &scenario.system;
    let policy = output::load_policy(source, scenario)?;
    let (p, pi) = chain::solve_policy(cfg, &policy)?;
    let bursts = aoi_outage::burst::analyze(cfg, &p, &pi, convention)?;
    let doc = EvaluateOutput {
        metadata: Metadata::new(scenario, convention),
        policy_source: source.to_owned(),
        p_out: chain::outage_probability(&pi, cfg),
        bursts,
        policy: PolicyDoc::new(&policy, cfg.a_max),
    };
    output::write_json(out, &doc)
}

#[derive(Serialize)]
struct SimulateOutput {
    metadata: Metadata,
    policy_source: String,
    analytic: AnalyticTargets,
    summary: RepetitionSummary,
}

/// One CSV row per repetition. Columns are stable; empty cells mean the run
/// had no complete burst or interval.
#[derive(Serialize)]
struct RepRow {
    rep: usize,
    seed: u64,
    periods: usize,
    outage_count: usize,
    outage_rate: f64,
    bursts: usize,
    mean_burst: Option<f64>,
    intervals: usize,
    mean_ioi: Option<f64>,
}

fn simulate(
    scenario: &Scenario,
    source: &str,
    csv: Option<&Path>,
    out: Option<&Path>,
) -> CliResult<()> {
    let policy = output::load_policy(source, scenario)?;
    let (results, summary, report) = experiments::simulate_against_analytic(scenario, &policy)?;
    if let Some(path) = csv {
        let rows: Vec<RepRow> = results
            .iter()
            .enumerate()
            .map(|(rep, r)| RepRow {
                rep,
                seed: r.seed,
                periods: r.periods,
                outage_count: r.outage_count,
                outage_rate: r.outage_rate,
                bursts: r.burst_durations.len(),
                mean_burst: r.mean_burst,
                intervals: r.ioi_durations.len(),
                mean_ioi: r.mean_ioi,
            })
            .collect();
        output::write_csv(Some(path), &rows)?;
    }
    let doc = SimulateOutput {
        metadata: Metadata::new(scenario, DurationConvention::RunLength),
        policy_source: source.to_owned(),
        analytic: AnalyticTargets {
            p_out: report.p_out(),
            mean_outage_duration: report.stats().map(|s| s.mean_outage_duration),
            mean_ioi: report.stats().map(|s| s.mean_ioi),
        },
        summary,
    };
    output::write_json(out, &doc)
}

#[derive(Serialize)]
struct TableRow {
    scenario: String,
    policy: String,
    outage_rule: &'static str,
    analytic_p_out: f64,
    empirical_p_out: f64,
    empirical_std_error: f64,
    reps: usize,
    periods: usize,
    reference_p_out: Option<f64>,
    relative_deviation: Option<f64>,
    seed_best_p_out: Option<f64>,
    seed_median_p_out: Option<f64>,
}

fn reproduce_table2(scenarios: &[Scenario], out: Option<&Path>) -> CliResult<()> {
    let rows = experiments::table2(scenarios)?;
    let rows: Vec<TableRow> = rows
        .into_iter()
        .zip(
            scenarios
                .iter()
                .flat_map(|s| PolicySource::TABLE.map(|_| s)),
        )
        .map(|(r, s)| TableRow {
            outage_rule: s.system.outage_rule.as_str(),
            relative_deviation: r.reference_p_out.map(|p| (r.analytic_p_out - p) / p),
            seed_best_p_out: r.optimizer.as_ref().map(|o| o.best_p_out),
            seed_median_p_out: r.optimizer.as_ref().map(|o| o.median_p_out),
            scenario: r.scenario,
            policy: r.policy,
            analytic_p_out: r.analytic_p_out,
            empirical_p_out: r.empirical_p_out,
            empirical_std_error: r.empirical_std_error,
            reps: r.reps,
            periods: r.periods,
            reference_p_out: r.reference_p_out,
        })
        .collect();
    output::write_csv(out, &rows)
}

fn burst_convergence(
    scenario: &Scenario,
    policies: usize,
    checkpoints: &[usize],
    master_seed: u64,
    convention: DurationConvention,
    out: Option<&Path>,
) -> CliResult<()> {
    if policies == 0 || checkpoints.is_empty() || checkpoints.contains(&0) {
        return Err(CliError::Usage(
            "need at least one policy and positive checkpoints".into(),
        ));
    }
    let rows = experiments::burst_convergence(
        &scenario.system,
        policies,
        checkpoints,
        master_seed,
        convention,
    )?;
    for m in experiments::median_errors(&rows) {
        log::info!(
            "checkpoint {}: median errors p_out {:.3e} burst {:.3e} ioi {:.3e}",
            m.checkpoint,
            m.p_out,
            m.mean_burst,
            m.mean_ioi
        );
    }
    output::write_csv(out, &rows)
}
