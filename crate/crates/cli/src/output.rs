//! Report envelopes, policy files and output sinks.

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use aoi_outage::state;
use aoi_outage::{DurationConvention, Policy, Scenario, SystemState};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(PathBuf, io::Error),
    Core(aoi_outage::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Io(path, e) => write!(f, "{}: {e}", path.display()),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<aoi_outage::Error> for CliError {
    fn from(e: aoi_outage::Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Metadata block attached to every JSON report.
#[derive(Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub scenario: String,
    pub config_sha256: String,
    pub outage_rule: &'static str,
    pub duration_convention: &'static str,
}

impl Metadata {
    pub fn new(scenario: &Scenario, convention: DurationConvention) -> Self {
        Metadata {
            tool: "aoi-outage",
            version: env!("CARGO_PKG_VERSION"),
            scenario: scenario.name.clone(),
            config_sha256: config_hash(scenario),
            outage_rule: scenario.system.outage_rule.as_str(),
            duration_convention: convention.as_str(),
        }
    }
}

/// SHA-256 of the canonical serialization, so equivalent files hash alike.
pub fn config_hash(scenario: &Scenario) -> String {
    hex::encode(Sha256::digest(scenario.to_json().as_bytes()))
}

pub fn load_scenario(spec: &str) -> CliResult<Scenario> {
    if aoi_outage::scenario::preset_json(spec).is_some() {
        return Ok(Scenario::preset(spec)?);
    }
    let text = read(Path::new(spec))?;
    Ok(Scenario::from_json(&text)?)
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_owned(), e))
}

#[derive(Serialize)]
pub struct StateAllocation {
    pub index: usize,
    pub state: SystemState,
    pub lambda: u32,
}

/// Policy document: the allocation vector plus a per-state listing.
#[derive(Serialize)]
pub struct PolicyDoc {
    pub lambda: Vec<u32>,
    pub by_state: Vec<StateAllocation>,
}

impl PolicyDoc {
    pub fn new(policy: &Policy, a_max: u32) -> Self {
        let by_state = state::enumerate_states(a_max)
            .into_iter()
            .zip(policy.as_slice())
            .enumerate()
            .map(|(i, (s, &lambda))| StateAllocation {
                index: i + 1,
                state: s,
                lambda,
            })
            .collect();
        PolicyDoc {
            lambda: policy.as_slice().to_vec(),
            by_state,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PolicyInput {
    Bare(Vec<u32>),
    Doc { lambda: Vec<u32> },
    Report { best_policy: PolicyLambda },
}

#[derive(Deserialize)]
struct PolicyLambda {
    lambda: Vec<u32>,
}

/// `naive`, `min-error`, or a JSON file holding a bare allocation array, an
/// object with a `lambda` array, or an optimizer report.
pub fn load_policy(source: &str, scenario: &Scenario) -> CliResult<Policy> {
    let cfg = &scenario.system;
    match source {
        "naive" => Ok(aoi_outage::optimizer::naive_policy(cfg)),
        "min-error" => Ok(aoi_outage::optimizer::min_error_policy(cfg)),
        path => {
            let text = read(Path::new(path))?;
            let input: PolicyInput = serde_json::from_str(&text).map_err(|_| {
                CliError::Usage(format!(
                    "{path}: expected an allocation array, an object with `lambda`, or an optimizer report"
                ))
            })?;
            let lambda = match input {
                PolicyInput::Bare(l) | PolicyInput::Doc { lambda: l } => l,
                PolicyInput::Report { best_policy } => best_policy.lambda,
            };
            Ok(Policy::new(lambda, cfg)?)
        }
    }
}

pub fn sink(out: Option<&Path>) -> CliResult<Box<dyn Write>> {
    match out {
        Some(path) => {
            let f = File::create(path).map_err(|e| CliError::Io(path.to_owned(), e))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

pub fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> CliResult<()> {
    let label = out.map_or_else(|| PathBuf::from("<stdout>"), Path::to_owned);
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| CliError::Io(label.clone(), e.into()))?;
    writeln!(w)
        .and_then(|()| w.flush())
        .map_err(|e| CliError::Io(label, e))
}

pub fn write_csv<T: Serialize>(out: Option<&Path>, rows: &[T]) -> CliResult<()> {
    let label = out.map_or_else(|| PathBuf::from("<stdout>"), Path::to_owned);
    let mut w = csv::Writer::from_writer(sink(out)?);
    for row in rows {
        w.serialize(row)
            .map_err(|e| CliError::Io(label.clone(), e.into()))?;
    }
    w.flush().map_err(|e| CliError::Io(label, e))
}
