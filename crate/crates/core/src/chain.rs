//! Transition law of the controlled chain, its dense transition matrix and
//! the stationary analysis built on top of it.

use nalgebra::{DMatrix, DVector, RowDVector};
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::phy::{self, ErrorTable};
use crate::state::{self, SystemState};

/// Row-sum tolerance for a transition matrix.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Largest negative stationary entry that is treated as rounding noise.
pub const NEGATIVE_CLIP: f64 = 1e-14;
/// Maximum accepted stationarity residual `|pi P - pi|_inf`.
pub const RESIDUAL_LIMIT: f64 = 1e-10;

/// Blocklength given to device 1 in each state; device 2 gets the rest.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Policy(Vec<u32>);

impl Policy {
    pub fn new(lambda: Vec<u32>, cfg: &SystemConfig) -> Result<Self> {
        let policy = Policy(lambda);
        policy.check(cfg)?;
        Ok(policy)
    }

    /// Wraps a vector without validation; see [`Policy::check`].
    pub fn from_vec(lambda: Vec<u32>) -> Self {
        Policy(lambda)
    }

    pub fn constant(lambda: u32, cfg: &SystemConfig) -> Self {
        Policy(vec![lambda; cfg.state_count()])
    }

    pub fn check(&self, cfg: &SystemConfig) -> Result<()> {
        if self.0.len() != cfg.state_count() {
            return Err(Error::PolicyLength {
                expected: cfg.state_count(),
                got: self.0.len(),
            });
        }
        let total = cfg.blocklength();
        match self.0.iter().find(|&&l| l > total) {
            Some(&lambda) => Err(Error::AllocationOutOfRange { lambda, total }),
            None => Ok(()),
        }
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<u32> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Allocation at a 0-based position.
    pub fn at(&self, pos: usize) -> u32 {
        self.0[pos]
    }
}

/// Dense row-stochastic matrix; `get(i, j)` is the probability of moving
/// from the state at 0-based position `i` to position `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    p: DMatrix<f64>,
}

impl TransitionMatrix {
    /// Validates entries and row sums.
    pub fn new(p: DMatrix<f64>) -> Result<Self> {
        if p.nrows() != p.ncols() || p.nrows() == 0 {
            return Err(Error::NotStochastic(format!(
                "matrix is {}x{}, expected square and non-empty",
                p.nrows(),
                p.ncols()
            )));
        }
        for (i, row) in p.row_iter().enumerate() {
            if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::NotStochastic(format!("entry {v} in row {i}")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::NotStochastic(format!("row {i} sums to {sum}")));
            }
        }
        Ok(TransitionMatrix { p })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::NotStochastic("rows have unequal lengths".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    /// Largest deviation of a row sum from one.
    pub fn max_row_defect(&self) -> f64 {
        self.p
            .row_iter()
            .map(|r| (r.sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Stationary distribution of an ergodic chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SteadyState {
    pi: Vec<f64>,
}

impl SteadyState {
    pub fn as_slice(&self) -> &[f64] {
        &self.pi
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    /// `|pi P - pi|_inf`.
    pub fn residual(&self, p: &TransitionMatrix) -> f64 {
        let row = RowDVector::from_row_slice(&self.pi);
        let next = &row * p.as_matrix();
        next.iter()
            .zip(&self.pi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Scaled copy; the result is generally not a distribution.
    pub fn scaled(&self, factor: f64) -> SteadyState {
        SteadyState {
            pi: self.pi.iter().map(|v| v * factor).collect(),
        }
    }

    /// Wraps a probability vector without checking it.
    pub fn from_vec(pi: Vec<f64>) -> Self {
        SteadyState { pi }
    }
}

/// Error rates and successor law of one configuration.
#[derive(Debug, Clone)]
pub struct Kernel<'a> {
    cfg: &'a SystemConfig,
    table: ErrorTable,
}

/// The (possibly coinciding) successor states of one transition with their
/// probabilities. Failure outcomes vary slowest, then the new channel bits.
pub type Successors = [(SystemState, f64); 16];

impl<'a> Kernel<'a> {
    pub fn new(cfg: &'a SystemConfig) -> Self {
        Kernel {
            cfg,
            table: ErrorTable::new(&cfg.profile, &cfg.link),
        }
    }

    pub fn config(&self) -> &SystemConfig {
        self.cfg
    }

    pub fn table(&self) -> &ErrorTable {
        &self.table
    }

    /// Error rates of both devices when leaving `from` with allocation `lambda`.
    #[inline]
    pub fn error_rates(&self, from: SystemState, lambda: u32) -> [f64; 2] {
        let n = self.cfg.blocklength();
        [
            self.table.get(from.good[0], lambda),
            self.table.get(from.good[1], n - lambda),
        ]
    }

    #[inline]
    pub fn successors(&self, from: SystemState, lambda: u32) -> Successors {
        successors_with(self.cfg, from, self.error_rates(from, lambda))
    }
}

fn successors_with(cfg: &SystemConfig, from: SystemState, eps: [f64; 2]) -> Successors {
    let a_max = cfg.a_max;
    let next_aoi = |m: usize, failed: bool| {
        if failed {
            (from.aoi[m] + 1).min(a_max)
        } else {
            1
        }
    };
    let mut out = [(from, 0.0); 16];
    let mut k = 0;
    for fail1 in [true, false] {
        for fail2 in [true, false] {
            let p1 = if fail1 { eps[0] } else { 1.0 - eps[0] };
            let p2 = if fail2 { eps[1] } else { 1.0 - eps[1] };
            let a = [next_aoi(0, fail1), next_aoi(1, fail2)];
            for x1 in [false, true] {
                for x2 in [false, true] {
                    let p =
                        p1 * p2 * cfg.profile.channel_prob(0, x1) * cfg.profile.channel_prob(1, x2);
                    out[k] = (
                        SystemState {
                            aoi: a,
                            good: [x1, x2],
                        },
                        p,
                    );
                    k += 1;
                }
            }
        }
    }
    out
}

fn check_lambda(cfg: &SystemConfig, lambda: u32) -> Result<()> {
    if lambda > cfg.blocklength() {
        return Err(Error::AllocationOutOfRange {
            lambda,
            total: cfg.blocklength(),
        });
    }
    Ok(())
}

fn check_state(s: SystemState, a_max: u32) -> Result<()> {
    if s.is_valid(a_max) {
        Ok(())
    } else {
        Err(Error::StateOutOfRange {
            state: s.to_string(),
            a_max,
        })
    }
}

/// `Prob(next = to | current = from)` when device 1 gets `lambda` channel uses.
///
/// Error rates use the channel bits of `from`; the bits of `to` are fresh
/// draws. A failed device's AoI saturates at `a_max`.
pub fn transition_prob(
    cfg: &SystemConfig,
    lambda: u32,
    from: SystemState,
    to: SystemState,
) -> Result<f64> {
    check_lambda(cfg, lambda)?;
    check_state(from, cfg.a_max)?;
    check_state(to, cfg.a_max)?;
    let n = cfg.blocklength();
    let d = cfg.link.payload_bits;
    let eps = [
        phy::block_error_rate(lambda, d, cfg.profile.gamma(from.good[0]))?,
        phy::block_error_rate(n - lambda, d, cfg.profile.gamma(from.good[1]))?,
    ];
    Ok(successors_with(cfg, from, eps)
        .iter()
        .filter(|(s, _)| *s == to)
        .map(|(_, p)| p)
        .sum())
}

/// Dense transition matrix of the chain under `policy`.
pub fn build_transition_matrix(cfg: &SystemConfig, policy: &Policy) -> Result<TransitionMatrix> {
    build_with(&Kernel::new(cfg), policy)
}

pub(crate) fn build_with(kernel: &Kernel<'_>, policy: &Policy) -> Result<TransitionMatrix> {
    let cfg = kernel.config();
    policy.check(cfg)?;
    let n = cfg.state_count();
    let mut p = DMatrix::<f64>::zeros(n, n);
    for (i, from) in state::enumerate_states(cfg.a_max).into_iter().enumerate() {
        for (to, prob) in kernel.successors(from, policy.at(i)) {
            p[(i, state::position(to, cfg.a_max))] += prob;
        }
    }
    TransitionMatrix::new(p)
}

/// Solves `pi P = pi`, `sum(pi) = 1` by replacing the last balance equation
/// with the normalization and factoring the dense system.
pub fn steady_state(p: &TransitionMatrix) -> Result<SteadyState> {
    let n = p.dim();
    let mut a = DMatrix::<f64>::identity(n, n) - p.as_matrix().transpose();
    a.row_mut(n - 1).fill(1.0);
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;

    let lu = a.lu();
    let diag = lu.u().diagonal();
    let max_pivot = diag.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let min_pivot = diag.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    if !(min_pivot > 1e-13 * max_pivot) {
        return Err(Error::Singular);
    }
    let x = lu.solve(&b).ok_or(Error::Singular)?;

    let mut pi: Vec<f64> = x.iter().copied().collect();
    for (index, v) in pi.iter_mut().enumerate() {
        if *v < 0.0 {
            if *v < -NEGATIVE_CLIP {
                return Err(Error::NegativeProbability { index, value: *v });
            }
            *v = 0.0;
        }
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= total);

    let ss = SteadyState { pi };
    let residual = ss.residual(p);
    if !(residual < RESIDUAL_LIMIT) {
        return Err(Error::Residual {
            residual,
            limit: RESIDUAL_LIMIT,
        });
    }
    Ok(ss)
}

/// Distribution after `k` steps from the state with 1-based index `initial_index`.
pub fn k_step_distribution(
    p: &TransitionMatrix,
    initial_index: usize,
    k: usize,
) -> Result<Vec<f64>> {
    let n = p.dim();
    if initial_index == 0 || initial_index > n {
        return Err(Error::IndexOutOfRange {
            index: initial_index,
            len: n,
        });
    }
    let mut v = RowDVector::<f64>::zeros(n);
    v[initial_index - 1] = 1.0;
    for _ in 0..k {
        v = &v * p.as_matrix();
    }
    Ok(v.iter().copied().collect())
}

/// Stationary mass of the outage set.
pub fn outage_probability(pi: &SteadyState, cfg: &SystemConfig) -> f64 {
    pi.as_slice()
        .iter()
        .zip(cfg.outage_mask())
        .filter(|(_, out)| *out)
        .map(|(p, _)| p)
        .sum()
}

/// Transition matrix and stationary distribution of a policy.
pub fn solve_policy(
    cfg: &SystemConfig,
    policy: &Policy,
) -> Result<(TransitionMatrix, SteadyState)> {
    let p = build_transition_matrix(cfg, policy)?;
    let pi = steady_state(&p)?;
    Ok((p, pi))
}

/// Total-variation distance between two distributions.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}
