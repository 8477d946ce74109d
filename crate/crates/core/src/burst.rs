//! Analytic burstiness of AoI outages.
//!
//! `xi_ij(k)` is the probability of moving from `s_i` to `s_j` in `k` steps
//! while every intermediate state lies in the outage set. Weighted by the
//! stationary distribution and summed over the outage set `O` and its
//! complement `R`, it yields the outage-duration law, the mean outage
//! duration and the mean inter-outage interval.

use nalgebra::{DMatrix, RowDVector};
use serde::{Deserialize, Serialize};

use crate::chain::{self, Policy, SteadyState, TransitionMatrix};
use crate::config::SystemConfig;
use crate::error::{Error, Result};

/// Relative term size at which the mean-duration series is truncated.
pub const SERIES_TOL: f64 = 1e-12;
/// Hard cap on the number of series terms.
pub const SERIES_CAP: usize = 10_000;
/// Target tail mass of the reported duration PMF.
pub const PMF_RESIDUAL: f64 = 1e-10;

/// How an outage burst's duration is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DurationConvention {
    /// Number of consecutive outage periods; matches a measured run length.
    #[default]
    RunLength,
    /// Outage periods plus the non-outage period that opens the burst.
    Bracketed,
}

impl DurationConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            DurationConvention::RunLength => "run-length",
            DurationConvention::Bracketed => "bracketed",
        }
    }

    fn offset(self) -> u32 {
        match self {
            DurationConvention::RunLength => 0,
            DurationConvention::Bracketed => 1,
        }
    }
}

/// `xi(k)`: `xi(1) = P`, `xi(k) = P M xi(k-1)` with `M` the diagonal outage mask.
pub fn xi_matrix(p: &TransitionMatrix, outage_mask: &[bool], k: usize) -> Result<DMatrix<f64>> {
    if k == 0 {
        return Err(Error::invalid("k", "must be at least 1"));
    }
    check_mask(p, outage_mask)?;
    let pm = masked_columns(p.as_matrix(), outage_mask);
    let mut xi = p.as_matrix().clone();
    for _ in 1..k {
        xi = &pm * &xi;
    }
    Ok(xi)
}

fn check_mask(p: &TransitionMatrix, mask: &[bool]) -> Result<()> {
    if mask.len() != p.dim() {
        return Err(Error::invalid(
            "outage_mask",
            format!("length {} does not match {} states", mask.len(), p.dim()),
        ));
    }
    Ok(())
}

/// `P M`: columns of non-outage states zeroed.
fn masked_columns(p: &DMatrix<f64>, mask: &[bool]) -> DMatrix<f64> {
    let mut pm = p.clone();
    for (j, &out) in mask.iter().enumerate() {
        if !out {
            pm.column_mut(j).fill(0.0);
        }
    }
    pm
}

/// Row-vector propagation of `pi_A xi(k)` for increasing `k`.
///
/// Yields, per step, the probability mass arriving in the outage set and in
/// its complement.
struct SetWalk<'a> {
    p: &'a DMatrix<f64>,
    mask: &'a [bool],
    v: RowDVector<f64>,
}

impl<'a> SetWalk<'a> {
    fn new(pi: &SteadyState, p: &'a TransitionMatrix, mask: &'a [bool], from_outage: bool) -> Self {
        let start = RowDVector::from_iterator(
            mask.len(),
            pi.as_slice()
                .iter()
                .zip(mask)
                .map(|(&w, &o)| if o == from_outage { w } else { 0.0 }),
        );
        SetWalk {
            p: p.as_matrix(),
            mask,
            v: start * p.as_matrix(),
        }
    }

    /// `(xi_{A,O}(k), xi_{A,R}(k))` for the current `k`.
    fn split(&self) -> (f64, f64) {
        let mut out = 0.0;
        let mut res = 0.0;
        for (x, &o) in self.v.iter().zip(self.mask) {
            if o {
                out += x;
            } else {
                res += x;
            }
        }
        (out, res)
    }

    fn advance(&mut self) {
        let masked = RowDVector::from_iterator(
            self.v.len(),
            self.v
                .iter()
                .zip(self.mask)
                .map(|(&x, &o)| if o { x } else { 0.0 }),
        );
        self.v = masked * self.p;
    }
}

/// `xi_AB(k) = sum_{i in A} sum_{j in B} pi_i xi_ij(k)`, with `A`/`B` the
/// outage set when the flag is set and its complement otherwise.
pub fn xi_set_to_set(
    pi: &SteadyState,
    p: &TransitionMatrix,
    from_outage: bool,
    to_outage: bool,
    k: usize,
    cfg: &SystemConfig,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("k", "must be at least 1"));
    }
    let mask = cfg.outage_mask();
    check_mask(p, &mask)?;
    let mut walk = SetWalk::new(pi, p, &mask, from_outage);
    for _ in 1..k {
        walk.advance();
    }
    let (out, res) = walk.split();
    Ok(if to_outage { out } else { res })
}

fn entry_rate(pi: &SteadyState, p: &TransitionMatrix, mask: &[bool]) -> Result<f64> {
    let (x1, _) = SetWalk::new(pi, p, mask, false).split();
    if x1 > 0.0 {
        Ok(x1)
    } else {
        Err(Error::OutageUnreachable)
    }
}

/// `P(T = t) = xi_RR(t + 1) / xi_RO(1)` for `t = 1..=t_max`, with `T` the
/// number of consecutive outage periods.
pub fn outage_duration_pmf(
    pi: &SteadyState,
    p: &TransitionMatrix,
    cfg: &SystemConfig,
    t_max: usize,
) -> Result<Vec<f64>> {
    let mask = cfg.outage_mask();
    check_mask(p, &mask)?;
    let x1 = entry_rate(pi, p, &mask)?;
    let mut walk = SetWalk::new(pi, p, &mask, false);
    let mut pmf = Vec::with_capacity(t_max);
    for _ in 0..t_max {
        walk.advance();
        pmf.push(walk.split().1 / x1);
    }
    Ok(pmf)
}

/// `E[T] = 1 + sum_{t >= 2} xi_RO(t) / xi_RO(1)`.
///
/// The series stops once a term drops below `tolerance`; the remaining tail
/// is estimated as geometric with the ratio of the last two terms.
pub fn mean_outage_duration(
    pi: &SteadyState,
    p: &TransitionMatrix,
    cfg: &SystemConfig,
    tolerance: f64,
) -> Result<f64> {
    let mask = cfg.outage_mask();
    check_mask(p, &mask)?;
    mean_duration_with(pi, p, &mask, tolerance).map(|(mean, _)| mean)
}

/// Mean duration and the number of terms summed.
fn mean_duration_with(
    pi: &SteadyState,
    p: &TransitionMatrix,
    mask: &[bool],
    tolerance: f64,
) -> Result<(f64, usize)> {
    let x1 = entry_rate(pi, p, mask)?;
    let mut walk = SetWalk::new(pi, p, mask, false);
    let mut total = 1.0;
    let mut prev = 1.0;
    for t in 2..=SERIES_CAP {
        walk.advance();
        let term = walk.split().0 / x1;
        total += term;
        if term < tolerance {
            let ratio = if prev > 0.0 { term / prev } else { 0.0 };
            if ratio < 1.0 && ratio > 0.0 {
                total += term * ratio / (1.0 - ratio);
            }
            return Ok((total, t));
        }
        prev = term;
    }
    Err(Error::NonDecayingSeries {
        ratio: prev,
        terms: SERIES_CAP,
    })
}

/// `E[T_res] = (1 - P_out) / xi_RO(1)`.
pub fn mean_ioi(pi: &SteadyState, p: &TransitionMatrix, cfg: &SystemConfig) -> Result<f64> {
    let mask = cfg.outage_mask();
    check_mask(p, &mask)?;
    let x1 = entry_rate(pi, p, &mask)?;
    Ok((1.0 - chain::outage_probability(pi, cfg)) / x1)
}

/// Burst statistics of one policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurstStats {
    /// Stationary outage mass.
    pub p_out: f64,
    /// `xi_RO(1) * E[T_out]`, which must reproduce `p_out`.
    pub p_out_from_bursts: f64,
    /// Rate at which outage bursts begin, `xi_RO(1)`.
    pub xi_res_out_1: f64,
    pub mean_outage_duration: f64,
    pub mean_ioi: f64,
    /// `(t, P(T = t))` under the selected convention.
    pub duration_pmf: Vec<(u32, f64)>,
    pub truncation_t: u32,
    /// Probability mass of durations beyond `truncation_t`.
    pub truncation_residual: f64,
    pub convention: DurationConvention,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum BurstReport {
    Defined(BurstStats),
    /// The outage set is never entered from the non-outage set.
    Undefined {
        p_out: f64,
    },
}

impl BurstReport {
    pub fn stats(&self) -> Option<&BurstStats> {
        match self {
            BurstReport::Defined(s) => Some(s),
            BurstReport::Undefined { .. } => None,
        }
    }

    pub fn p_out(&self) -> f64 {
        match self {
            BurstReport::Defined(s) => s.p_out,
            BurstReport::Undefined { p_out } => *p_out,
        }
    }
}

/// Maximum tolerated gap between `p_out` and `xi_RO(1) E[T_out]`.
pub const IDENTITY_TOL: f64 = 1e-9;

/// All burst quantities for an already solved chain.
pub fn analyze(
    cfg: &SystemConfig,
    p: &TransitionMatrix,
    pi: &SteadyState,
    convention: DurationConvention,
) -> Result<BurstReport> {
    let mask = cfg.outage_mask();
    check_mask(p, &mask)?;
    let p_out = chain::outage_probability(pi, cfg);
    let x1 = match entry_rate(pi, p, &mask) {
        Ok(x) => x,
        Err(Error::OutageUnreachable) => return Ok(BurstReport::Undefined { p_out }),
        Err(e) => return Err(e),
    };
    let (mean_run, _) = mean_duration_with(pi, p, &mask, SERIES_TOL)?;
    let p_out_from_bursts = x1 * mean_run;
    if (p_out_from_bursts - p_out).abs() > IDENTITY_TOL {
        return Err(Error::Residual {
            residual: (p_out_from_bursts - p_out).abs(),
            limit: IDENTITY_TOL,
        });
    }

    // PMF until the tail mass xi_RO(t + 1) / xi_RO(1) is negligible
    let mut walk = SetWalk::new(pi, p, &mask, false);
    let mut pmf = Vec::new();
    let mut residual = 1.0;
    while residual > PMF_RESIDUAL && pmf.len() < SERIES_CAP {
        walk.advance();
        let (out, res) = walk.split();
        pmf.push(res / x1);
        residual = out / x1;
    }
    let offset = convention.offset();
    let duration_pmf: Vec<(u32, f64)> = pmf
        .iter()
        .enumerate()
        .map(|(k, &v)| (k as u32 + 1 + offset, v))
        .collect();

    Ok(BurstReport::Defined(BurstStats {
        p_out,
        p_out_from_bursts,
        xi_res_out_1: x1,
        mean_outage_duration: mean_run + f64::from(offset),
        mean_ioi: (1.0 - p_out) / x1,
        truncation_t: duration_pmf.last().map_or(offset, |e| e.0),
        duration_pmf,
        truncation_residual: residual,
        convention,
    }))
}

/// Solves the chain of `policy` and computes its burst statistics.
pub fn burst_stats(
    cfg: &SystemConfig,
    policy: &Policy,
    convention: DurationConvention,
) -> Result<BurstReport> {
    let (p, pi) = chain::solve_policy(cfg, policy)?;
    analyze(cfg, &p, &pi, convention)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::{ChannelProfile, LinkParams};
    use crate::state::SystemState;

    fn cfg(a_max: u32, a_out: u32) -> SystemConfig {
        SystemConfig::new(
            ChannelProfile::new([0.6, 0.4], -12.2, -15.2).unwrap(),
            LinkParams::new(1000, 16).unwrap(),
            a_max,
            a_out,
            1e-5,
            SystemState::new(1, 1, false, false),
        )
        .unwrap()
    }

    #[test]
    fn xi_one_is_p() {
        let c = cfg(3, 2);
        let (p, _) = chain::solve_policy(&c, &Policy::constant(500, &c)).unwrap();
        assert_eq!(&xi_matrix(&p, &c.outage_mask(), 1).unwrap(), p.as_matrix());
        assert!(xi_matrix(&p, &c.outage_mask(), 0).is_err());
    }

    #[test]
    fn xi_two_without_outage_set_is_zero() {
        let c = cfg(3, 3);
        let (p, _) = chain::solve_policy(&c, &Policy::constant(500, &c)).unwrap();
        let xi = xi_matrix(&p, &c.outage_mask(), 2).unwrap();
        assert!(xi.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn set_pairs_sum_to_one() {
        let c = cfg(5, 3);
        let (p, pi) = chain::solve_policy(&c, &Policy::constant(430, &c)).unwrap();
        let mut total = 0.0;
        for a in [false, true] {
            for b in [false, true] {
                let v = xi_set_to_set(&pi, &p, a, b, 1, &c).unwrap();
                assert!(v >= 0.0);
                total += v;
            }
        }
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn set_route_matches_matrix_route() {
        let c = cfg(4, 2);
        let lambda: Vec<u32> = (0..64).map(|i| (i * 97 + 11) % 1001).collect();
        let (p, pi) = chain::solve_policy(&c, &Policy::from_vec(lambda)).unwrap();
        let mask = c.outage_mask();
        for k in 1..6 {
            let xi = xi_matrix(&p, &mask, k).unwrap();
            for (a, b) in [(false, true), (false, false), (true, true), (true, false)] {
                let mut direct = 0.0;
                for i in 0..64 {
                    for j in 0..64 {
                        if mask[i] == a && mask[j] == b {
                            direct += pi.as_slice()[i] * xi[(i, j)];
                        }
                    }
                }
                let walked = xi_set_to_set(&pi, &p, a, b, k, &c).unwrap();
                assert!(
                    (walked - direct).abs() < 1e-15,
                    "k={k} {a} {b}: {walked} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn empty_outage_set_is_undefined() {
        let c = cfg(5, 5);
        let report = burst_stats(
            &c,
            &Policy::constant(500, &c),
            DurationConvention::RunLength,
        )
        .unwrap();
        assert_eq!(report, BurstReport::Undefined { p_out: 0.0 });
        let (p, pi) = chain::solve_policy(&c, &Policy::constant(500, &c)).unwrap();
        assert_eq!(mean_ioi(&pi, &p, &c), Err(Error::OutageUnreachable));
        assert_eq!(
            outage_duration_pmf(&pi, &p, &c, 5),
            Err(Error::OutageUnreachable)
        );
    }

    #[test]
    fn identity_and_pmf_on_table_instance() {
        let c = cfg(5, 3);
        let report = burst_stats(
            &c,
            &Policy::constant(500, &c),
            DurationConvention::RunLength,
        )
        .unwrap();
        let s = report.stats().unwrap();
        assert!((s.p_out - s.p_out_from_bursts).abs() < 1e-9);
        assert!(s.mean_outage_duration >= 1.0 && s.mean_ioi >= 1.0);
        let mass: f64 = s.duration_pmf.iter().map(|e| e.1).sum();
        assert!(s.truncation_residual < 1e-9);
        assert!(mass <= 1.0 + 1e-12 && mass >= 1.0 - s.truncation_residual - 1e-12);
        let mean: f64 = s.duration_pmf.iter().map(|&(t, v)| f64::from(t) * v).sum();
        assert!((mean - s.mean_outage_duration).abs() < 1e-8);
    }

    #[test]
    fn bracketed_convention_shifts_by_one() {
        let c = cfg(5, 3);
        let policy = Policy::constant(450, &c);
        let run = burst_stats(&c, &policy, DurationConvention::RunLength).unwrap();
        let br = burst_stats(&c, &policy, DurationConvention::Bracketed).unwrap();
        let (run, br) = (run.stats().unwrap(), br.stats().unwrap());
        assert!((br.mean_outage_duration - run.mean_outage_duration - 1.0).abs() < 1e-12);
        assert_eq!(br.duration_pmf[0].0, 2);
        assert_eq!(br.duration_pmf[0].1, run.duration_pmf[0].1);
        assert_eq!(br.p_out, run.p_out);
    }
}
