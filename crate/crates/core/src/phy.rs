//! Physical-layer mathematics for the finite-blocklength uplink.
//!
//! Every device sees a Gaussian channel whose SNR is drawn each period from a
//! two-level Bernoulli law. The block error rate follows the normal
//! approximation `Q(sqrt(n / V) * (C - d / n) * ln 2)`.

use std::f64::consts::{LN_2, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Converts an SNR given in decibels to a linear power ratio.
pub fn db_to_linear(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0)
}

/// Gaussian tail probability `Q(x) = P(Z > x)` for a standard normal `Z`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Channel dispersion `V = 1 - (1 + gamma)^-2` of a Gaussian channel.
pub fn channel_dispersion(gamma: f64) -> f64 {
    // gamma (2 + gamma) / (1 + gamma)^2, without the cancellation at small gamma
    let s = 1.0 + gamma;
    gamma * (2.0 + gamma) / (s * s)
}

/// Shannon capacity `B log2(1 + gamma)` in bits per channel use.
pub fn shannon_capacity(gamma: f64, bandwidth: f64) -> f64 {
    bandwidth * gamma.ln_1p() / LN_2
}

/// Normal-approximation block error rate for `d` bits over `n` channel uses.
///
/// `n = 0` means the device got no channel uses and fails with certainty.
pub fn block_error_rate(n: u32, d: u32, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::invalid(
            "gamma",
            format!("must be positive, got {gamma}"),
        ));
    }
    if d == 0 {
        return Err(Error::invalid("d", "payload must be at least one bit"));
    }
    Ok(block_error_rate_unchecked(n, d, gamma, 1.0))
}

fn block_error_rate_unchecked(n: u32, d: u32, gamma: f64, bandwidth: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let n = f64::from(n);
    let v = channel_dispersion(gamma);
    let c = shannon_capacity(gamma, bandwidth);
    q_function((n / v).sqrt() * (c - f64::from(d) / n) * LN_2)
}

/// Two-level Bernoulli block-fading profile of both devices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelProfileSpec", into = "ChannelProfileSpec")]
pub struct ChannelProfile {
    alpha: [f64; 2],
    gamma_good_db: f64,
    gamma_bad_db: f64,
    gamma_good: f64,
    gamma_bad: f64,
}

#[derive(Serialize, Deserialize)]
struct ChannelProfileSpec {
    alpha: [f64; 2],
    gamma_good_db: f64,
    gamma_bad_db: f64,
}

impl TryFrom<ChannelProfileSpec> for ChannelProfile {
    type Error = Error;
    fn try_from(s: ChannelProfileSpec) -> Result<Self> {
        ChannelProfile::new(s.alpha, s.gamma_good_db, s.gamma_bad_db)
    }
}

impl From<ChannelProfile> for ChannelProfileSpec {
    fn from(p: ChannelProfile) -> Self {
        ChannelProfileSpec {
            alpha: p.alpha,
            gamma_good_db: p.gamma_good_db,
            gamma_bad_db: p.gamma_bad_db,
        }
    }
}

impl ChannelProfile {
    /// `alpha[m]` is the chance that device `m` sees the good channel.
    pub fn new(alpha: [f64; 2], gamma_good_db: f64, gamma_bad_db: f64) -> Result<Self> {
        for a in alpha {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::invalid("alpha", format!("{a} is not in (0, 1)")));
            }
        }
        if !gamma_good_db.is_finite() || !gamma_bad_db.is_finite() {
            return Err(Error::invalid("snr_db", "SNR values must be finite"));
        }
        if gamma_good_db <= gamma_bad_db {
            return Err(Error::invalid(
                "snr_db",
                format!("good SNR {gamma_good_db} dB must exceed bad SNR {gamma_bad_db} dB"),
            ));
        }
        Ok(ChannelProfile {
            alpha,
            gamma_good_db,
            gamma_bad_db,
            gamma_good: db_to_linear(gamma_good_db),
            gamma_bad: db_to_linear(gamma_bad_db),
        })
    }

    pub fn alpha(&self) -> [f64; 2] {
        self.alpha
    }

    pub fn gamma_good_db(&self) -> f64 {
        self.gamma_good_db
    }

    pub fn gamma_bad_db(&self) -> f64 {
        self.gamma_bad_db
    }

    /// Linear SNR for a channel bit (`true` = good channel).
    pub fn gamma(&self, good: bool) -> f64 {
        if good {
            self.gamma_good
        } else {
            self.gamma_bad
        }
    }

    /// Probability that device `m` (0 or 1) draws channel bit `good`.
    pub fn channel_prob(&self, m: usize, good: bool) -> f64 {
        if good {
            self.alpha[m]
        } else {
            1.0 - self.alpha[m]
        }
    }
}

/// Shared blocklength and payload of one transmission period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub blocklength_total: u32,
    pub payload_bits: u32,
    pub bandwidth: f64,
}

impl LinkParams {
    pub fn new(blocklength_total: u32, payload_bits: u32) -> Result<Self> {
        if blocklength_total == 0 {
            return Err(Error::invalid("N", "total blocklength must be at least 1"));
        }
        if payload_bits == 0 {
            return Err(Error::invalid("d", "payload must be at least one bit"));
        }
        Ok(LinkParams {
            blocklength_total,
            payload_bits,
            bandwidth: 1.0,
        })
    }
}

/// Block error rates for every allocation `n = 0..=N` under both channel states.
///
/// The chain builder, the optimizer and the simulator all read error rates
/// from this table so the three agree to the last bit.
#[derive(Debug, Clone)]
pub struct ErrorTable {
    good: Vec<f64>,
    bad: Vec<f64>,
}

impl ErrorTable {
    pub fn new(profile: &ChannelProfile, link: &LinkParams) -> Self {
        let row = |gamma: f64| {
            (0..=link.blocklength_total)
                .map(|n| block_error_rate_unchecked(n, link.payload_bits, gamma, link.bandwidth))
                .collect()
        };
        ErrorTable {
            good: row(profile.gamma(true)),
            bad: row(profile.gamma(false)),
        }
    }

    /// Error rate with `n` channel uses on a good (`true`) or bad channel.
    #[inline]
    pub fn get(&self, good: bool, n: u32) -> f64 {
        if good {
            self.good[n as usize]
        } else {
            self.bad[n as usize]
        }
    }
}
