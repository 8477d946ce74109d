//! The truncated state space `{1..A_max}^2 x {0,1}^2`.
//!
//! Public indices are 1-based: `i = 2 (2 ((a1 - 1) A_max + a2 - 1) + x1) + x2 + 1`.
//! Internally positions are the 0-based `i - 1`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One system state: the AoI of both devices and their channel bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[u32; 4]", into = "[u32; 4]")]
pub struct SystemState {
    pub aoi: [u32; 2],
    /// `true` for the good channel (`x_m = 1`).
    pub good: [bool; 2],
}

impl SystemState {
    pub const fn new(a1: u32, a2: u32, x1: bool, x2: bool) -> Self {
        SystemState {
            aoi: [a1, a2],
            good: [x1, x2],
        }
    }

    /// Builds a state from the `(a1, a2, x1, x2)` tuple; channel bits are 0 or 1.
    pub fn from_tuple(t: [u32; 4]) -> Result<Self> {
        if t[2] > 1 || t[3] > 1 {
            return Err(Error::invalid(
                "state",
                format!("channel bits must be 0 or 1, got {t:?}"),
            ));
        }
        Ok(SystemState::new(t[0], t[1], t[2] == 1, t[3] == 1))
    }

    pub fn to_tuple(self) -> [u32; 4] {
        [
            self.aoi[0],
            self.aoi[1],
            u32::from(self.good[0]),
            u32::from(self.good[1]),
        ]
    }

    pub fn is_valid(&self, a_max: u32) -> bool {
        self.aoi.iter().all(|&a| (1..=a_max).contains(&a))
    }

    pub fn peak_aoi(&self) -> u32 {
        self.aoi[0].max(self.aoi[1])
    }

    pub fn sum_aoi(&self) -> u32 {
        self.aoi[0] + self.aoi[1]
    }
}

impl From<[u32; 4]> for SystemState {
    fn from(t: [u32; 4]) -> Self {
        SystemState::new(t[0], t[1], t[2] != 0, t[3] != 0)
    }
}

impl From<SystemState> for [u32; 4] {
    fn from(s: SystemState) -> Self {
        s.to_tuple()
    }
}

impl fmt::Display for SystemState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a1, a2, x1, x2] = self.to_tuple();
        write!(f, "({a1},{a2},{x1},{x2})")
    }
}

/// Number of states for a given AoI cap.
pub fn state_count(a_max: u32) -> usize {
    4 * (a_max as usize) * (a_max as usize)
}

/// 1-based index of `s`.
pub fn state_to_index(s: SystemState, a_max: u32) -> Result<usize> {
    if !s.is_valid(a_max) {
        return Err(Error::StateOutOfRange {
            state: s.to_string(),
            a_max,
        });
    }
    Ok(position(s, a_max) + 1)
}

/// Inverse of [`state_to_index`].
pub fn index_to_state(i: usize, a_max: u32) -> Result<SystemState> {
    let len = state_count(a_max);
    if i == 0 || i > len {
        return Err(Error::IndexOutOfRange { index: i, len });
    }
    Ok(state_at(i - 1, a_max))
}

/// 0-based position of a state already known to be valid.
#[inline]
pub(crate) fn position(s: SystemState, a_max: u32) -> usize {
    let a_max = a_max as usize;
    let pair = (s.aoi[0] as usize - 1) * a_max + s.aoi[1] as usize - 1;
    2 * (2 * pair + usize::from(s.good[0])) + usize::from(s.good[1])
}

#[inline]
pub(crate) fn state_at(pos: usize, a_max: u32) -> SystemState {
    let a_max = a_max as usize;
    let x2 = pos % 2 == 1;
    let x1 = (pos / 2) % 2 == 1;
    let pair = pos / 4;
    SystemState::new((pair / a_max + 1) as u32, (pair % a_max + 1) as u32, x1, x2)
}

/// `true` iff at least one device's AoI strictly exceeds `a_out`.
pub fn is_outage(s: SystemState, a_out: u32) -> bool {
    s.aoi[0] > a_out || s.aoi[1] > a_out
}

/// All states in index order; entry `k` holds the state with index `k + 1`.
pub fn enumerate_states(a_max: u32) -> Vec<SystemState> {
    (0..state_count(a_max))
        .map(|p| state_at(p, a_max))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn index_examples() {
        assert_eq!(
            state_to_index(SystemState::new(1, 1, false, false), 5).unwrap(),
            1
        );
        assert_eq!(
            state_to_index(SystemState::new(5, 5, true, true), 5).unwrap(),
            100
        );
        assert_eq!(
            state_to_index(SystemState::new(1, 2, false, false), 5).unwrap(),
            5
        );
        assert_eq!(
            index_to_state(1, 5).unwrap(),
            SystemState::new(1, 1, false, false)
        );
        assert_eq!(
            index_to_state(100, 5).unwrap(),
            SystemState::new(5, 5, true, true)
        );
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(state_to_index(SystemState::new(6, 1, false, false), 5).is_err());
        assert!(state_to_index(SystemState::new(0, 1, false, false), 5).is_err());
        assert!(index_to_state(0, 5).is_err());
        assert!(index_to_state(101, 5).is_err());
        assert!(SystemState::from_tuple([1, 1, 2, 0]).is_err());
    }

    #[test]
    fn outage_predicate() {
        assert!(is_outage(SystemState::new(4, 1, false, false), 3));
        assert!(!is_outage(SystemState::new(3, 3, true, true), 3));
        assert!(!is_outage(SystemState::new(1, 1, false, false), 3));
    }

    #[test]
    fn enumeration() {
        let tiny = enumerate_states(1);
        assert_eq!(
            tiny,
            vec![
                SystemState::new(1, 1, false, false),
                SystemState::new(1, 1, false, true),
                SystemState::new(1, 1, true, false),
                SystemState::new(1, 1, true, true),
            ]
        );
        let states = enumerate_states(5);
        assert_eq!(states.len(), 100);
        let unique: std::collections::HashSet<_> = states.iter().collect();
        assert_eq!(unique.len(), 100);
    }

    #[test]
    fn bijection_for_small_caps() {
        for a_max in 1..=10 {
            for (k, s) in enumerate_states(a_max).into_iter().enumerate() {
                assert_eq!(state_to_index(s, a_max).unwrap(), k + 1);
                assert_eq!(index_to_state(k + 1, a_max).unwrap(), s);
            }
        }
    }

    #[test]
    fn outage_set_size() {
        for a_max in 1..=8u32 {
            for a_out in 1..=a_max {
                let n = enumerate_states(a_max)
                    .into_iter()
                    .filter(|&s| is_outage(s, a_out))
                    .count();
                assert_eq!(n, 4 * (a_max * a_max - a_out * a_out) as usize);
            }
        }
    }

    proptest! {
        #[test]
        fn round_trip(a_max in 1u32..40, pos in 0usize..6400) {
            let len = state_count(a_max);
            let i = pos % len + 1;
            let s = index_to_state(i, a_max).unwrap();
            prop_assert_eq!(state_to_index(s, a_max).unwrap(), i);
        }
    }
}
