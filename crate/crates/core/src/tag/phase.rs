//! RF switch phase control for phase-modulated single tones.
//!
//! A BLE symbol 1 advances the switch clock phase by +π on the upper
//! sideband and -π on the lower one; a 0 leaves it unchanged. Since the
//! control is the accumulated phase modulo 2π and -π ≡ π, both sidebands
//! share one control sequence.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Zero,
    Pi,
}

impl Phase {
    pub fn radians(self) -> f64 {
        match self {
            Phase::Zero => 0.0,
            Phase::Pi => PI,
        }
    }

    /// Phase of an accumulated number of half turns (multiples of π).
    pub fn from_half_turns(half_turns: i64) -> Self {
        if half_turns.rem_euclid(2) == 0 {
            Phase::Zero
        } else {
            Phase::Pi
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PhaseSequence(Vec<Phase>);

impl PhaseSequence {
    pub fn controls(&self) -> &[Phase] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Builds the control sequence from accumulated phase expressed in half
    /// turns, e.g. `0, -1, -2, ...` for the lower sideband.
    pub fn from_accumulated<I: IntoIterator<Item = i64>>(half_turns: I) -> Self {
        PhaseSequence(half_turns.into_iter().map(Phase::from_half_turns).collect())
    }
}

/// Control value for each symbol: the phase accumulated through that symbol.
pub fn phase_sequence<I: IntoIterator<Item = bool>>(bits: I) -> PhaseSequence {
    let mut odd = false;
    PhaseSequence(
        bits.into_iter()
            .map(|b| {
                odd ^= b;
                if odd {
                    Phase::Pi
                } else {
                    Phase::Zero
                }
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use Phase::{Pi, Zero};

    #[test]
    fn worked_listing() {
        let bits = [false, true, true, false, true, false, true, true];
        assert_eq!(
            phase_sequence(bits).controls(),
            &[Zero, Pi, Zero, Zero, Pi, Pi, Zero, Pi]
        );
    }

    #[test]
    fn sidebands_share_controls() {
        // Accumulated phase on the upper and lower bands for the same bits.
        let upper = [0i64, 1, 2, 2, 3, 3, 4, 5];
        let lower = upper.map(|h| -h);
        assert_eq!(
            PhaseSequence::from_accumulated(upper),
            PhaseSequence::from_accumulated(lower)
        );
    }

    #[test]
    fn small_cases() {
        assert_eq!(phase_sequence([true, true]).controls(), &[Pi, Zero]);
        assert_eq!(phase_sequence([false; 5]).controls(), &[Zero; 5]);
        assert!(phase_sequence([]).is_empty());
    }
}
