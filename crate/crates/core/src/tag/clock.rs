use alloc::vec::Vec;

use super::TagError;
use crate::link::{frequency_to_channel, ChannelIndex};

pub const REFERENCE_CLOCK_MHZ: u32 = 100;

const MUL_RANGE: core::ops::RangeInclusive<u32> = 1..=64;
const DIV_RANGE: core::ops::RangeInclusive<u32> = 1..=106;
const CLK0_DIVIDE_RANGE: core::ops::RangeInclusive<u32> = 1..=128;

/// Register factors of one modulation clock:
/// `output = ref_clock * mul / div / clk0_divide`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ClockState {
    pub mul: u32,
    pub div: u32,
    pub clk0_divide: u32,
    pub ref_clock_mhz: u32,
    pub output_mhz: u32,
}

impl ClockState {
    /// Smallest `mul` (then smallest `div`) giving exactly `output_mhz`.
    pub fn search(ref_clock_mhz: u32, output_mhz: u32) -> Result<Self, TagError> {
        for mul in MUL_RANGE {
            for div in DIV_RANGE {
                let numerator = u64::from(ref_clock_mhz) * u64::from(mul);
                let denominator = u64::from(output_mhz) * u64::from(div);
                if denominator == 0 || numerator % denominator != 0 {
                    continue;
                }
                let clk0_divide = numerator / denominator;
                if CLK0_DIVIDE_RANGE.contains(&(clk0_divide as u32)) {
                    return Ok(ClockState {
                        mul,
                        div,
                        clk0_divide: clk0_divide as u32,
                        ref_clock_mhz,
                        output_mhz,
                    });
                }
            }
        }
        Err(TagError::NoExactClock(output_mhz))
    }

    /// Checks the clock equation in exact integer arithmetic.
    pub fn is_exact(&self) -> bool {
        u64::from(self.ref_clock_mhz) * u64::from(self.mul)
            == u64::from(self.output_mhz) * u64::from(self.div) * u64::from(self.clk0_divide)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Sideband {
    Upper,
    Lower,
}

/// The shift needed to move an excitation onto a target channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shift {
    pub shift_mhz: u16,
    pub sideband: Sideband,
    /// Channel hit by the opposite sideband, if it is inside the band.
    pub mirror: Option<ChannelIndex>,
}

pub fn shift_for(excitation: ChannelIndex, target: ChannelIndex) -> Result<Shift, TagError> {
    let fe = i32::from(excitation.frequency_mhz());
    let ft = i32::from(target.frequency_mhz());
    if fe == ft {
        return Err(TagError::ZeroShift(excitation.index()));
    }
    let shift = (ft - fe).abs();
    let sideband = if ft > fe {
        Sideband::Upper
    } else {
        Sideband::Lower
    };
    let mirror_f = 2 * fe - ft;
    let mirror = u16::try_from(mirror_f)
        .ok()
        .and_then(|f| frequency_to_channel(f).ok());
    Ok(Shift {
        shift_mhz: shift as u16,
        sideband,
        mirror,
    })
}

/// The 39 precomputed clock states (2, 4, ..., 78 MHz) and the
/// `state[excitation][target]` lookup into them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClockStateTable {
    states: Vec<ClockState>,
    lookup: [[u8; 40]; 40],
}

const NO_STATE: u8 = u8::MAX;

impl ClockStateTable {
    pub fn new(ref_clock_mhz: u32) -> Result<Self, TagError> {
        let states = (1..=39)
            .map(|k| ClockState::search(ref_clock_mhz, 2 * k))
            .collect::<Result<Vec<_>, _>>()?;
        let mut lookup = [[NO_STATE; 40]; 40];
        for e in ChannelIndex::all() {
            for t in ChannelIndex::all() {
                if let Ok(shift) = shift_for(e, t) {
                    lookup[usize::from(e.index())][usize::from(t.index())] =
                        (shift.shift_mhz / 2 - 1) as u8;
                }
            }
        }
        Ok(ClockStateTable { states, lookup })
    }

    pub fn states(&self) -> &[ClockState] {
        &self.states
    }

    /// State producing a shift of `shift_mhz`.
    pub fn for_shift(&self, shift_mhz: u16) -> Option<&ClockState> {
        if shift_mhz == 0 || !shift_mhz.is_multiple_of(2) {
            return None;
        }
        self.states.get(usize::from(shift_mhz / 2 - 1))
    }

    pub fn state_index(&self, excitation: ChannelIndex, target: ChannelIndex) -> Option<usize> {
        match self.lookup[usize::from(excitation.index())][usize::from(target.index())] {
            NO_STATE => None,
            i => Some(usize::from(i)),
        }
    }

    pub fn lookup(
        &self,
        excitation: ChannelIndex,
        target: ChannelIndex,
    ) -> Result<&ClockState, TagError> {
        self.state_index(excitation, target)
            .map(|i| &self.states[i])
            .ok_or(TagError::ZeroShift(excitation.index()))
    }
}

impl Default for ClockStateTable {
    fn default() -> Self {
        Self::new(REFERENCE_CLOCK_MHZ).expect("100 MHz reference has exact factors for every shift")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ch(i: u8) -> ChannelIndex {
        ChannelIndex::new(i).unwrap()
    }

    #[test]
    fn four_to_six_uses_4mhz_with_mirror_2() {
        let s = shift_for(ch(4), ch(6)).unwrap();
        assert_eq!(
            s,
            Shift {
                shift_mhz: 4,
                sideband: Sideband::Upper,
                mirror: Some(ch(2))
            }
        );
        let table = ClockStateTable::default();
        assert_eq!(table.lookup(ch(4), ch(6)).unwrap().output_mhz, 4);
        assert_eq!(table.lookup(ch(4), ch(2)).unwrap().output_mhz, 4);
    }

    #[test]
    fn widest_span_has_no_mirror() {
        let s = shift_for(ch(37), ch(39)).unwrap();
        assert_eq!(
            s,
            Shift {
                shift_mhz: 78,
                sideband: Sideband::Upper,
                mirror: None
            }
        );
        let s = shift_for(ch(39), ch(37)).unwrap();
        assert_eq!(s.sideband, Sideband::Lower);
        assert_eq!(s.mirror, None);
    }

    #[test]
    fn zero_shift_rejected() {
        assert_eq!(shift_for(ch(12), ch(12)), Err(TagError::ZeroShift(12)));
        assert!(ClockStateTable::default().lookup(ch(12), ch(12)).is_err());
    }

    #[test]
    fn smallest_multiplier_factors() {
        let s = ClockState::search(100, 78).unwrap();
        assert_eq!((s.mul, s.div, s.clk0_divide), (39, 1, 50));
        let s = ClockState::search(100, 2).unwrap();
        assert_eq!((s.mul, s.div, s.clk0_divide), (1, 1, 50));
        let s = ClockState::search(100, 20).unwrap();
        assert_eq!((s.mul, s.div, s.clk0_divide), (1, 1, 5));
    }
}
