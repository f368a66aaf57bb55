//! The backscatter tag.
//!
//! The tag shifts an excitation packet to a target channel by toggling its RF
//! switch with a clock of `|f_target - f_excitation|`. Square-wave mixing
//! produces both sidebands, so one clock serves the target and its mirror on
//! the other side of the excitation; 39 clock states cover all 40x40 pairs.

mod clock;
mod phase;
mod resource;
mod state;

pub use clock::{shift_for, ClockState, ClockStateTable, Shift, Sideband, REFERENCE_CLOCK_MHZ};
pub use phase::{phase_sequence, Phase, PhaseSequence};
pub use resource::{resource_estimate, ResourceEstimate, MEASURED_LUTS, WORD_BITS};
pub use state::{
    ActiveSlot, ConnectionPhase, Emission, TagConfig, TagState, TagStats, TargetPlan,
    UplinkTemplate, WRITE_HANDLE,
};

use thiserror::Error;

use crate::link::LinkError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum TagError {
    #[error("excitation and target are both channel {0}; a zero shift cannot be backscattered")]
    ZeroShift(u8),
    #[error("clocks per state must be in 1..=6, got {0}")]
    ClocksPerState(u32),
    #[error("no exact clock configuration for {0} MHz")]
    NoExactClock(u32),
    #[error("invalid uplink template: {0}")]
    Uplink(LinkError),
}
