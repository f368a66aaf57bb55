use alloc::vec::Vec;

use super::HopState;
use crate::link::ChannelIndex;

/// How the excitor picks the channel of excitation packet `k`.
///
/// The edge announces its schedule to the tag so the tag can predict the
/// excitation channel from a packet counter alone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExcitationSchedule {
    /// Every excitation on one channel.
    Fixed(ChannelIndex),
    /// Excitation `k` uses the channel of event `k` of a hop sequence.
    Hopping(HopState),
    /// Round robin over a channel list, e.g. the advertising channels.
    Cycle(Vec<ChannelIndex>),
    /// Free-running excitor the tag cannot predict.
    Unknown,
}

impl ExcitationSchedule {
    pub fn channel_at(&self, counter: u16) -> Option<ChannelIndex> {
        match self {
            ExcitationSchedule::Fixed(ch) => Some(*ch),
            ExcitationSchedule::Hopping(state) => Some(state.channel_at(counter)),
            ExcitationSchedule::Cycle(list) if !list.is_empty() => {
                Some(list[usize::from(counter) % list.len()])
            }
            ExcitationSchedule::Cycle(_) | ExcitationSchedule::Unknown => None,
        }
    }

    pub fn is_predictable(&self) -> bool {
        match self {
            ExcitationSchedule::Cycle(list) => !list.is_empty(),
            ExcitationSchedule::Unknown => false,
            _ => true,
        }
    }
}
