//! BLE channel selection algorithms #1 and #2.
//!
//! Both follow the Core Specification (Vol 6, Part B, 4.5.8). Remapping of
//! unused channels indexes the used channels in ascending channel order.

mod schedule;

pub use schedule::ExcitationSchedule;

use thiserror::Error;

use crate::link::{ChannelIndex, ChannelMap, DATA_CHANNEL_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum HopError {
    #[error("hop increment {0} is outside 5..=16")]
    InvalidHopIncrement(u8),
    #[error("last unmapped channel {0} is outside 0..=36")]
    InvalidUnmappedChannel(u8),
    #[error("operation needs {expected:?} but the state uses {actual:?}")]
    WrongAlgorithm {
        expected: HopAlgorithm,
        actual: HopAlgorithm,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum HopAlgorithm {
    Csa1,
    Csa2,
}

/// Per-link channel selection state.
///
/// `event_counter` is the counter of the next event to be selected; for
/// CSA#1 `last_unmapped_channel` is the unmapped channel of the event before.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HopState {
    algorithm: HopAlgorithm,
    last_unmapped_channel: u8,
    hop_increment: u8,
    event_counter: u16,
    access_address: u32,
    channel_map: ChannelMap,
}

impl HopState {
    /// CSA#1 state for a fresh connection (last unmapped channel 0).
    pub fn csa1(hop_increment: u8, channel_map: ChannelMap) -> Result<Self, HopError> {
        Self::csa1_from(0, hop_increment, 0, channel_map)
    }

    pub fn csa1_from(
        last_unmapped_channel: u8,
        hop_increment: u8,
        event_counter: u16,
        channel_map: ChannelMap,
    ) -> Result<Self, HopError> {
        if !(5..=16).contains(&hop_increment) {
            return Err(HopError::InvalidHopIncrement(hop_increment));
        }
        if last_unmapped_channel >= DATA_CHANNEL_COUNT {
            return Err(HopError::InvalidUnmappedChannel(last_unmapped_channel));
        }
        Ok(HopState {
            algorithm: HopAlgorithm::Csa1,
            last_unmapped_channel,
            hop_increment,
            event_counter,
            access_address: 0,
            channel_map,
        })
    }

    pub fn csa2(access_address: u32, event_counter: u16, channel_map: ChannelMap) -> Self {
        HopState {
            algorithm: HopAlgorithm::Csa2,
            last_unmapped_channel: 0,
            hop_increment: 5,
            event_counter,
            access_address,
            channel_map,
        }
    }

    pub fn algorithm(&self) -> HopAlgorithm {
        self.algorithm
    }

    pub fn last_unmapped_channel(&self) -> u8 {
        self.last_unmapped_channel
    }

    pub fn hop_increment(&self) -> u8 {
        self.hop_increment
    }

    pub fn event_counter(&self) -> u16 {
        self.event_counter
    }

    pub fn access_address(&self) -> u32 {
        self.access_address
    }

    pub fn channel_map(&self) -> ChannelMap {
        self.channel_map
    }

    pub fn set_channel_map(&mut self, map: ChannelMap) {
        self.channel_map = map;
    }

    /// Selects the channel for the current event and advances to the next.
    pub fn next_channel(&mut self) -> ChannelIndex {
        let channel = match self.algorithm {
            HopAlgorithm::Csa1 => {
                let unmapped = csa1_unmapped(self.last_unmapped_channel, self.hop_increment, 1);
                self.last_unmapped_channel = unmapped;
                remap_csa1(unmapped, self.channel_map)
            }
            HopAlgorithm::Csa2 => {
                csa2_channel(self.event_counter, self.access_address, self.channel_map)
            }
        };
        self.event_counter = self.event_counter.wrapping_add(1);
        channel
    }

    /// Channel of event `counter` without advancing the state.
    ///
    /// Counters behind `event_counter` wrap around the 16-bit space. For
    /// CSA#1 this equals calling [`next_channel`](Self::next_channel) until
    /// `counter` is reached.
    pub fn channel_at(&self, counter: u16) -> ChannelIndex {
        match self.algorithm {
            HopAlgorithm::Csa1 => {
                let ahead = u32::from(counter.wrapping_sub(self.event_counter)) + 1;
                let unmapped = csa1_unmapped(self.last_unmapped_channel, self.hop_increment, ahead);
                remap_csa1(unmapped, self.channel_map)
            }
            HopAlgorithm::Csa2 => csa2_channel(counter, self.access_address, self.channel_map),
        }
    }
}

fn csa1_unmapped(last: u8, hop: u8, steps: u32) -> u8 {
    let step = (u32::from(hop) * steps) % u32::from(DATA_CHANNEL_COUNT);
    ((u32::from(last) + step) % u32::from(DATA_CHANNEL_COUNT)) as u8
}

fn remap_csa1(unmapped: u8, map: ChannelMap) -> ChannelIndex {
    let ch = ChannelIndex::new(unmapped).expect("unmapped channel below 37");
    if map.contains(ch) {
        ch
    } else {
        map.nth_used(u32::from(unmapped) % map.len())
    }
}

/// One CSA#1 step: returns the selected channel and the advanced state.
pub fn csa1_next(state: &HopState) -> Result<(ChannelIndex, HopState), HopError> {
    if state.algorithm != HopAlgorithm::Csa1 {
        return Err(HopError::WrongAlgorithm {
            expected: HopAlgorithm::Csa1,
            actual: state.algorithm,
        });
    }
    let mut next = *state;
    let ch = next.next_channel();
    Ok((ch, next))
}

fn permute(v: u16) -> u16 {
    let [hi, lo] = v.to_be_bytes();
    u16::from_be_bytes([hi.reverse_bits(), lo.reverse_bits()])
}

fn mam(a: u16, b: u16) -> u16 {
    a.wrapping_mul(17).wrapping_add(b)
}

/// Pseudo-random number `prn_e` of CSA#2.
fn csa2_prn_e(counter: u16, channel_identifier: u16) -> u16 {
    let mut prn = counter ^ channel_identifier;
    for _ in 0..3 {
        prn = mam(permute(prn), channel_identifier);
    }
    prn ^ channel_identifier
}

/// CSA#2 channel for an event. Stateless and deterministic.
pub fn csa2_channel(event_counter: u16, access_address: u32, map: ChannelMap) -> ChannelIndex {
    let channel_identifier = ((access_address >> 16) as u16) ^ (access_address as u16);
    let prn_e = csa2_prn_e(event_counter, channel_identifier);
    let unmapped = (prn_e % u16::from(DATA_CHANNEL_COUNT)) as u8;
    let ch = ChannelIndex::new(unmapped).expect("unmapped channel below 37");
    if map.contains(ch) {
        ch
    } else {
        let index = (map.len() * u32::from(prn_e)) >> 16;
        map.nth_used(index)
    }
}

/// Per-channel selection counts, indexed by channel index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelCounts([u32; 40]);

impl ChannelCounts {
    pub const fn new() -> Self {
        ChannelCounts([0; 40])
    }

    pub fn record(&mut self, ch: ChannelIndex) {
        self.0[usize::from(ch.index())] += 1;
    }

    pub fn get(&self, ch: ChannelIndex) -> u32 {
        self.0[usize::from(ch.index())]
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Channels with a nonzero count, ascending.
    pub fn nonzero(&self) -> impl Iterator<Item = (ChannelIndex, u32)> + '_ {
        ChannelIndex::all()
            .map(|c| (c, self.get(c)))
            .filter(|&(_, n)| n > 0)
    }
}

impl Default for ChannelCounts {
    fn default() -> Self {
        Self::new()
    }
}

/// Counts the channels selected over the next `n_events` events.
pub fn hop_histogram(state: &HopState, n_events: u32) -> ChannelCounts {
    let mut state = *state;
    let mut counts = ChannelCounts::new();
    for _ in 0..n_events {
        counts.record(state.next_channel());
    }
    counts
}
