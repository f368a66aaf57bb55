//! Tag-side downlink handling and per-excitation emission.
//!
//! The sequence for one excitation is: frames that arrive before it are fed
//! to [`TagState::deliver`], then [`TagState::tick`] commits the counter for
//! the excitation and picks the clock, then [`TagState::backscatter`] shifts
//! the excitation that is actually on the air.

use alloc::vec::Vec;

use super::clock::{shift_for, ClockState, ClockStateTable, Sideband};
use super::phase::{phase_sequence, PhaseSequence};
use super::TagError;
use crate::edge::{Command, ConnInfo, DownlinkFrame, FrameError, LinkParams};
use crate::hop::{ExcitationSchedule, HopState};
use crate::link::{
    frequency_to_channel, write_command_pdu, ChannelIndex, ChannelMap, ConnectIndPayload,
    LinkError, LinkLayerPacket, PduType, ADVERTISING_ACCESS_ADDRESS, ADVERTISING_CRC_INIT,
};
use crate::Bits;

/// Attribute handle the tag writes its data to once connected.
pub const WRITE_HANDLE: u16 = 0x0025;

/// Packet the tag sends when it is not in a connection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UplinkTemplate {
    pub access_address: u32,
    pub pdu_type: PduType,
    pub header_flags: u8,
    pub crc_init: u32,
    pub payload: Vec<u8>,
}

impl UplinkTemplate {
    /// ADV_NONCONN_IND from `address` carrying `data` as AD structures.
    pub fn advertisement(address: [u8; 6], data: &[u8]) -> Self {
        let mut payload = Vec::with_capacity(6 + data.len());
        payload.extend_from_slice(&address);
        payload.extend_from_slice(data);
        UplinkTemplate {
            access_address: ADVERTISING_ACCESS_ADDRESS,
            pdu_type: PduType::AdvNonconnInd,
            header_flags: 0,
            crc_init: ADVERTISING_CRC_INIT,
            payload,
        }
    }

    pub fn packet(&self, channel: ChannelIndex) -> Result<LinkLayerPacket, LinkError> {
        LinkLayerPacket::new(
            self.access_address,
            self.pdu_type,
            self.header_flags,
            self.payload.clone(),
            self.crc_init,
            channel,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConnectionPhase {
    /// Waiting for an excitation to answer the advertiser with a CONNECT_IND.
    Requesting(LinkParams),
    /// Following the connection; `hop` is indexed by the tag counter.
    Connected { params: LinkParams, hop: HopState },
}

/// Which channel the tag aims at for each excitation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetPlan {
    Idle,
    Fixed(ChannelIndex),
    /// Target of excitation `k` is event `k` of the hop sequence.
    Hopping(HopState),
    Connection(ConnectionPhase),
}

impl TargetPlan {
    fn target_at(&self, counter: u16) -> Option<ChannelIndex> {
        match self {
            TargetPlan::Idle => None,
            TargetPlan::Fixed(ch) => Some(*ch),
            TargetPlan::Hopping(hop) => Some(hop.channel_at(counter)),
            TargetPlan::Connection(ConnectionPhase::Requesting(p)) => Some(p.adv_channel),
            TargetPlan::Connection(ConnectionPhase::Connected { hop, .. }) => {
                Some(hop.channel_at(counter))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagConfig {
    pub address: [u8; 6],
    pub uplink: UplinkTemplate,
    pub target: TargetPlan,
    /// Excitation schedule known before any ConnInfo frame arrives.
    pub excitation: ExcitationSchedule,
    /// Value carried by the ATT Write Command in a connection.
    pub write_value: Vec<u8>,
}

/// What the tag committed to for the current excitation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActiveSlot {
    pub counter: u16,
    /// Excitation channel the tag expects, if it can predict it.
    pub excitation: Option<ChannelIndex>,
    pub target: Option<ChannelIndex>,
    /// Set when both channels are known and differ.
    pub clock: Option<(ClockState, Sideband)>,
}

/// A backscattered packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Emission {
    pub counter: u16,
    pub intended_target: ChannelIndex,
    pub believed_excitation: ChannelIndex,
    pub actual_excitation: ChannelIndex,
    /// Channel the selected sideband lands on, if it is a channel center.
    pub channel: Option<ChannelIndex>,
    pub mirror_channel: Option<ChannelIndex>,
    pub shift_mhz: u16,
    pub pdu_type: PduType,
    /// On-air bits, whitened for `intended_target`.
    pub bits: Bits,
    pub phases: PhaseSequence,
}

impl Emission {
    pub fn is_on_target(&self) -> bool {
        self.channel == Some(self.intended_target)
    }

    /// Whether a receiver on `channel` sees this emission.
    pub fn reaches(&self, channel: ChannelIndex) -> bool {
        self.channel == Some(channel) || self.mirror_channel == Some(channel)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TagStats {
    pub frames_accepted: u32,
    pub frames_rejected: u32,
    pub stale_counters: u32,
    pub self_increments: u32,
    pub ticks: u32,
    pub emissions: u32,
    pub off_target: u32,
    pub unknown_excitation: u32,
    pub zero_shift: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pending {
    Counter(u16),
    Channel(ChannelIndex),
}

#[derive(Debug, Clone)]
pub struct TagState {
    config: TagConfig,
    table: ClockStateTable,
    excitation: ExcitationSchedule,
    target: TargetPlan,
    started: bool,
    counter: u16,
    pending: Option<Pending>,
    slot: Option<ActiveSlot>,
    stats: TagStats,
}

impl TagState {
    pub fn new(config: TagConfig) -> Result<Self, TagError> {
        let probe = ChannelIndex::new(37).expect("37 is a channel");
        config.uplink.packet(probe).map_err(TagError::Uplink)?;
        Ok(TagState {
            table: ClockStateTable::default(),
            excitation: config.excitation.clone(),
            target: config.target.clone(),
            started: false,
            counter: u16::MAX,
            pending: None,
            slot: None,
            stats: TagStats::default(),
            config,
        })
    }

    pub fn config(&self) -> &TagConfig {
        &self.config
    }

    pub fn is_started(&self) -> bool {
        self.started
    }

    /// Counter of the most recent tick (`0xFFFF` right after Start).
    pub fn counter(&self) -> u16 {
        self.counter
    }

    pub fn excitation_schedule(&self) -> &ExcitationSchedule {
        &self.excitation
    }

    pub fn target_plan(&self) -> &TargetPlan {
        &self.target
    }

    pub fn active_slot(&self) -> Option<&ActiveSlot> {
        self.slot.as_ref()
    }

    pub fn stats(&self) -> &TagStats {
        &self.stats
    }

    /// Decodes a downlink frame. Control frames act immediately; counter and
    /// channel frames are held for the next [`tick`](Self::tick).
    pub fn deliver(&mut self, bytes: &[u8]) -> Result<Command, FrameError> {
        let command = match DownlinkFrame::decode(bytes).and_then(|f| Command::from_frame(&f)) {
            Ok(c) => c,
            Err(e) => {
                self.stats.frames_rejected += 1;
                return Err(e);
            }
        };
        self.stats.frames_accepted += 1;
        match &command {
            Command::Start => {
                self.started = true;
                self.counter = u16::MAX;
                self.pending = None;
                self.slot = None;
            }
            Command::PacketCounter(k) => self.pending = Some(Pending::Counter(*k)),
            Command::ChannelInfo(ch) => self.pending = Some(Pending::Channel(*ch)),
            Command::ChannelMapUpdate(map) => self.apply_map(*map),
            Command::ConnInfo(ConnInfo::Excitation(schedule)) => {
                self.excitation = schedule.clone();
            }
            Command::ConnInfo(ConnInfo::Link(params)) => {
                self.target = TargetPlan::Connection(ConnectionPhase::Requesting(*params));
            }
        }
        Ok(command)
    }

    fn apply_map(&mut self, map: ChannelMap) {
        match &mut self.target {
            TargetPlan::Hopping(hop)
            | TargetPlan::Connection(ConnectionPhase::Connected { hop, .. }) => {
                hop.set_channel_map(map)
            }
            _ => {}
        }
    }

    /// Commits the counter for the excitation about to start.
    ///
    /// A held counter is taken only if it is ahead of the current one, so a
    /// frame that arrived after its excitation cannot pull the tag back;
    /// otherwise the tag increments on its own. Returns `None` before Start.
    pub fn tick(&mut self) -> Option<ActiveSlot> {
        if !self.started {
            self.pending = None;
            return None;
        }
        self.stats.ticks += 1;
        let mut channel_hint = None;
        match self.pending.take() {
            Some(Pending::Counter(c)) if (c.wrapping_sub(self.counter) as i16) > 0 => {
                self.counter = c;
            }
            Some(Pending::Counter(_)) => {
                self.stats.stale_counters += 1;
                self.self_increment();
            }
            Some(Pending::Channel(ch)) => {
                channel_hint = Some(ch);
                self.counter = self.counter.wrapping_add(1);
            }
            None => self.self_increment(),
        }
        let excitation = channel_hint.or_else(|| self.excitation.channel_at(self.counter));
        let target = self.target.target_at(self.counter);
        let clock = match (excitation, target) {
            (Some(e), Some(t)) => shift_for(e, t).ok().map(|s| {
                let state = *self
                    .table
                    .for_shift(s.shift_mhz)
                    .expect("table covers every shift");
                (state, s.sideband)
            }),
            _ => None,
        };
        let slot = ActiveSlot {
            counter: self.counter,
            excitation,
            target,
            clock,
        };
        self.slot = Some(slot);
        Some(slot)
    }

    fn self_increment(&mut self) {
        self.stats.self_increments += 1;
        self.counter = self.counter.wrapping_add(1);
    }

    /// Delivers `frame` (or nothing, for a missed downlink) and ticks.
    pub fn on_downlink(&mut self, frame: Option<&[u8]>) -> Option<ActiveSlot> {
        if let Some(bytes) = frame {
            // A corrupt frame is equivalent to a missing one.
            let _ = self.deliver(bytes);
        }
        self.tick()
    }

    /// Shifts the excitation on `actual_excitation` with the clock chosen at
    /// the last tick. The packet is built for the target the tag intended,
    /// so a mis-tracked excitation puts correctly formed bits on the wrong
    /// frequency.
    pub fn backscatter(&mut self, actual_excitation: ChannelIndex) -> Option<Emission> {
        let slot = self.slot?;
        let (believed, intended) = match (slot.excitation, slot.target) {
            (Some(e), Some(t)) => (e, t),
            (None, Some(_)) => {
                self.stats.unknown_excitation += 1;
                return None;
            }
            _ => return None,
        };
        let Some((clock, sideband)) = slot.clock else {
            self.stats.zero_shift += 1;
            return None;
        };
        let packet = self.packet_for(slot.counter, intended)?;
        let shift = clock.output_mhz as i32;
        let f = i32::from(actual_excitation.frequency_mhz());
        let (main, mirror) = match sideband {
            Sideband::Upper => (f + shift, f - shift),
            Sideband::Lower => (f - shift, f + shift),
        };
        let bits = packet.assemble();
        let phases = phase_sequence(bits.iter());
        let emission = Emission {
            counter: slot.counter,
            intended_target: intended,
            believed_excitation: believed,
            actual_excitation,
            channel: channel_at_mhz(main),
            mirror_channel: channel_at_mhz(mirror),
            shift_mhz: clock.output_mhz as u16,
            pdu_type: packet.pdu_type(),
            bits,
            phases,
        };
        self.stats.emissions += 1;
        if !emission.is_on_target() {
            self.stats.off_target += 1;
        }
        if let TargetPlan::Connection(ConnectionPhase::Requesting(params)) = self.target {
            // The first connection event is the next excitation.
            let hop = HopState::csa1_from(
                0,
                params.hop_increment,
                slot.counter.wrapping_add(1),
                params.channel_map,
            )
            .expect("hop increment checked when the packet was built");
            self.target = TargetPlan::Connection(ConnectionPhase::Connected { params, hop });
        }
        Some(emission)
    }

    fn packet_for(&self, counter: u16, channel: ChannelIndex) -> Option<LinkLayerPacket> {
        match &self.target {
            TargetPlan::Idle => None,
            TargetPlan::Fixed(_) | TargetPlan::Hopping(_) => {
                self.config.uplink.packet(channel).ok()
            }
            TargetPlan::Connection(ConnectionPhase::Requesting(p)) => {
                if !(5..=16).contains(&p.hop_increment) {
                    return None;
                }
                let payload = ConnectIndPayload {
                    initiator: self.config.address,
                    advertiser: p.advertiser_address,
                    access_address: p.access_address,
                    crc_init: p.crc_init,
                    win_size: 1,
                    win_offset: 0,
                    interval: p.interval_units,
                    latency: 0,
                    timeout: 100,
                    channel_map: p.channel_map,
                    hop_increment: p.hop_increment,
                    sca: 0,
                };
                LinkLayerPacket::new(
                    ADVERTISING_ACCESS_ADDRESS,
                    PduType::ConnectInd,
                    0,
                    payload.encode(),
                    ADVERTISING_CRC_INIT,
                    channel,
                )
                .ok()
            }
            TargetPlan::Connection(ConnectionPhase::Connected { params, .. }) => {
                // Alternate SN so consecutive writes are not seen as resends.
                let sn = if counter.is_multiple_of(2) { 0 } else { 0x08 };
                LinkLayerPacket::new(
                    params.access_address,
                    PduType::DataStart,
                    sn,
                    write_command_pdu(WRITE_HANDLE, &self.config.write_value),
                    params.crc_init,
                    channel,
                )
                .ok()
            }
        }
    }
}

fn channel_at_mhz(mhz: i32) -> Option<ChannelIndex> {
    u16::try_from(mhz)
        .ok()
        .and_then(|f| frequency_to_channel(f).ok())
}
