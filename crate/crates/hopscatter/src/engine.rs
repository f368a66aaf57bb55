//! One edge, one tag, a set of receivers and the loss model, driven by the
//! event queue.

use hopscatter_core::edge::{
    Command, ConnInfo, EdgeAction, EdgeConfig, EdgeController, LinkParams,
};
use hopscatter_core::hop::HopState;
use hopscatter_core::link::{
    ChannelIndex, ConnectIndPayload, LinkLayerPacket, ParseError, PduType,
    ADVERTISING_ACCESS_ADDRESS, ADVERTISING_CRC_INIT,
};
use hopscatter_core::tag::{Emission, TagConfig, TagState, TagStats};
use hopscatter_core::Bits;
use thiserror::Error;

use crate::event::{EventQueue, Priority};
use crate::model::{ChannelModelConfig, LossStreams, ModelError};

#[derive(Debug, Error)]
pub enum SetupError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("edge: {0}")]
    Edge(#[from] hopscatter_core::edge::EdgeError),
    #[error("tag: {0}")]
    Tag(#[from] hopscatter_core::tag::TagError),
    #[error("advertiser: {0}")]
    Link(#[from] hopscatter_core::link::LinkError),
}

/// A receiver in the simulated environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Listener {
    /// Fixed channel, advertising CRC init.
    Channel(ChannelIndex),
    /// A connectable device: scans its advertising channel, and after a
    /// CONNECT_IND follows the connection's hop sequence.
    Follower(ChannelIndex),
}

/// An ambient device that advertises once; the edge sniffs it and forwards
/// `params` to the tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmbientAdvertiser {
    pub at_ns: u64,
    pub address: [u8; 6],
    pub params: LinkParams,
}

#[derive(Debug, Clone)]
pub struct LinkSetup {
    pub edge: EdgeConfig,
    pub tag: TagConfig,
    pub listeners: Vec<Listener>,
    pub ambient: Option<AmbientAdvertiser>,
    pub model: ChannelModelConfig,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExcitationRecord {
    pub time_ns: u64,
    pub counter: u16,
    pub channel: ChannelIndex,
    pub tag_counter: Option<u16>,
    pub believed: Option<ChannelIndex>,
    pub target: Option<ChannelIndex>,
    pub emitted: Option<ChannelIndex>,
    pub mirror: Option<ChannelIndex>,
    pub pdu_type: Option<PduType>,
}

impl ExcitationRecord {
    pub fn on_target(&self) -> bool {
        self.emitted.is_some() && self.emitted == self.target
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeOutcome {
    Decoded {
        pdu_type: PduType,
        payload: Vec<u8>,
    },
    /// Dropped by the loss model.
    Lost,
    /// Reached the receiver but failed to parse.
    Failed(ParseError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeRecord {
    pub time_ns: u64,
    /// Index into the setup's listeners; `None` for the ambient advertiser.
    pub listener: Option<usize>,
    pub channel: ChannelIndex,
    /// Edge counter of the excitation, or `None` for ambient traffic.
    pub counter: Option<u16>,
    pub excitation: Option<ChannelIndex>,
    /// Connection event index for a following receiver.
    pub event: Option<u32>,
    pub outcome: DecodeOutcome,
}

impl DecodeRecord {
    pub fn is_decoded(&self) -> bool {
        matches!(self.outcome, DecodeOutcome::Decoded { .. })
    }
}

#[derive(Debug, Clone, Default)]
pub struct LinkOutcome {
    pub excitations: Vec<ExcitationRecord>,
    pub decodes: Vec<DecodeRecord>,
    pub downlink_sent: u32,
    pub downlink_lost: u32,
    pub tag: TagStats,
}

impl LinkOutcome {
    pub fn decoded_on(&self, channel: ChannelIndex) -> usize {
        self.decodes
            .iter()
            .filter(|d| d.channel == channel && d.is_decoded() && d.counter.is_some())
            .count()
    }
}

#[derive(Debug, Clone, Copy)]
enum FollowState {
    Scanning,
    Connected {
        since_ns: u64,
        interval_ns: u64,
        access_address: u32,
        crc_init: u32,
        hop: HopState,
    },
}

enum Event {
    Advert,
    EdgeWake,
    DownlinkSend {
        command: Command,
        arrive_ns: u64,
    },
    DownlinkArrive(Vec<u8>),
    Excite {
        counter: u16,
        channel: ChannelIndex,
    },
    Emit {
        counter: u16,
        emission: Emission,
    },
    Decode {
        listener: usize,
        record: DecodeRecord,
        bits: Bits,
        crc_init: u32,
    },
}

fn priority(event: &Event) -> Priority {
    match event {
        Event::Advert => Priority::Announce,
        Event::EdgeWake => Priority::EdgeWake,
        Event::DownlinkSend { .. } => Priority::DownlinkSend,
        Event::DownlinkArrive(_) => Priority::DownlinkArrive,
        Event::Excite { .. } => Priority::ExcitationStart,
        Event::Emit { .. } => Priority::BackscatterEmit,
        Event::Decode { .. } => Priority::ReceiverDecode,
    }
}

struct Sim {
    queue: EventQueue<Event>,
    edge: EdgeController,
    tag: TagState,
    listeners: Vec<(Listener, FollowState)>,
    ambient: Option<AmbientAdvertiser>,
    model: ChannelModelConfig,
    streams: LossStreams,
    out: LinkOutcome,
}

impl Sim {
    fn schedule(&mut self, time_ns: u64, event: Event) {
        let p = priority(&event);
        self.queue.push(time_ns, p, event);
    }

    fn handle(&mut self, now: u64, event: Event) {
        match event {
            Event::Advert => self.advert(now),
            Event::EdgeWake => {
                for action in self.edge.poll(now) {
                    match action {
                        EdgeAction::Downlink {
                            send_ns,
                            arrive_ns,
                            command,
                        } => self.schedule(send_ns, Event::DownlinkSend { command, arrive_ns }),
                        EdgeAction::Excite {
                            at_ns,
                            counter,
                            channel,
                        } => self.schedule(at_ns, Event::Excite { counter, channel }),
                    }
                }
                if let Some(t) = self.edge.next_wakeup_ns() {
                    if t > now {
                        self.schedule(t, Event::EdgeWake);
                    }
                }
            }
            Event::DownlinkSend { command, arrive_ns } => {
                self.out.downlink_sent += 1;
                let lossy = matches!(command, Command::PacketCounter(_) | Command::ChannelInfo(_));
                if lossy && self.streams.downlink_lost(self.model.downlink_loss) {
                    self.out.downlink_lost += 1;
                } else {
                    self.schedule(arrive_ns, Event::DownlinkArrive(command.encode()));
                }
            }
            Event::DownlinkArrive(bytes) => {
                // Rejected frames are counted in the tag's stats.
                let _ = self.tag.deliver(&bytes);
            }
            Event::Excite { counter, channel } => {
                let slot = self.tag.tick();
                let emission = slot.and_then(|_| self.tag.backscatter(channel));
                self.out.excitations.push(ExcitationRecord {
                    time_ns: now,
                    counter,
                    channel,
                    tag_counter: slot.map(|s| s.counter),
                    believed: slot.and_then(|s| s.excitation),
                    target: slot.and_then(|s| s.target),
                    emitted: emission.as_ref().and_then(|e| e.channel),
                    mirror: emission.as_ref().and_then(|e| e.mirror_channel),
                    pdu_type: emission.as_ref().map(|e| e.pdu_type),
                });
                if let Some(emission) = emission {
                    self.schedule(now, Event::Emit { counter, emission });
                }
            }
            Event::Emit { counter, emission } => self.emit(now, counter, &emission),
            Event::Decode {
                listener,
                mut record,
                bits,
                crc_init,
            } => {
                record.outcome = match LinkLayerPacket::parse(&bits, record.channel, crc_init) {
                    Ok(pkt) => {
                        self.on_decoded(listener, now, &pkt);
                        DecodeOutcome::Decoded {
                            pdu_type: pkt.pdu_type(),
                            payload: pkt.payload().to_vec(),
                        }
                    }
                    Err(e) => DecodeOutcome::Failed(e),
                };
                self.out.decodes.push(record);
            }
        }
    }

    fn advert(&mut self, now: u64) {
        let Some(ambient) = self.ambient.clone() else {
            return;
        };
        let channel = ambient.params.adv_channel;
        let mut payload = ambient.address.to_vec();
        payload.extend_from_slice(&[0x02, 0x01, 0x06]);
        let packet = LinkLayerPacket::new(
            ADVERTISING_ACCESS_ADDRESS,
            PduType::AdvInd,
            0,
            payload,
            ADVERTISING_CRC_INIT,
            channel,
        )
        .expect("valid advertisement");
        let bits = packet.assemble();
        // The edge's sniffer picks up the advertiser address and forwards the
        // connection parameters.
        if let Ok(sniffed) = LinkLayerPacket::parse(&bits, channel, ADVERTISING_CRC_INIT) {
            let mut params = ambient.params;
            params
                .advertiser_address
                .copy_from_slice(&sniffed.payload()[..6]);
            self.edge.enqueue(Command::ConnInfo(ConnInfo::Link(params)));
            self.schedule(now, Event::EdgeWake);
        }
        // The advertiser's own transmission shows up in the receivers' logs.
        self.out.decodes.push(DecodeRecord {
            time_ns: now,
            listener: None,
            channel,
            counter: None,
            excitation: None,
            event: None,
            outcome: DecodeOutcome::Decoded {
                pdu_type: PduType::AdvInd,
                payload: packet.payload().to_vec(),
            },
        });
    }

    fn emit(&mut self, now: u64, counter: u16, emission: &Emission) {
        for i in 0..self.listeners.len() {
            let (listener, state) = self.listeners[i];
            let (channel, crc_init, event, access_address) = match (listener, state) {
                (Listener::Channel(ch), _) => (ch, ADVERTISING_CRC_INIT, None, None),
                (Listener::Follower(ch), FollowState::Scanning) => (
                    ch,
                    ADVERTISING_CRC_INIT,
                    None,
                    Some(ADVERTISING_ACCESS_ADDRESS),
                ),
                (
                    Listener::Follower(_),
                    FollowState::Connected {
                        since_ns,
                        interval_ns,
                        access_address,
                        crc_init,
                        hop,
                    },
                ) => {
                    let elapsed = now.saturating_sub(since_ns);
                    if elapsed < interval_ns || elapsed % interval_ns != 0 {
                        continue;
                    }
                    let event = (elapsed / interval_ns - 1) as u32;
                    (
                        hop.channel_at(event as u16),
                        crc_init,
                        Some(event),
                        Some(access_address),
                    )
                }
            };
            if !emission.reaches(channel) {
                continue;
            }
            if let Some(aa) = access_address {
                // Correlators only lock onto the expected access address.
                let on_air = u32::from_le_bytes([
                    emission.bits.as_bytes()[1],
                    emission.bits.as_bytes()[2],
                    emission.bits.as_bytes()[3],
                    emission.bits.as_bytes()[4],
                ]);
                if on_air != aa {
                    continue;
                }
            }
            let record = DecodeRecord {
                time_ns: now,
                listener: Some(i),
                channel,
                counter: Some(counter),
                excitation: Some(emission.actual_excitation),
                event,
                outcome: DecodeOutcome::Lost,
            };
            let p = self
                .model
                .loss_probability(emission.actual_excitation, channel);
            if self
                .streams
                .uplink_lost(emission.actual_excitation, channel, p)
            {
                self.out.decodes.push(record);
            } else {
                self.schedule(
                    now,
                    Event::Decode {
                        listener: i,
                        record,
                        bits: emission.bits.clone(),
                        crc_init,
                    },
                );
            }
        }
    }

    fn on_decoded(&mut self, listener: usize, now: u64, pkt: &LinkLayerPacket) {
        let Some((Listener::Follower(_), state)) = self.listeners.get_mut(listener) else {
            return;
        };
        if !matches!(state, FollowState::Scanning) || pkt.pdu_type() != PduType::ConnectInd {
            return;
        }
        let Some(ind) = ConnectIndPayload::decode(pkt.payload()) else {
            return;
        };
        let Ok(hop) = HopState::csa1(ind.hop_increment, ind.channel_map) else {
            return;
        };
        *state = FollowState::Connected {
            since_ns: now,
            interval_ns: u64::from(ind.interval) * 1_250_000,
            access_address: ind.access_address,
            crc_init: ind.crc_init,
            hop,
        };
    }
}

/// Runs the setup until the edge has sent all its excitations.
pub fn run_link(setup: &LinkSetup) -> Result<LinkOutcome, SetupError> {
    setup.model.validate()?;
    let edge = EdgeController::new(setup.edge.clone())?;
    let tag = TagState::new(setup.tag.clone())?;
    let mut sim = Sim {
        queue: EventQueue::new(),
        edge,
        tag,
        listeners: setup
            .listeners
            .iter()
            .map(|&l| (l, FollowState::Scanning))
            .collect(),
        ambient: setup.ambient.clone(),
        model: setup.model.clone(),
        streams: LossStreams::new(setup.seed),
        out: LinkOutcome::default(),
    };
    if let Some(t) = sim.edge.next_wakeup_ns() {
        sim.schedule(t, Event::EdgeWake);
    }
    if let Some(ambient) = &setup.ambient {
        sim.schedule(ambient.at_ns, Event::Advert);
    }
    while let Some((t, _, event)) = sim.queue.pop() {
        sim.handle(t, event);
    }
    sim.out.tag = *sim.tag.stats();
    Ok(sim.out)
}
