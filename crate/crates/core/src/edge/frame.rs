//! Edge to tag downlink frames.
//!
//! Wire format, one byte per field unless noted:
//!
//! ```text
//! [0xAA][kind][len][payload; len][crc8]
//! ```
//!
//! `crc8` is CRC-8 (polynomial 0x07, init 0x00, no reflection) over
//! `kind`, `len` and the payload. Payload layouts:
//!
//! | kind | code | payload |
//! |------|------|---------|
//! | Start | 0x01 | empty |
//! | ChannelInfo | 0x02 | channel index |
//! | PacketCounter | 0x03 | u16 little endian |
//! | ChannelMapUpdate | 0x04 | 37-bit map, 5 bytes little endian |
//! | ConnInfo | 0x05 | scope byte, then scope specific fields |
//!
//! ConnInfo scope 0x00 announces the excitation schedule:
//! `[0x00][ch]` fixed, `[0x01][hop][last_unmapped][counter:2][map:5]` CSA#1,
//! `[0x02][aa:4][counter:2][map:5]` CSA#2, `[0x03][n][ch; n]` cycle,
//! `[0x04]` unknown. Scope 0x01 carries connection parameters:
//! `[adv_addr:6][adv_channel][aa:4][crc_init:3][interval:2][hop][map:5]`.
//! Multi-byte integers are little endian.

use alloc::vec::Vec;

use thiserror::Error;

use crate::hop::{ExcitationSchedule, HopAlgorithm, HopState};
use crate::link::{ChannelIndex, ChannelMap};

pub const FRAME_PREAMBLE: u8 = 0xAA;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum FrameKind {
    Start = 0x01,
    ChannelInfo = 0x02,
    PacketCounter = 0x03,
    ChannelMapUpdate = 0x04,
    ConnInfo = 0x05,
}

impl FrameKind {
    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0x01 => FrameKind::Start,
            0x02 => FrameKind::ChannelInfo,
            0x03 => FrameKind::PacketCounter,
            0x04 => FrameKind::ChannelMapUpdate,
            0x05 => FrameKind::ConnInfo,
            _ => return None,
        })
    }

    fn accepts_len(self, len: usize) -> bool {
        match self {
            FrameKind::Start => len == 0,
            FrameKind::ChannelInfo => len == 1,
            FrameKind::PacketCounter => len == 2,
            FrameKind::ChannelMapUpdate => len == 5,
            FrameKind::ConnInfo => (1..=255).contains(&len),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("frame of {0} bytes is truncated")]
    Truncated(usize),
    #[error("bad preamble {0:#04x}")]
    BadPreamble(u8),
    #[error("unknown frame kind {0:#04x}")]
    UnknownKind(u8),
    #[error("length field says {declared} bytes but {available} follow")]
    LengthField { declared: usize, available: usize },
    #[error("payload length {len} is invalid for {kind:?}")]
    PayloadLength { kind: FrameKind, len: usize },
    #[error("checksum mismatch: computed {computed:#04x}, received {received:#04x}")]
    Checksum { computed: u8, received: u8 },
    #[error("malformed {0:?} payload")]
    Malformed(FrameKind),
}

/// CRC-8, polynomial 0x07, init 0, MSB first.
pub fn crc8(bytes: &[u8]) -> u8 {
    let mut crc = 0u8;
    for &b in bytes {
        crc ^= b;
        for _ in 0..8 {
            crc = if crc & 0x80 != 0 {
                (crc << 1) ^ 0x07
            } else {
                crc << 1
            };
        }
    }
    crc
}

/// A raw downlink frame: kind plus payload bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DownlinkFrame {
    kind: FrameKind,
    payload: Vec<u8>,
}

impl DownlinkFrame {
    pub fn new(kind: FrameKind, payload: Vec<u8>) -> Result<Self, FrameError> {
        if !kind.accepts_len(payload.len()) {
            return Err(FrameError::PayloadLength {
                kind,
                len: payload.len(),
            });
        }
        Ok(DownlinkFrame { kind, payload })
    }

    pub fn kind(&self) -> FrameKind {
        self.kind
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn check(&self) -> u8 {
        let mut crc_input = Vec::with_capacity(2 + self.payload.len());
        crc_input.push(self.kind as u8);
        crc_input.push(self.payload.len() as u8);
        crc_input.extend_from_slice(&self.payload);
        crc8(&crc_input)
    }

    pub fn encoded_len(&self) -> usize {
        4 + self.payload.len()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.push(FRAME_PREAMBLE);
        out.push(self.kind as u8);
        out.push(self.payload.len() as u8);
        out.extend_from_slice(&self.payload);
        out.push(crc8(&out[1..]));
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, FrameError> {
        if bytes.len() < 4 {
            return Err(FrameError::Truncated(bytes.len()));
        }
        if bytes[0] != FRAME_PREAMBLE {
            return Err(FrameError::BadPreamble(bytes[0]));
        }
        let declared = usize::from(bytes[2]);
        let available = bytes.len() - 4;
        if declared != available {
            return Err(FrameError::LengthField {
                declared,
                available,
            });
        }
        let computed = crc8(&bytes[1..bytes.len() - 1]);
        let received = bytes[bytes.len() - 1];
        if computed != received {
            return Err(FrameError::Checksum { computed, received });
        }
        let kind = FrameKind::from_code(bytes[1]).ok_or(FrameError::UnknownKind(bytes[1]))?;
        DownlinkFrame::new(kind, bytes[3..3 + declared].to_vec())
    }
}

/// Connection parameters the edge forwards so the tag can answer an
/// advertiser with a CONNECT_IND and then follow the connection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkParams {
    pub advertiser_address: [u8; 6],
    pub adv_channel: ChannelIndex,
    pub access_address: u32,
    pub crc_init: u32,
    /// Connection interval in 1.25 ms units.
    pub interval_units: u16,
    pub hop_increment: u8,
    pub channel_map: ChannelMap,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConnInfo {
    Excitation(ExcitationSchedule),
    Link(LinkParams),
}

/// Typed view of a downlink frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Start,
    ChannelInfo(ChannelIndex),
    PacketCounter(u16),
    ChannelMapUpdate(ChannelMap),
    ConnInfo(ConnInfo),
}

impl Command {
    pub fn kind(&self) -> FrameKind {
        match self {
            Command::Start => FrameKind::Start,
            Command::ChannelInfo(_) => FrameKind::ChannelInfo,
            Command::PacketCounter(_) => FrameKind::PacketCounter,
            Command::ChannelMapUpdate(_) => FrameKind::ChannelMapUpdate,
            Command::ConnInfo(_) => FrameKind::ConnInfo,
        }
    }

    pub fn to_frame(&self) -> DownlinkFrame {
        let payload = match self {
            Command::Start => Vec::new(),
            Command::ChannelInfo(ch) => alloc::vec![ch.index()],
            Command::PacketCounter(k) => k.to_le_bytes().to_vec(),
            Command::ChannelMapUpdate(map) => map.to_bytes().to_vec(),
            Command::ConnInfo(info) => encode_conn_info(info),
        };
        DownlinkFrame::new(self.kind(), payload).expect("payload length matches kind")
    }

    pub fn encode(&self) -> Vec<u8> {
        self.to_frame().encode()
    }

    pub fn from_frame(frame: &DownlinkFrame) -> Result<Self, FrameError> {
        let p = frame.payload();
        let malformed = FrameError::Malformed(frame.kind());
        Ok(match frame.kind() {
            FrameKind::Start => Command::Start,
            FrameKind::ChannelInfo => {
                Command::ChannelInfo(ChannelIndex::new(p[0]).map_err(|_| malformed)?)
            }
            FrameKind::PacketCounter => Command::PacketCounter(u16::from_le_bytes([p[0], p[1]])),
            FrameKind::ChannelMapUpdate => Command::ChannelMapUpdate(
                ChannelMap::from_bytes([p[0], p[1], p[2], p[3], p[4]]).map_err(|_| malformed)?,
            ),
            FrameKind::ConnInfo => Command::ConnInfo(decode_conn_info(p).ok_or(malformed)?),
        })
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, FrameError> {
        Self::from_frame(&DownlinkFrame::decode(bytes)?)
    }
}

fn encode_conn_info(info: &ConnInfo) -> Vec<u8> {
    let mut out = Vec::new();
    match info {
        ConnInfo::Excitation(schedule) => {
            out.push(0x00);
            match schedule {
                ExcitationSchedule::Fixed(ch) => out.extend_from_slice(&[0x00, ch.index()]),
                ExcitationSchedule::Hopping(state) => match state.algorithm() {
                    HopAlgorithm::Csa1 => {
                        out.extend_from_slice(&[
                            0x01,
                            state.hop_increment(),
                            state.last_unmapped_channel(),
                        ]);
                        out.extend_from_slice(&state.event_counter().to_le_bytes());
                        out.extend_from_slice(&state.channel_map().to_bytes());
                    }
                    HopAlgorithm::Csa2 => {
                        out.push(0x02);
                        out.extend_from_slice(&state.access_address().to_le_bytes());
                        out.extend_from_slice(&state.event_counter().to_le_bytes());
                        out.extend_from_slice(&state.channel_map().to_bytes());
                    }
                },
                ExcitationSchedule::Cycle(list) => {
                    out.push(0x03);
                    out.push(list.len() as u8);
                    out.extend(list.iter().map(|c| c.index()));
                }
                ExcitationSchedule::Unknown => out.push(0x04),
            }
        }
        ConnInfo::Link(link) => {
            out.push(0x01);
            out.extend_from_slice(&link.advertiser_address);
            out.push(link.adv_channel.index());
            out.extend_from_slice(&link.access_address.to_le_bytes());
            out.extend_from_slice(&link.crc_init.to_le_bytes()[..3]);
            out.extend_from_slice(&link.interval_units.to_le_bytes());
            out.push(link.hop_increment);
            out.extend_from_slice(&link.channel_map.to_bytes());
        }
    }
    out
}

fn map_at(p: &[u8], at: usize) -> Option<ChannelMap> {
    let b: [u8; 5] = p.get(at..at + 5)?.try_into().ok()?;
    ChannelMap::from_bytes(b).ok()
}

fn u16_at(p: &[u8], at: usize) -> Option<u16> {
    Some(u16::from_le_bytes(p.get(at..at + 2)?.try_into().ok()?))
}

fn u32_at(p: &[u8], at: usize) -> Option<u32> {
    Some(u32::from_le_bytes(p.get(at..at + 4)?.try_into().ok()?))
}

fn decode_conn_info(p: &[u8]) -> Option<ConnInfo> {
    match *p.first()? {
        0x00 => {
            let rest = &p[1..];
            let schedule = match *rest.first()? {
                0x00 if rest.len() == 2 => {
                    ExcitationSchedule::Fixed(ChannelIndex::new(rest[1]).ok()?)
                }
                0x01 if rest.len() == 10 => ExcitationSchedule::Hopping(
                    HopState::csa1_from(rest[2], rest[1], u16_at(rest, 3)?, map_at(rest, 5)?)
                        .ok()?,
                ),
                0x02 if rest.len() == 12 => ExcitationSchedule::Hopping(HopState::csa2(
                    u32_at(rest, 1)?,
                    u16_at(rest, 5)?,
                    map_at(rest, 7)?,
                )),
                0x03 if rest.len() >= 2 && rest.len() == 2 + usize::from(rest[1]) => {
                    ExcitationSchedule::Cycle(
                        rest[2..]
                            .iter()
                            .map(|&c| ChannelIndex::new(c).ok())
                            .collect::<Option<Vec<_>>>()?,
                    )
                }
                0x04 if rest.len() == 1 => ExcitationSchedule::Unknown,
                _ => return None,
            };
            Some(ConnInfo::Excitation(schedule))
        }
        0x01 if p.len() == 23 => {
            let hop_increment = p[17];
            if !(5..=16).contains(&hop_increment) {
                return None;
            }
            let adv_channel = ChannelIndex::new(p[7]).ok()?;
            Some(ConnInfo::Link(LinkParams {
                advertiser_address: p[1..7].try_into().ok()?,
                adv_channel,
                access_address: u32_at(p, 8)?,
                crc_init: u32::from_le_bytes([p[12], p[13], p[14], 0]),
                interval_units: u16_at(p, 15)?,
                hop_increment,
                channel_map: map_at(p, 18)?,
            }))
        }
        _ => None,
    }
}
