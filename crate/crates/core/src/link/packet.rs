use alloc::vec::Vec;

use thiserror::Error;

use super::{crc24, crc24_air_bytes, whiten_bytes, ChannelIndex, LinkError};
use crate::Bits;

pub const ADVERTISING_ACCESS_ADDRESS: u32 = 0x8E89_BED6;
pub const MAX_PAYLOAD_LEN: usize = 255;

/// Preamble, access address, 2-byte header and CRC.
pub const MIN_FRAME_BITS: usize = (1 + 4 + 2 + 3) * 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "SCREAMING_SNAKE_CASE"))]
pub enum PduType {
    AdvInd,
    AdvDirectInd,
    AdvNonconnInd,
    ScanReq,
    ScanRsp,
    ConnectInd,
    AdvScanInd,
    /// LLID 0b01: continuation fragment or empty PDU.
    DataContinuation,
    /// LLID 0b10: start of an L2CAP message.
    DataStart,
    /// LLID 0b11: LL control PDU.
    Control,
}

impl PduType {
    pub const fn is_advertising(self) -> bool {
        !matches!(
            self,
            PduType::DataContinuation | PduType::DataStart | PduType::Control
        )
    }

    /// Bits of header byte 0 owned by the type field.
    const fn type_mask(self) -> u8 {
        if self.is_advertising() {
            0x0f
        } else {
            0x03
        }
    }

    const fn code(self) -> u8 {
        match self {
            PduType::AdvInd => 0,
            PduType::AdvDirectInd => 1,
            PduType::AdvNonconnInd => 2,
            PduType::ScanReq => 3,
            PduType::ScanRsp => 4,
            PduType::ConnectInd => 5,
            PduType::AdvScanInd => 6,
            PduType::DataContinuation => 1,
            PduType::DataStart => 2,
            PduType::Control => 3,
        }
    }

    fn from_header(advertising: bool, byte0: u8) -> Option<Self> {
        if advertising {
            Some(match byte0 & 0x0f {
                0 => PduType::AdvInd,
                1 => PduType::AdvDirectInd,
                2 => PduType::AdvNonconnInd,
                3 => PduType::ScanReq,
                4 => PduType::ScanRsp,
                5 => PduType::ConnectInd,
                6 => PduType::AdvScanInd,
                _ => return None,
            })
        } else {
            Some(match byte0 & 0x03 {
                1 => PduType::DataContinuation,
                2 => PduType::DataStart,
                3 => PduType::Control,
                _ => return None,
            })
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            PduType::AdvInd => "ADV_IND",
            PduType::AdvDirectInd => "ADV_DIRECT_IND",
            PduType::AdvNonconnInd => "ADV_NONCONN_IND",
            PduType::ScanReq => "SCAN_REQ",
            PduType::ScanRsp => "SCAN_RSP",
            PduType::ConnectInd => "CONNECT_IND",
            PduType::AdvScanInd => "ADV_SCAN_IND",
            PduType::DataContinuation => "LL_DATA_CONT",
            PduType::DataStart => "LL_DATA_START",
            PduType::Control => "LL_CONTROL",
        }
    }
}

/// A link-layer packet together with the channel its PDU is whitened for.
///
/// Advertising PDU types travel on [`ADVERTISING_ACCESS_ADDRESS`], data PDU
/// types on any other access address. `header_flags` holds the remaining
/// bits of the first header byte (TxAdd/RxAdd/ChSel or NESN/SN/MD).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkLayerPacket {
    access_address: u32,
    pdu_type: PduType,
    header_flags: u8,
    payload: Vec<u8>,
    crc_init: u32,
    crc: u32,
    whitening_channel: ChannelIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{bits} bits is shorter than the frame")]
    Truncated { bits: usize },
    #[error("CRC mismatch: computed {computed:06x}, received {received:06x}")]
    Crc { computed: u32, received: u32 },
    #[error("unknown PDU type in header byte {0:#04x}")]
    UnknownPduType(u8),
}

impl ParseError {
    pub fn is_crc_failure(&self) -> bool {
        matches!(self, ParseError::Crc { .. })
    }
}

impl LinkLayerPacket {
    pub fn new(
        access_address: u32,
        pdu_type: PduType,
        header_flags: u8,
        payload: Vec<u8>,
        crc_init: u32,
        whitening_channel: ChannelIndex,
    ) -> Result<Self, LinkError> {
        if payload.len() > MAX_PAYLOAD_LEN {
            return Err(LinkError::PayloadTooLong(payload.len()));
        }
        if pdu_type.is_advertising() != (access_address == ADVERTISING_ACCESS_ADDRESS) {
            return Err(LinkError::PduKindMismatch { pdu: pdu_type });
        }
        if header_flags & pdu_type.type_mask() != 0 {
            return Err(LinkError::InvalidHeaderFlags {
                flags: header_flags,
            });
        }
        let crc_init = crc_init & 0xff_ffff;
        let mut pkt = LinkLayerPacket {
            access_address,
            pdu_type,
            header_flags,
            payload,
            crc_init,
            crc: 0,
            whitening_channel,
        };
        pkt.crc = crc24(&pkt.pdu_bytes(), crc_init);
        Ok(pkt)
    }

    pub fn access_address(&self) -> u32 {
        self.access_address
    }

    pub fn pdu_type(&self) -> PduType {
        self.pdu_type
    }

    pub fn header_flags(&self) -> u8 {
        self.header_flags
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn crc_init(&self) -> u32 {
        self.crc_init
    }

    pub fn crc(&self) -> u32 {
        self.crc
    }

    pub fn whitening_channel(&self) -> ChannelIndex {
        self.whitening_channel
    }

    /// Same packet re-targeted to another whitening channel.
    pub fn with_whitening_channel(mut self, channel: ChannelIndex) -> Self {
        self.whitening_channel = channel;
        self
    }

    fn header(&self) -> [u8; 2] {
        [
            self.pdu_type.code() | self.header_flags,
            self.payload.len() as u8,
        ]
    }

    /// Header followed by payload: the bytes the CRC covers.
    pub fn pdu_bytes(&self) -> Vec<u8> {
        let mut pdu = Vec::with_capacity(2 + self.payload.len());
        pdu.extend_from_slice(&self.header());
        pdu.extend_from_slice(&self.payload);
        pdu
    }

    /// Number of on-air bits produced by [`assemble`](Self::assemble).
    pub fn air_bits(&self) -> usize {
        MIN_FRAME_BITS + 8 * self.payload.len()
    }

    /// On-air bits: preamble, access address, then the whitened PDU and CRC.
    pub fn assemble(&self) -> Bits {
        let mut frame = Vec::with_capacity(self.air_bits() / 8);
        frame.push(preamble_for(self.access_address));
        frame.extend_from_slice(&self.access_address.to_le_bytes());
        frame.extend_from_slice(&self.header());
        frame.extend_from_slice(&self.payload);
        frame.extend_from_slice(&crc24_air_bytes(self.crc));
        whiten_bytes(&mut frame[5..], self.whitening_channel);
        Bits::from_bytes(&frame)
    }

    /// Receives `bits` on `listen_channel` with the link's `crc_init`.
    ///
    /// The PDU is de-whitened with the listen channel's seed, so a packet
    /// whitened for another channel fails the CRC check. The preamble is not
    /// checked. When the decoded length runs past the end of the capture the
    /// missing bits read as zero; such a frame fails the CRC check, or is
    /// reported as truncated if the check happens to pass.
    pub fn parse(
        bits: &Bits,
        listen_channel: ChannelIndex,
        crc_init: u32,
    ) -> Result<Self, ParseError> {
        if bits.len() < MIN_FRAME_BITS {
            return Err(ParseError::Truncated { bits: bits.len() });
        }
        let raw = bits.as_bytes();
        let access_address = u32::from_le_bytes([raw[1], raw[2], raw[3], raw[4]]);

        let mut whitener = super::Whitener::new(listen_channel);
        let mut header = [raw[5], raw[6]];
        whitener.apply(&mut header);
        let len = usize::from(header[1]);

        let total = 7 + len + 3;
        let mut rest = alloc::vec![0u8; len + 3];
        // Bits keeps padding bits zero, so a partial last byte needs no masking.
        let available = raw.len().min(total).saturating_sub(7);
        rest[..available].copy_from_slice(&raw[7..7 + available]);
        whitener.apply(&mut rest);

        let crc_init = crc_init & 0xff_ffff;
        let mut pdu = Vec::with_capacity(2 + len);
        pdu.extend_from_slice(&header);
        pdu.extend_from_slice(&rest[..len]);
        let computed = crc24(&pdu, crc_init);
        let received = u32::from_le_bytes([rest[len], rest[len + 1], rest[len + 2], 0]);
        if computed != received {
            return Err(ParseError::Crc { computed, received });
        }
        if bits.len() < total * 8 {
            return Err(ParseError::Truncated { bits: bits.len() });
        }

        let advertising = access_address == ADVERTISING_ACCESS_ADDRESS;
        let pdu_type = PduType::from_header(advertising, header[0])
            .ok_or(ParseError::UnknownPduType(header[0]))?;
        Ok(LinkLayerPacket {
            access_address,
            pdu_type,
            header_flags: header[0] & !pdu_type.type_mask(),
            payload: rest[..len].to_vec(),
            crc_init,
            crc: computed,
            whitening_channel: listen_channel,
        })
    }
}

/// Alternating preamble whose first bit equals the access address LSB.
fn preamble_for(access_address: u32) -> u8 {
    if access_address & 1 == 1 {
        0xaa
    } else {
        0x55
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::ADVERTISING_CRC_INIT;
    use alloc::vec;

    fn ch(i: u8) -> ChannelIndex {
        ChannelIndex::new(i).unwrap()
    }

    fn adv(payload: Vec<u8>, channel: u8) -> LinkLayerPacket {
        LinkLayerPacket::new(
            ADVERTISING_ACCESS_ADDRESS,
            PduType::AdvInd,
            0x40,
            payload,
            ADVERTISING_CRC_INIT,
            ch(channel),
        )
        .unwrap()
    }

    #[test]
    fn round_trip() {
        let p = adv(vec![1, 2, 3, 4, 5, 6, 2, 1, 6], 37);
        let bits = p.assemble();
        assert_eq!(bits.len(), p.air_bits());
        assert_eq!(
            LinkLayerPacket::parse(&bits, ch(37), ADVERTISING_CRC_INIT),
            Ok(p)
        );
    }

    #[test]
    fn wrong_channel_is_crc_failure() {
        let p = adv(vec![9; 20], 37);
        let bits = p.assemble();
        let err = LinkLayerPacket::parse(&bits, ch(38), ADVERTISING_CRC_INIT).unwrap_err();
        assert!(err.is_crc_failure(), "{err:?}");
    }

    #[test]
    fn truncated_input() {
        let bits: Bits = [true, false, true].into_iter().collect();
        assert_eq!(
            LinkLayerPacket::parse(&bits, ch(0), ADVERTISING_CRC_INIT),
            Err(ParseError::Truncated { bits: 3 })
        );
    }

    #[test]
    fn cut_frame_fails_crc() {
        let p = adv(vec![7; 30], 10);
        let mut bits = p.assemble();
        bits.truncate(bits.len() - 13);
        assert!(LinkLayerPacket::parse(&bits, ch(10), ADVERTISING_CRC_INIT)
            .unwrap_err()
            .is_crc_failure());
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            LinkLayerPacket::new(
                ADVERTISING_ACCESS_ADDRESS,
                PduType::AdvInd,
                0,
                vec![0; 256],
                0,
                ch(1)
            ),
            Err(LinkError::PayloadTooLong(256))
        );
        assert_eq!(
            LinkLayerPacket::new(0x1234_5678, PduType::AdvInd, 0, vec![], 0, ch(1)),
            Err(LinkError::PduKindMismatch {
                pdu: PduType::AdvInd
            })
        );
        assert!(
            LinkLayerPacket::new(0x1234_5678, PduType::DataStart, 0x01, vec![], 0, ch(1)).is_err()
        );
    }

    #[test]
    fn data_packet_needs_link_crc_init() {
        let p = LinkLayerPacket::new(
            0x5065_4f2b,
            PduType::DataStart,
            0,
            vec![3, 0, 4, 0, 0x52],
            0x12_3456,
            ch(15),
        )
        .unwrap();
        let bits = p.assemble();
        assert_eq!(LinkLayerPacket::parse(&bits, ch(15), 0x12_3456), Ok(p));
        assert!(LinkLayerPacket::parse(&bits, ch(15), ADVERTISING_CRC_INIT)
            .unwrap_err()
            .is_crc_failure());
    }
}
