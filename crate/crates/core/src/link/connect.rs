//! CONNECT_IND LLData and the ATT Write Command PDU used once a tag has
//! joined a connection.

use alloc::vec::Vec;

use super::ChannelMap;

pub const CONNECT_IND_LEN: usize = 34;
pub const ATT_WRITE_COMMAND: u8 = 0x52;
pub const ATT_CID: u16 = 0x0004;

/// Payload of a CONNECT_IND PDU.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConnectIndPayload {
    pub initiator: [u8; 6],
    pub advertiser: [u8; 6],
    pub access_address: u32,
    pub crc_init: u32,
    pub win_size: u8,
    pub win_offset: u16,
    /// Connection interval in 1.25 ms units.
    pub interval: u16,
    pub latency: u16,
    pub timeout: u16,
    pub channel_map: ChannelMap,
    pub hop_increment: u8,
    pub sca: u8,
}

impl ConnectIndPayload {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(CONNECT_IND_LEN);
        out.extend_from_slice(&self.initiator);
        out.extend_from_slice(&self.advertiser);
        out.extend_from_slice(&self.access_address.to_le_bytes());
        out.extend_from_slice(&self.crc_init.to_le_bytes()[..3]);
        out.push(self.win_size);
        out.extend_from_slice(&self.win_offset.to_le_bytes());
        out.extend_from_slice(&self.interval.to_le_bytes());
        out.extend_from_slice(&self.latency.to_le_bytes());
        out.extend_from_slice(&self.timeout.to_le_bytes());
        out.extend_from_slice(&self.channel_map.to_bytes());
        out.push((self.hop_increment & 0x1f) | (self.sca << 5));
        out
    }

    pub fn decode(p: &[u8]) -> Option<Self> {
        if p.len() != CONNECT_IND_LEN {
            return None;
        }
        let u16_at = |i: usize| u16::from_le_bytes([p[i], p[i + 1]]);
        Some(ConnectIndPayload {
            initiator: p[0..6].try_into().ok()?,
            advertiser: p[6..12].try_into().ok()?,
            access_address: u32::from_le_bytes(p[12..16].try_into().ok()?),
            crc_init: u32::from_le_bytes([p[16], p[17], p[18], 0]),
            win_size: p[19],
            win_offset: u16_at(20),
            interval: u16_at(22),
            latency: u16_at(24),
            timeout: u16_at(26),
            channel_map: ChannelMap::from_bytes(p[28..33].try_into().ok()?).ok()?,
            hop_increment: p[33] & 0x1f,
            sca: p[33] >> 5,
        })
    }
}

/// L2CAP-framed ATT Write Command carrying `value` to `handle`.
pub fn write_command_pdu(handle: u16, value: &[u8]) -> Vec<u8> {
    let att_len = 3 + value.len();
    let mut out = Vec::with_capacity(4 + att_len);
    out.extend_from_slice(&(att_len as u16).to_le_bytes());
    out.extend_from_slice(&ATT_CID.to_le_bytes());
    out.push(ATT_WRITE_COMMAND);
    out.extend_from_slice(&handle.to_le_bytes());
    out.extend_from_slice(value);
    out
}

/// Handle and value of an ATT Write Command PDU.
pub fn parse_write_command(pdu: &[u8]) -> Option<(u16, &[u8])> {
    if pdu.len() < 7 {
        return None;
    }
    let att_len = usize::from(u16::from_le_bytes([pdu[0], pdu[1]]));
    let cid = u16::from_le_bytes([pdu[2], pdu[3]]);
    if cid != ATT_CID || att_len != pdu.len() - 4 || pdu[4] != ATT_WRITE_COMMAND {
        return None;
    }
    Some((u16::from_le_bytes([pdu[5], pdu[6]]), &pdu[7..]))
}
