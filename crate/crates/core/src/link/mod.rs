//! BLE link-layer codec.
//!
//! Channel plan, data whitening, CRC-24 and packet assembly/parsing, all
//! following the Bluetooth Core Specification (Vol 6, Part B). On-air bit
//! sequences are [`Bits`](crate::Bits) buffers in transmission order.

mod channel;
mod connect;
mod crc;
mod packet;
mod whitening;

pub use channel::{
    channel_to_frequency, frequency_to_channel, ChannelIndex, ChannelMap, ADVERTISING_CHANNELS,
    DATA_CHANNEL_COUNT,
};
pub use connect::{
    parse_write_command, write_command_pdu, ConnectIndPayload, ATT_CID, ATT_WRITE_COMMAND,
    CONNECT_IND_LEN,
};
pub use crc::{crc24, crc24_air_bytes, ADVERTISING_CRC_INIT};
pub use packet::{
    LinkLayerPacket, ParseError, PduType, ADVERTISING_ACCESS_ADDRESS, MAX_PAYLOAD_LEN,
    MIN_FRAME_BITS,
};
pub use whitening::{whiten, whiten_bytes, Whitener};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum LinkError {
    #[error("channel index {0} is out of range 0..=39")]
    InvalidChannel(u8),
    #[error("channel {0} is not a data channel")]
    NotADataChannel(u8),
    #[error("{0} MHz is not a BLE channel center frequency")]
    NotAChannelCenter(u16),
    #[error("a channel map needs at least 2 used channels, got {0}")]
    TooFewChannels(u32),
    #[error("payload of {0} bytes exceeds the 255 byte limit")]
    PayloadTooLong(usize),
    #[error("PDU type {pdu:?} does not match the access address kind")]
    PduKindMismatch { pdu: PduType },
    #[error("header flags {flags:#04x} overlap the PDU type field")]
    InvalidHeaderFlags { flags: u8 },
}
