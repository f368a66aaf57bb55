//! Protocol core for edge-assisted BLE backscatter channel hopping.
//!
//! The crate is `no_std` and only needs `alloc`. It contains everything that
//! is pure computation:
//!
//! * [`link`]: BLE link-layer codec (channel plan, whitening, CRC-24,
//!   packet assembly and parsing).
//! * [`hop`]: channel selection algorithms #1 and #2 and excitation schedules.
//! * [`tag`]: the backscatter tag (clock-state table, frequency shifts, phase
//!   modulation, downlink handling with counter self-healing).
//! * [`edge`]: the edge server (downlink framing, latency model, PER based
//!   channel-map optimization, excitation/downlink scheduling).
//!
//! IO, configuration files, simulation and the CLI live in the `hopscatter`
//! crate.
#![no_std]

extern crate alloc;

pub mod bits;
pub mod edge;
pub mod hop;
pub mod link;
pub mod tag;

pub use bits::Bits;
pub use link::{ChannelIndex, ChannelMap};
