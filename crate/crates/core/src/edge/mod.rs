//! The edge server: downlink framing, latency budget, PER-driven channel-map
//! optimization and the excitation/downlink scheduler.

mod controller;
mod frame;
mod latency;
mod optimize;

pub use controller::{EdgeAction, EdgeConfig, EdgeController, EdgeError};
pub use frame::{
    crc8, Command, ConnInfo, DownlinkFrame, FrameError, FrameKind, LinkParams, FRAME_PREAMBLE,
};
pub use latency::{
    plm_delay_ms, spi_time_us, uart_time_us, DelayBreakdown, LatencyError, LatencyModel,
};
pub use optimize::{scan_and_optimize, OptimizeError, PerProfile};
