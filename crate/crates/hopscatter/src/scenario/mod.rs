//! The six experiment kinds.

pub mod connection;
pub mod hopping;
pub mod latency;
pub mod mapping;
pub mod optimization;
pub mod throughput;

use hopscatter_core::edge::EdgeConfig;
use hopscatter_core::hop::ExcitationSchedule;
use hopscatter_core::tag::{TagConfig, TargetPlan, UplinkTemplate};
use thiserror::Error;

use crate::config::{ConfigError, Scenario, ScenarioConfig};
use crate::engine::SetupError;

pub use connection::ConnectionReport;
pub use hopping::HopReport;
pub use latency::LatencyReport;
pub use mapping::{MappingReport, SuccessMatrix};
pub use optimization::OptimizationReport;
pub use throughput::ThroughputReport;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Setup(#[from] SetupError),
    #[error("{0}")]
    Model(String),
}

/// Address the simulated tag advertises and connects with.
pub const TAG_ADDRESS: [u8; 6] = [0x5a, 0x3c, 0x00, 0x7e, 0xc0, 0xc0];

/// Forwarding delay of the MCU edge for a 20-byte frame.
pub(crate) const DEFAULT_FORWARDING_MS: f64 = 5.8;

pub(crate) fn ms_to_ns(ms: f64) -> u64 {
    (ms * 1e6).round() as u64
}

/// ADV_NONCONN_IND with a flags AD structure and filler manufacturer data,
/// `payload_bytes` long including the advertiser address.
pub(crate) fn uplink(payload_bytes: usize) -> UplinkTemplate {
    let mut data = vec![0x02, 0x01, 0x06];
    let rest = payload_bytes.saturating_sub(6 + data.len());
    if rest >= 2 {
        data.push((rest - 1) as u8);
        data.push(0xff);
        data.extend((0..rest - 2).map(|i| i as u8));
    }
    data.truncate(payload_bytes.saturating_sub(6));
    UplinkTemplate::advertisement(TAG_ADDRESS, &data)
}

pub(crate) fn edge_config(
    interval_ns: u64,
    forwarding_delay_ns: u64,
    schedule: ExcitationSchedule,
    excitations: u32,
) -> EdgeConfig {
    EdgeConfig {
        start_ns: 0,
        excitation_interval_ns: interval_ns,
        forwarding_delay_ns,
        schedule,
        refresh_every: 1,
        announce_schedule: true,
        excitations: Some(excitations),
    }
}

/// A tag that learns the excitation schedule from the edge.
pub(crate) fn tag_config(target: TargetPlan, uplink: UplinkTemplate) -> TagConfig {
    TagConfig {
        address: TAG_ADDRESS,
        uplink,
        target,
        excitation: ExcitationSchedule::Unknown,
        write_value: Vec::new(),
    }
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Mapping(MappingReport),
    HopAlgorithm(HopReport),
    Optimization(OptimizationReport),
    Latency(LatencyReport),
    Throughput(ThroughputReport),
    Connection(ConnectionReport),
}

impl Outcome {
    /// Output files as (suffix, contents); the caller prefixes the name.
    pub fn files(&self) -> Vec<(String, String)> {
        match self {
            Outcome::Mapping(r) => r.files(),
            Outcome::HopAlgorithm(r) => r.files(),
            Outcome::Optimization(r) => r.files(),
            Outcome::Latency(r) => r.files(),
            Outcome::Throughput(r) => r.files(),
            Outcome::Connection(r) => r.files(),
        }
    }

    /// One-paragraph human readable summary.
    pub fn headline(&self) -> String {
        match self {
            Outcome::Mapping(r) => r.headline(),
            Outcome::HopAlgorithm(r) => r.headline(),
            Outcome::Optimization(r) => r.headline(),
            Outcome::Latency(r) => r.headline(),
            Outcome::Throughput(r) => r.headline(),
            Outcome::Connection(r) => r.headline(),
        }
    }
}

pub fn run(cfg: &ScenarioConfig) -> Result<Outcome, ScenarioError> {
    cfg.validate()?;
    Ok(match &cfg.scenario {
        Scenario::Mapping(m) => Outcome::Mapping(mapping::run(m, cfg.seed)?),
        Scenario::HopAlgorithm(h) => Outcome::HopAlgorithm(hopping::run(h, cfg.seed)?),
        Scenario::Optimization(o) => Outcome::Optimization(optimization::run(o, cfg.seed)?),
        Scenario::Latency(l) => Outcome::Latency(latency::run(l)?),
        Scenario::Throughput(t) => Outcome::Throughput(throughput::run(t)?),
        Scenario::Connection(c) => Outcome::Connection(connection::run(c, cfg.seed)?),
    })
}

pub(crate) fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub(crate) fn to_csv<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

pub(crate) fn fmt_rate(x: f64) -> String {
    format!("{x:.4}")
}
