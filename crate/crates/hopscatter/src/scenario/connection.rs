//! The tag answers an ambient advertiser with a CONNECT_IND and then sends
//! a write on every connection event, checked against the hop oracle.

use std::fmt::Write as _;

use hopscatter_core::edge::{EdgeController, LinkParams};
use hopscatter_core::hop::{ExcitationSchedule, HopState};
use hopscatter_core::link::{ChannelIndex, PduType};
use hopscatter_core::tag::TargetPlan;
use serde::Serialize;

use super::{edge_config, ms_to_ns, tag_config, to_csv, to_json, uplink, ScenarioError};
use crate::config::{parse_address, parse_hex_bytes, ConnectionConfig};
use crate::engine::{run_link, AmbientAdvertiser, DecodeOutcome, LinkOutcome, LinkSetup, Listener};

const DEFAULT_WRITE_VALUE: [u8; 1] = [0x01];

#[derive(Debug, Clone, Serialize)]
pub struct ConnectionEvent {
    pub event: u32,
    pub time_ms: f64,
    pub expected: u8,
    pub emitted: Option<u8>,
    pub decoded: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConnectionSummary {
    pub adv_channel: u8,
    pub used_channels: Vec<u8>,
    pub hop_increment: u8,
    pub connect_ind_sent: bool,
    pub connect_ind_decoded: bool,
    pub events_requested: u32,
    pub events: u32,
    pub events_decoded: u32,
    /// Every event was emitted on the channel the hop oracle gives.
    pub follows_oracle: bool,
    pub channels_seen: Vec<u8>,
    /// Share of consecutive events that change channel.
    pub switch_fraction: Option<f64>,
    pub off_channel_emissions: u32,
    pub downlink_sent: u32,
    pub downlink_lost: u32,
    pub self_increments: u32,
}

#[derive(Debug, Clone)]
pub struct ConnectionReport {
    pub events: Vec<ConnectionEvent>,
    pub trace: String,
    pub summary: ConnectionSummary,
}

impl ConnectionReport {
    pub fn files(&self) -> Vec<(String, String)> {
        vec![
            ("trace.log".into(), self.trace.clone()),
            (
                "events.csv".into(),
                to_csv(
                    &["event", "time_ms", "expected", "emitted", "decoded"],
                    self.events.iter().map(|e| {
                        vec![
                            e.event.to_string(),
                            format!("{:.3}", e.time_ms),
                            e.expected.to_string(),
                            e.emitted.map(|c| c.to_string()).unwrap_or_default(),
                            e.decoded.to_string(),
                        ]
                    }),
                ),
            ),
            ("summary.json".into(), to_json(&self.summary)),
        ]
    }

    pub fn headline(&self) -> String {
        let s = &self.summary;
        format!(
            "{} of {} events on the oracle channel, {} decoded, channels {:?}, {} off-channel emissions",
            self.events.iter().filter(|e| e.emitted == Some(e.expected)).count(),
            s.events,
            s.events_decoded,
            s.channels_seen,
            s.off_channel_emissions,
        )
    }
}

/// Sniffer-style log: one line per packet seen by a receiver, up to
/// connection event `events`.
fn trace(out: &LinkOutcome, events: u32) -> String {
    let mut log = String::new();
    for d in out
        .decodes
        .iter()
        .filter(|d| d.event.is_none_or(|e| e < events))
    {
        let status = match &d.outcome {
            DecodeOutcome::Decoded { .. } => "OK".to_string(),
            DecodeOutcome::Lost => "LOST".to_string(),
            DecodeOutcome::Failed(e) => format!("ERR {e}"),
        };
        let pdu = match (&d.outcome, d.counter) {
            (DecodeOutcome::Decoded { pdu_type, .. }, _) => pdu_type.name(),
            _ => "-",
        };
        let _ = write!(
            log,
            "{:>12.3} ms  ch{:<2}  {:<16} {:<4}",
            d.time_ns as f64 / 1e6,
            d.channel.index(),
            pdu,
            status
        );
        match d.listener {
            None => log.push_str("  ambient"),
            Some(_) => {
                if let Some(c) = d.counter {
                    let _ = write!(log, "  tag#{c}");
                }
                if let Some(e) = d.excitation {
                    let _ = write!(log, " exc ch{}", e.index());
                }
            }
        }
        if let Some(e) = d.event {
            let _ = write!(log, "  event {e}");
        }
        if let DecodeOutcome::Decoded { payload, .. } = &d.outcome {
            log.push_str("  ");
            for b in payload {
                let _ = write!(log, "{b:02x}");
            }
        }
        log.push('\n');
    }
    log
}

pub fn run(cfg: &ConnectionConfig, seed: u64) -> Result<ConnectionReport, ScenarioError> {
    let address = parse_address(&cfg.advertiser_address)?;
    let write_value = match &cfg.write_value {
        Some(v) => parse_hex_bytes(v)?,
        None => DEFAULT_WRITE_VALUE.to_vec(),
    };
    let interval_ns = u64::from(cfg.interval_units) * 1_250_000;
    let delay_ns = ms_to_ns(cfg.forwarding_delay_ms);
    let advert_ns = ms_to_ns(cfg.advert_at_ms);
    let schedule = ExcitationSchedule::Cycle(cfg.excitation.clone());

    // Excitations spent before the first connection event: the warmup, the
    // wait for the advertisement and its forwarding, and the CONNECT_IND.
    let probe = EdgeController::new(edge_config(interval_ns, delay_ns, schedule.clone(), 1))
        .map_err(crate::engine::SetupError::from)?;
    let lead = probe.warmup_intervals() + (advert_ns + delay_ns).div_ceil(interval_ns) + 2;
    let excitations = cfg.events + u32::try_from(lead).unwrap_or(u32::MAX);

    let mut tag = tag_config(TargetPlan::Idle, uplink(15));
    tag.write_value = write_value;
    let setup = LinkSetup {
        edge: edge_config(interval_ns, delay_ns, schedule, excitations),
        tag,
        listeners: vec![Listener::Follower(cfg.adv_channel)],
        ambient: Some(AmbientAdvertiser {
            at_ns: advert_ns,
            address,
            params: LinkParams {
                advertiser_address: [0; 6],
                adv_channel: cfg.adv_channel,
                access_address: cfg.access_address.0,
                crc_init: cfg.crc_init.0,
                interval_units: cfg.interval_units,
                hop_increment: cfg.hop_increment,
                channel_map: cfg.used_channels,
            },
        }),
        model: cfg.channel_model.clone(),
        seed,
    };
    let out = run_link(&setup)?;

    let mut oracle = HopState::csa1(cfg.hop_increment, cfg.used_channels)
        .map_err(|e| ScenarioError::Model(e.to_string()))?;
    let connect_at = out
        .excitations
        .iter()
        .position(|x| x.pdu_type == Some(PduType::ConnectInd));
    let events: Vec<ConnectionEvent> = match connect_at {
        None => Vec::new(),
        Some(i) => out.excitations[i + 1..]
            .iter()
            .take(cfg.events as usize)
            .enumerate()
            .map(|(n, x)| {
                let n = n as u32;
                let decoded = out.decodes.iter().any(|d| {
                    d.event == Some(n)
                        && matches!(
                            d.outcome,
                            DecodeOutcome::Decoded {
                                pdu_type: PduType::DataStart,
                                ..
                            }
                        )
                });
                ConnectionEvent {
                    event: n,
                    time_ms: x.time_ns as f64 / 1e6,
                    expected: oracle.next_channel().index(),
                    emitted: x.emitted.map(ChannelIndex::index),
                    decoded,
                }
            })
            .collect(),
    };

    let mut channels_seen: Vec<u8> = events.iter().filter_map(|e| e.emitted).collect();
    channels_seen.sort_unstable();
    channels_seen.dedup();
    let switch_fraction = (events.len() >= 2).then(|| {
        let switches = events
            .windows(2)
            .filter(|w| w[0].emitted != w[1].emitted)
            .count();
        switches as f64 / (events.len() - 1) as f64
    });
    let connect_ind_decoded = out.decodes.iter().any(|d| {
        d.listener.is_some()
            && matches!(
                d.outcome,
                DecodeOutcome::Decoded {
                    pdu_type: PduType::ConnectInd,
                    ..
                }
            )
    });
    let summary = ConnectionSummary {
        adv_channel: cfg.adv_channel.index(),
        used_channels: cfg.used_channels.iter().map(ChannelIndex::index).collect(),
        hop_increment: cfg.hop_increment,
        connect_ind_sent: connect_at.is_some(),
        connect_ind_decoded,
        events_requested: cfg.events,
        events: events.len() as u32,
        events_decoded: events.iter().filter(|e| e.decoded).count() as u32,
        follows_oracle: events.len() == cfg.events as usize
            && events.iter().all(|e| e.emitted == Some(e.expected)),
        channels_seen,
        switch_fraction,
        off_channel_emissions: out.tag.off_target,
        downlink_sent: out.downlink_sent,
        downlink_lost: out.downlink_lost,
        self_increments: out.tag.self_increments,
    };
    Ok(ConnectionReport {
        trace: trace(&out, cfg.events),
        events,
        summary,
    })
}
