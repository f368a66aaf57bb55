//! Downlink forwarding delay, the packet-length-modulation baseline and how
//! the delay fits excitation intervals.

use hopscatter_core::edge::{plm_delay_ms, DelayBreakdown};
use hopscatter_core::hop::ExcitationSchedule;
use hopscatter_core::link::{ChannelIndex, ADVERTISING_CHANNELS};
use hopscatter_core::tag::TargetPlan;
use serde::Serialize;

use super::{edge_config, tag_config, to_csv, to_json, uplink, ScenarioError};
use crate::config::LatencyConfig;
use crate::engine::{run_link, LinkSetup, Listener};
use crate::model::ChannelModelConfig;

/// Excitations simulated per interval check.
const INTERVAL_CHECK_EXCITATIONS: u32 = 60;
const CHECK_TARGET: u8 = 17;

#[derive(Debug, Clone, Serialize)]
pub struct IntervalCheck {
    pub interval_ms: f64,
    /// Time between a frame reaching the tag and its excitation; negative
    /// when the frame is late.
    pub lead_ms: f64,
    pub frame_in_time: bool,
    pub excitations: u32,
    pub on_target: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct LatencySummary {
    pub payload_bytes: usize,
    pub breakdown: DelayBreakdown,
    pub total_us: f64,
    pub plm_ms: f64,
    /// PLM delay over the forwarding delay.
    pub ratio: f64,
    pub intervals: Vec<IntervalCheck>,
}

#[derive(Debug, Clone)]
pub struct LatencyReport {
    pub summary: LatencySummary,
}

impl LatencyReport {
    pub fn files(&self) -> Vec<(String, String)> {
        let s = &self.summary;
        let mut rows: Vec<Vec<String>> = s
            .breakdown
            .components()
            .iter()
            .map(|(name, us)| vec![name.to_string(), format!("{us:.3}")])
            .collect();
        rows.push(vec!["total".into(), format!("{:.3}", s.total_us)]);
        vec![
            ("breakdown.csv".into(), to_csv(&["component", "us"], rows)),
            (
                "intervals.csv".into(),
                to_csv(
                    &[
                        "interval_ms",
                        "lead_ms",
                        "frame_in_time",
                        "excitations",
                        "on_target",
                    ],
                    s.intervals.iter().map(|i| {
                        vec![
                            i.interval_ms.to_string(),
                            format!("{:.3}", i.lead_ms),
                            i.frame_in_time.to_string(),
                            i.excitations.to_string(),
                            i.on_target.to_string(),
                        ]
                    }),
                ),
            ),
            ("summary.json".into(), to_json(s)),
        ]
    }

    pub fn headline(&self) -> String {
        let s = &self.summary;
        format!(
            "{} byte command: forwarding {:.1} us, PLM {:.0} ms, {:.0}x lower",
            s.payload_bytes, s.total_us, s.plm_ms, s.ratio
        )
    }
}

/// Excites round robin on the advertising channels with a fixed target, so
/// a tag that loses the count would land off target.
fn check_interval(interval_ms: f64, delay_us: f64) -> Result<IntervalCheck, ScenarioError> {
    let interval_ns = (interval_ms * 1e6).round() as u64;
    let delay_ns = (delay_us * 1e3).round() as u64;
    let target = ChannelIndex::new(CHECK_TARGET).expect("data channel");
    let setup = LinkSetup {
        edge: edge_config(
            interval_ns,
            delay_ns,
            ExcitationSchedule::Cycle(ADVERTISING_CHANNELS.to_vec()),
            INTERVAL_CHECK_EXCITATIONS,
        ),
        tag: tag_config(TargetPlan::Fixed(target), uplink(15)),
        listeners: vec![Listener::Channel(target)],
        ambient: None,
        model: ChannelModelConfig::lossless(),
        seed: 0,
    };
    let out = run_link(&setup)?;
    let lead_ms = interval_ms - delay_us / 1e3;
    Ok(IntervalCheck {
        interval_ms,
        lead_ms,
        frame_in_time: lead_ms >= 0.0,
        excitations: out.excitations.len() as u32,
        on_target: out.excitations.iter().filter(|x| x.on_target()).count() as u32,
    })
}

pub fn run(cfg: &LatencyConfig) -> Result<LatencyReport, ScenarioError> {
    let model_err = |e: hopscatter_core::edge::LatencyError| ScenarioError::Model(e.to_string());
    let breakdown = cfg
        .profile
        .model()
        .forwarding_delay(cfg.payload_bytes)
        .map_err(model_err)?;
    let total_us = breakdown.total_us();
    let plm_ms = plm_delay_ms(
        cfg.payload_bytes,
        cfg.plm.packet_interval_ms,
        cfg.plm.symbol_bits,
    )
    .map_err(model_err)?;
    let intervals = cfg
        .excitation_intervals_ms
        .iter()
        .map(|&i| check_interval(i, total_us))
        .collect::<Result<_, _>>()?;
    Ok(LatencyReport {
        summary: LatencySummary {
            payload_bytes: cfg.payload_bytes,
            breakdown,
            total_us,
            plm_ms,
            ratio: if total_us > 0.0 {
                plm_ms * 1e3 / total_us
            } else {
                f64::INFINITY
            },
            intervals,
        },
    })
}
