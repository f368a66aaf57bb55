//! A tag following CSA#1 or CSA#2 target channels, counted by receivers on
//! every used channel.

use hopscatter_core::hop::{
    hop_histogram, ChannelCounts, ExcitationSchedule, HopAlgorithm, HopState,
};
use hopscatter_core::link::ChannelIndex;
use hopscatter_core::tag::TargetPlan;
use serde::Serialize;

use super::{edge_config, fmt_rate, ms_to_ns, tag_config, to_csv, to_json, uplink, ScenarioError};
use crate::config::HopConfig;
use crate::engine::{run_link, LinkSetup, Listener};

const UPLINK_BYTES: usize = 15;

#[derive(Debug, Clone, Serialize)]
pub struct ChannelResult {
    pub channel: u8,
    pub expected: u32,
    pub observed: u32,
    pub success: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HopSummary {
    pub algorithm: HopAlgorithm,
    pub hops: u32,
    pub used_channels: Vec<u8>,
    pub expected_total: u32,
    pub observed_total: u32,
    pub aggregate_success: f64,
    pub min_channel_success: Option<f64>,
    pub off_target_emissions: u32,
    pub downlink_lost: u32,
}

#[derive(Debug, Clone)]
pub struct HopReport {
    pub channels: Vec<ChannelResult>,
    pub summary: HopSummary,
}

impl HopReport {
    pub fn observed_equals_expected(&self) -> bool {
        self.channels.iter().all(|c| c.expected == c.observed)
    }

    pub fn files(&self) -> Vec<(String, String)> {
        vec![
            (
                "histogram.csv".into(),
                to_csv(
                    &["channel", "expected", "observed", "success"],
                    self.channels.iter().map(|c| {
                        vec![
                            c.channel.to_string(),
                            c.expected.to_string(),
                            c.observed.to_string(),
                            c.success.map(fmt_rate).unwrap_or_default(),
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
            "{:?}, {} hops: {}/{} packets received (aggregate {}), worst channel {}",
            s.algorithm,
            s.hops,
            s.observed_total,
            s.expected_total,
            fmt_rate(s.aggregate_success),
            s.min_channel_success
                .map(fmt_rate)
                .unwrap_or_else(|| "-".into()),
        )
    }
}

pub fn hop_state(cfg: &HopConfig) -> Result<HopState, ScenarioError> {
    match cfg.algorithm {
        HopAlgorithm::Csa1 => HopState::csa1(cfg.hop_increment, cfg.used_channels)
            .map_err(|e| ScenarioError::Model(e.to_string())),
        HopAlgorithm::Csa2 => Ok(HopState::csa2(
            cfg.access_address.map(|a| a.0).unwrap_or_default(),
            0,
            cfg.used_channels,
        )),
    }
}

/// Expected per-channel counts straight from the selection algorithm.
pub fn expected(cfg: &HopConfig) -> Result<ChannelCounts, ScenarioError> {
    Ok(hop_histogram(&hop_state(cfg)?, cfg.hops))
}

pub fn run(cfg: &HopConfig, seed: u64) -> Result<HopReport, ScenarioError> {
    let state = hop_state(cfg)?;
    let expected = hop_histogram(&state, cfg.hops);
    let used: Vec<ChannelIndex> = cfg.used_channels.iter().collect();
    let setup = LinkSetup {
        edge: edge_config(
            ms_to_ns(cfg.interval_ms),
            ms_to_ns(cfg.forwarding_delay_ms),
            ExcitationSchedule::Fixed(cfg.excitation_channel),
            cfg.hops,
        ),
        tag: tag_config(TargetPlan::Hopping(state), uplink(UPLINK_BYTES)),
        listeners: used.iter().map(|&c| Listener::Channel(c)).collect(),
        ambient: None,
        model: cfg.channel_model.clone(),
        seed,
    };
    let out = run_link(&setup)?;

    let channels: Vec<ChannelResult> = used
        .iter()
        .map(|&c| {
            let exp = expected.get(c);
            let obs = out.decoded_on(c) as u32;
            ChannelResult {
                channel: c.index(),
                expected: exp,
                observed: obs,
                success: (exp > 0).then(|| f64::from(obs) / f64::from(exp)),
            }
        })
        .collect();
    let expected_total: u32 = channels.iter().map(|c| c.expected).sum();
    let observed_total: u32 = channels.iter().map(|c| c.observed).sum();
    let min_channel_success = channels
        .iter()
        .filter_map(|c| c.success)
        .min_by(f64::total_cmp);
    Ok(HopReport {
        summary: HopSummary {
            algorithm: cfg.algorithm,
            hops: cfg.hops,
            used_channels: used.iter().map(|c| c.index()).collect(),
            expected_total,
            observed_total,
            aggregate_success: f64::from(observed_total) / f64::from(expected_total.max(1)),
            min_channel_success,
            off_target_emissions: out.tag.off_target,
            downlink_lost: out.downlink_lost,
        },
        channels,
    })
}
