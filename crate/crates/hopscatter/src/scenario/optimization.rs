//! Goodput per target channel before and after dropping channels whose
//! scanned PER is above the median.

use hopscatter_core::edge::{scan_and_optimize, PerProfile};
use hopscatter_core::hop::{ExcitationSchedule, HopState};
use hopscatter_core::link::{ChannelIndex, ChannelMap};
use hopscatter_core::tag::TargetPlan;
use serde::Serialize;

use super::{
    edge_config, fmt_rate, ms_to_ns, tag_config, to_csv, to_json, uplink, ScenarioError,
    DEFAULT_FORWARDING_MS,
};
use crate::config::OptimizationConfig;
use crate::engine::{run_link, LinkSetup, Listener};
use crate::model::ChannelModelConfig;
use crate::stats::{mean, quantile};

#[derive(Debug, Clone, Serialize)]
pub struct ChannelGoodput {
    pub channel: u8,
    pub per: f64,
    pub kept: bool,
    pub targeted: u32,
    pub decoded: u32,
    /// Delivered payload bits per second while hopping onto this channel.
    pub kbps: f64,
}

/// One simulated pass over a channel map.
#[derive(Debug, Clone, Serialize)]
pub struct GoodputRun {
    pub channels: Vec<ChannelGoodput>,
    pub quantile_kbps: f64,
    pub mean_kbps: f64,
    /// Payload bits delivered over the whole run per second.
    pub aggregate_kbps: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizationSummary {
    pub quantile: f64,
    pub interval_ms: f64,
    pub payload_bytes: usize,
    pub max_kbps: f64,
    pub median_per: f64,
    pub excluded: Vec<u8>,
    pub kept: Vec<u8>,
    pub before_quantile_kbps: f64,
    pub after_quantile_kbps: f64,
    /// After over before bottom-quantile goodput; absent if the baseline
    /// quantile is zero.
    pub gain: Option<f64>,
    pub delivered_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizationReport {
    pub before: GoodputRun,
    pub after: GoodputRun,
    pub summary: OptimizationSummary,
}

impl OptimizationReport {
    /// True when the excluded channels are exactly those with PER above the
    /// median of the profile, guard case aside.
    pub fn excluded_above_median(&self) -> bool {
        let m = self.summary.median_per;
        let above: Vec<u8> = self
            .before
            .channels
            .iter()
            .filter(|c| c.per > m)
            .map(|c| c.channel)
            .collect();
        above == self.summary.excluded
    }

    pub fn files(&self) -> Vec<(String, String)> {
        let rows = |stage: &'static str, run: &GoodputRun| {
            run.channels
                .iter()
                .map(move |c| {
                    vec![
                        stage.to_string(),
                        c.channel.to_string(),
                        fmt_rate(c.per),
                        c.kept.to_string(),
                        c.targeted.to_string(),
                        c.decoded.to_string(),
                        format!("{:.3}", c.kbps),
                    ]
                })
                .collect::<Vec<_>>()
        };
        let mut all = rows("before", &self.before);
        all.extend(rows("after", &self.after));
        vec![
            (
                "goodput.csv".into(),
                to_csv(
                    &[
                        "stage", "channel", "per", "kept", "targeted", "decoded", "kbps",
                    ],
                    all,
                ),
            ),
            ("summary.json".into(), to_json(&self.summary)),
        ]
    }

    pub fn headline(&self) -> String {
        let s = &self.summary;
        format!(
            "kept {}/{} channels; bottom {:.0}% goodput {:.3} -> {:.3} kbps, gain {}",
            s.kept.len(),
            s.kept.len() + s.excluded.len(),
            s.quantile * 100.0,
            s.before_quantile_kbps,
            s.after_quantile_kbps,
            s.gain
                .map(|g| format!("{g:.2}x"))
                .unwrap_or_else(|| "undefined".into()),
        )
    }
}

fn simulate(
    cfg: &OptimizationConfig,
    map: ChannelMap,
    seed: u64,
) -> Result<GoodputRun, ScenarioError> {
    let state =
        HopState::csa1(cfg.hop_increment, map).map_err(|e| ScenarioError::Model(e.to_string()))?;
    let hops = cfg.packets_per_channel * map.len();
    let model = ChannelModelConfig {
        per_channel: cfg.per_profile.clone(),
        ..ChannelModelConfig::lossless()
    };
    let interval_ns = ms_to_ns(cfg.interval_ms);
    let setup = LinkSetup {
        edge: edge_config(
            interval_ns,
            ms_to_ns(DEFAULT_FORWARDING_MS),
            ExcitationSchedule::Fixed(cfg.excitation_channel),
            hops,
        ),
        tag: tag_config(TargetPlan::Hopping(state), uplink(cfg.payload_bytes)),
        listeners: map.iter().map(Listener::Channel).collect(),
        ambient: None,
        model,
        seed,
    };
    let out = run_link(&setup)?;
    let bits = (cfg.payload_bytes * 8) as f64;
    let max_kbps = bits / cfg.interval_ms;
    let channels: Vec<ChannelGoodput> = map
        .iter()
        .map(|c| {
            let targeted = out
                .excitations
                .iter()
                .filter(|x| x.target == Some(c))
                .count() as u32;
            let decoded = out.decoded_on(c) as u32;
            ChannelGoodput {
                channel: c.index(),
                per: cfg.per_profile.get(&c.index()).copied().unwrap_or(0.0),
                kept: true,
                targeted,
                decoded,
                kbps: if targeted == 0 {
                    0.0
                } else {
                    max_kbps * f64::from(decoded) / f64::from(targeted)
                },
            }
        })
        .collect();
    let rates: Vec<f64> = channels.iter().map(|c| c.kbps).collect();
    let delivered: u32 = channels.iter().map(|c| c.decoded).sum();
    let elapsed_ms = cfg.interval_ms * f64::from(hops);
    Ok(GoodputRun {
        quantile_kbps: quantile(&rates, cfg.quantile).unwrap_or(0.0),
        mean_kbps: mean(&rates).unwrap_or(0.0),
        aggregate_kbps: bits * f64::from(delivered) / elapsed_ms,
        channels,
    })
}

pub fn run(cfg: &OptimizationConfig, seed: u64) -> Result<OptimizationReport, ScenarioError> {
    let model_err = |e: &dyn std::fmt::Display| ScenarioError::Model(e.to_string());
    let profile = PerProfile::new(
        cfg.per_profile
            .iter()
            .map(|(&c, &p)| ChannelIndex::new(c).map(|c| (c, p)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| model_err(&e))?,
    )
    .map_err(|e| model_err(&e))?;
    let full =
        ChannelMap::from_channels(cfg.per_profile.keys().copied()).map_err(|e| model_err(&e))?;
    let kept = scan_and_optimize(&profile).map_err(|e| model_err(&e))?;

    let mut before = simulate(cfg, full, seed)?;
    let after = if kept == full {
        before.clone()
    } else {
        simulate(cfg, kept, seed)?
    };
    for c in &mut before.channels {
        c.kept = kept.contains(ChannelIndex::new(c.channel).expect("from a map"));
    }

    let excluded: Vec<u8> = full
        .iter()
        .filter(|&c| !kept.contains(c))
        .map(|c| c.index())
        .collect();
    let gain = (before.quantile_kbps > 0.0).then(|| after.quantile_kbps / before.quantile_kbps);
    let summary = OptimizationSummary {
        quantile: cfg.quantile,
        interval_ms: cfg.interval_ms,
        payload_bytes: cfg.payload_bytes,
        max_kbps: (cfg.payload_bytes * 8) as f64 / cfg.interval_ms,
        median_per: profile.median().unwrap_or(0.0),
        excluded,
        kept: kept.iter().map(|c| c.index()).collect(),
        before_quantile_kbps: before.quantile_kbps,
        after_quantile_kbps: after.quantile_kbps,
        gain,
        delivered_ratio: if before.aggregate_kbps > 0.0 {
            after.aggregate_kbps / before.aggregate_kbps
        } else {
            0.0
        },
    };
    Ok(OptimizationReport {
        before,
        after,
        summary,
    })
}
