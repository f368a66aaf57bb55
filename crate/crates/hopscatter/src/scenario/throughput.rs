//! Throughput when the tag can only use excitations on some channels.
//!
//! The excitor hops over all 37 data channels with CSA#1; a tag that
//! handles `n` of them backscatters only the excitations landing there.

use hopscatter_core::hop::HopState;
use hopscatter_core::link::{ChannelIndex, ChannelMap};
use serde::Serialize;

use super::{to_csv, to_json, ScenarioError};
use crate::config::ThroughputConfig;

const EXCITOR_HOP_INCREMENT: u8 = 7;

#[derive(Debug, Clone, Serialize)]
pub struct ThroughputPoint {
    pub channels_used: u32,
    pub utilized: u32,
    pub utilization: f64,
    pub kbps: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioComparison {
    pub high: u32,
    pub low: u32,
    pub model: Option<f64>,
    pub measured: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThroughputSummary {
    pub interval_us: u64,
    pub payload_bytes: usize,
    pub excitations: u32,
    pub full_kbps: f64,
    pub points: Vec<ThroughputPoint>,
    pub ratios: Vec<RatioComparison>,
}

#[derive(Debug, Clone)]
pub struct ThroughputReport {
    pub summary: ThroughputSummary,
}

impl ThroughputReport {
    pub fn kbps(&self, channels_used: u32) -> Option<f64> {
        self.summary
            .points
            .iter()
            .find(|p| p.channels_used == channels_used)
            .map(|p| p.kbps)
    }

    pub fn files(&self) -> Vec<(String, String)> {
        vec![
            (
                "throughput.csv".into(),
                to_csv(
                    &["channels_used", "utilized", "utilization", "kbps"],
                    self.summary.points.iter().map(|p| {
                        vec![
                            p.channels_used.to_string(),
                            p.utilized.to_string(),
                            format!("{:.4}", p.utilization),
                            format!("{:.3}", p.kbps),
                        ]
                    }),
                ),
            ),
            ("summary.json".into(), to_json(&self.summary)),
        ]
    }

    pub fn headline(&self) -> String {
        let s = &self.summary;
        let mut out = format!("full utilization {:.2} kbps", s.full_kbps);
        for r in &s.ratios {
            if let Some(m) = r.model {
                out.push_str(&format!(
                    "; {} vs {} channels {:.2}x (measured {:.1}x)",
                    r.high, r.low, m, r.measured
                ));
            }
        }
        out
    }
}

pub fn run(cfg: &ThroughputConfig) -> Result<ThroughputReport, ScenarioError> {
    let mut excitor = HopState::csa1(EXCITOR_HOP_INCREMENT, ChannelMap::all())
        .map_err(|e| ScenarioError::Model(e.to_string()))?;
    let sequence: Vec<ChannelIndex> = (0..cfg.excitations)
        .map(|_| excitor.next_channel())
        .collect();
    let bits = (cfg.payload_bytes * 8) as f64;
    let full_kbps = bits * 1e3 / cfg.interval_us as f64;
    let points: Vec<ThroughputPoint> = cfg
        .channels_used
        .iter()
        .map(|&n| {
            let utilized = sequence.iter().filter(|c| u32::from(c.index()) < n).count() as u32;
            let utilization = f64::from(utilized) / f64::from(cfg.excitations);
            ThroughputPoint {
                channels_used: n,
                utilized,
                utilization,
                kbps: full_kbps * utilization,
            }
        })
        .collect();
    let find = |n: u32| points.iter().find(|p| p.channels_used == n).map(|p| p.kbps);
    let ratios = cfg
        .measured_ratios
        .iter()
        .map(|r| RatioComparison {
            high: r.high,
            low: r.low,
            model: match (find(r.high), find(r.low)) {
                (Some(h), Some(l)) if l > 0.0 => Some(h / l),
                _ => None,
            },
            measured: r.measured,
        })
        .collect();
    Ok(ThroughputReport {
        summary: ThroughputSummary {
            interval_us: cfg.interval_us,
            payload_bytes: cfg.payload_bytes,
            excitations: cfg.excitations,
            full_kbps,
            points,
            ratios,
        },
    })
}
