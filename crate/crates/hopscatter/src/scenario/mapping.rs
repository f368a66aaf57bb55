//! Success rate of every exercised (excitation, target) channel pair.

use hopscatter_core::hop::ExcitationSchedule;
use hopscatter_core::link::ChannelIndex;
use hopscatter_core::tag::{resource_estimate, ClockStateTable, TargetPlan, MEASURED_LUTS};
use rayon::prelude::*;
use serde::Serialize;

use super::{
    edge_config, fmt_rate, ms_to_ns, tag_config, to_csv, to_json, uplink, ScenarioError,
    DEFAULT_FORWARDING_MS,
};
use crate::config::{MappingConfig, Pairs};
use crate::engine::{run_link, LinkSetup, Listener};
use crate::stats::{mean, median, Quartiles};

const UPLINK_BYTES: usize = 15;

/// Success fraction by (excitation, target); the diagonal stays empty.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessMatrix {
    rate: Box<[[Option<f64>; 40]; 40]>,
}

impl Default for SuccessMatrix {
    fn default() -> Self {
        SuccessMatrix {
            rate: Box::new([[None; 40]; 40]),
        }
    }
}

impl SuccessMatrix {
    pub fn get(&self, excitation: ChannelIndex, target: ChannelIndex) -> Option<f64> {
        self.rate[usize::from(excitation.index())][usize::from(target.index())]
    }

    pub fn set(&mut self, excitation: ChannelIndex, target: ChannelIndex, rate: f64) {
        self.rate[usize::from(excitation.index())][usize::from(target.index())] = Some(rate);
    }

    /// Defined cells as (excitation, target, rate), in frequency order.
    pub fn entries(&self) -> impl Iterator<Item = (ChannelIndex, ChannelIndex, f64)> + '_ {
        ChannelIndex::by_frequency().flat_map(move |e| {
            ChannelIndex::by_frequency().filter_map(move |t| self.get(e, t).map(|r| (e, t, r)))
        })
    }

    pub fn row(&self, excitation: ChannelIndex) -> Vec<f64> {
        ChannelIndex::by_frequency()
            .filter_map(|t| self.get(excitation, t))
            .collect()
    }

    pub fn column(&self, target: ChannelIndex) -> Vec<f64> {
        ChannelIndex::by_frequency()
            .filter_map(|e| self.get(e, target))
            .collect()
    }

    /// Rows are excitation channels and columns target channels, both in
    /// frequency order (37, 0..=10, 38, 11..=36, 39).
    pub fn to_csv(&self) -> String {
        let labels: Vec<String> = ChannelIndex::by_frequency()
            .map(|c| c.index().to_string())
            .collect();
        let mut header = vec!["excitation\\target"];
        header.extend(labels.iter().map(String::as_str));
        to_csv(
            &header,
            ChannelIndex::by_frequency().map(|e| {
                std::iter::once(e.index().to_string())
                    .chain(
                        ChannelIndex::by_frequency()
                            .map(move |t| self.get(e, t).map(fmt_rate).unwrap_or_default()),
                    )
                    .collect::<Vec<_>>()
            }),
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BandSummary {
    pub min_mhz: u16,
    pub max_mhz: u16,
    pub cells: usize,
    pub mean: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MappingSummary {
    pub pairs: Pairs,
    pub packets_per_pair: u32,
    pub cells: usize,
    pub median: Option<f64>,
    pub mean: Option<f64>,
    pub neighbor_cells: usize,
    pub neighbor_mean: Option<f64>,
    pub degraded_band: Option<BandSummary>,
    pub excitations: u64,
    pub emissions: u64,
    pub decoded: u64,
}

#[derive(Debug, Clone)]
pub struct MappingReport {
    pub matrix: SuccessMatrix,
    pub summary: MappingSummary,
}

fn shift_mhz(e: ChannelIndex, t: ChannelIndex) -> u16 {
    e.frequency_mhz().abs_diff(t.frequency_mhz())
}

impl MappingReport {
    pub fn neighbor_rates(&self) -> Vec<f64> {
        self.matrix
            .entries()
            .filter(|&(e, t, _)| shift_mhz(e, t) == 2)
            .map(|(.., r)| r)
            .collect()
    }

    pub fn band_rates(&self, min_mhz: u16, max_mhz: u16) -> Vec<f64> {
        self.matrix
            .entries()
            .filter(|&(e, t, _)| (min_mhz..=max_mhz).contains(&shift_mhz(e, t)))
            .map(|(.., r)| r)
            .collect()
    }

    fn quartile_rows(&self) -> Vec<Vec<String>> {
        let mut rows = Vec::new();
        for (axis, pick) in [("excitation", true), ("target", false)] {
            for c in ChannelIndex::by_frequency() {
                let values = if pick {
                    self.matrix.row(c)
                } else {
                    self.matrix.column(c)
                };
                if let Some(q) = Quartiles::of(&values) {
                    rows.push(vec![
                        axis.to_string(),
                        c.index().to_string(),
                        values.len().to_string(),
                        fmt_rate(q.min),
                        fmt_rate(q.q1),
                        fmt_rate(q.median),
                        fmt_rate(q.q3),
                        fmt_rate(q.max),
                    ]);
                }
            }
        }
        rows
    }

    pub fn files(&self) -> Vec<(String, String)> {
        vec![
            ("matrix.csv".into(), self.matrix.to_csv()),
            (
                "quartiles.csv".into(),
                to_csv(
                    &[
                        "axis", "channel", "cells", "min", "q1", "median", "q3", "max",
                    ],
                    self.quartile_rows(),
                ),
            ),
            ("summary.json".into(), to_json(&self.summary)),
            ("clock_states.csv".into(), clock_state_csv()),
            ("resources.csv".into(), resource_csv()),
        ]
    }

    pub fn headline(&self) -> String {
        let s = &self.summary;
        let mut out = format!(
            "{} cells, {} packets each: median success {}, mean {}",
            s.cells,
            s.packets_per_pair,
            s.median.map(fmt_rate).unwrap_or_else(|| "-".into()),
            s.mean.map(fmt_rate).unwrap_or_else(|| "-".into()),
        );
        if let Some(n) = s.neighbor_mean {
            out.push_str(&format!("; +-2 MHz cells mean {}", fmt_rate(n)));
        }
        if let Some(b) = &s.degraded_band {
            if let Some(m) = b.mean {
                out.push_str(&format!(
                    "; {}-{} MHz shifts mean {}",
                    b.min_mhz,
                    b.max_mhz,
                    fmt_rate(m)
                ));
            }
        }
        out
    }
}

/// The 39 clock states as `shift_mhz,mul,div,clk0_divide`.
pub fn clock_state_csv() -> String {
    let table = ClockStateTable::default();
    to_csv(
        &["shift_mhz", "mul", "div", "clk0_divide", "ref_clock_mhz"],
        table.states().iter().map(|s| {
            vec![
                s.output_mhz.to_string(),
                s.mul.to_string(),
                s.div.to_string(),
                s.clk0_divide.to_string(),
                s.ref_clock_mhz.to_string(),
            ]
        }),
    )
}

/// Storage model for 4-clock states next to the prototype's measured LUT
/// usage, which also counts the tag's baseline logic.
pub fn resource_csv() -> String {
    to_csv(
        &[
            "states",
            "clocks_per_state",
            "words",
            "bits",
            "lut_equivalents",
            "measured_luts",
        ],
        MEASURED_LUTS.iter().map(|&(states, measured)| {
            let r = resource_estimate(states, 4).expect("4 clocks is in range");
            vec![
                states.to_string(),
                "4".into(),
                r.words.to_string(),
                r.bits.to_string(),
                r.lut_equivalents.to_string(),
                measured.to_string(),
            ]
        }),
    )
}

fn pairs(cfg: &MappingConfig) -> Vec<(ChannelIndex, ChannelIndex)> {
    let all = || ChannelIndex::by_frequency();
    match (cfg.pairs, cfg.channel) {
        (Pairs::NTo1, Some(t)) => all().filter(|&e| e != t).map(|e| (e, t)).collect(),
        (Pairs::OneToN, Some(e)) => all().filter(|&t| t != e).map(|t| (e, t)).collect(),
        _ => all()
            .flat_map(|e| all().filter(move |&t| t != e).map(move |t| (e, t)))
            .collect(),
    }
}

struct Cell {
    excitation: ChannelIndex,
    target: ChannelIndex,
    excitations: u64,
    emissions: u64,
    decoded: u64,
}

fn run_cell(
    cfg: &MappingConfig,
    seed: u64,
    excitation: ChannelIndex,
    target: ChannelIndex,
) -> Result<Cell, ScenarioError> {
    let interval = ms_to_ns(cfg.interval_ms);
    let setup = LinkSetup {
        edge: edge_config(
            interval,
            ms_to_ns(DEFAULT_FORWARDING_MS),
            ExcitationSchedule::Fixed(excitation),
            cfg.packets_per_pair,
        ),
        tag: tag_config(TargetPlan::Fixed(target), uplink(UPLINK_BYTES)),
        listeners: vec![Listener::Channel(target)],
        ambient: None,
        model: cfg.channel_model.clone(),
        seed,
    };
    let out = run_link(&setup)?;
    Ok(Cell {
        excitation,
        target,
        excitations: out.excitations.len() as u64,
        emissions: u64::from(out.tag.emissions),
        decoded: out.decoded_on(target) as u64,
    })
}

pub fn run(cfg: &MappingConfig, seed: u64) -> Result<MappingReport, ScenarioError> {
    let cells: Vec<Cell> = pairs(cfg)
        .into_par_iter()
        .map(|(e, t)| run_cell(cfg, seed, e, t))
        .collect::<Result<_, _>>()?;

    let mut matrix = SuccessMatrix::default();
    let (mut excitations, mut emissions, mut decoded) = (0, 0, 0);
    for c in &cells {
        matrix.set(
            c.excitation,
            c.target,
            c.decoded as f64 / c.excitations as f64,
        );
        excitations += c.excitations;
        emissions += c.emissions;
        decoded += c.decoded;
    }
    let all: Vec<f64> = matrix.entries().map(|(.., r)| r).collect();
    let mut report = MappingReport {
        matrix,
        summary: MappingSummary {
            pairs: cfg.pairs,
            packets_per_pair: cfg.packets_per_pair,
            cells: all.len(),
            median: median(&all),
            mean: mean(&all),
            neighbor_cells: 0,
            neighbor_mean: None,
            degraded_band: None,
            excitations,
            emissions,
            decoded,
        },
    };
    let neighbors = report.neighbor_rates();
    report.summary.neighbor_cells = neighbors.len();
    report.summary.neighbor_mean = mean(&neighbors);
    report.summary.degraded_band = cfg.channel_model.degraded_shift_band.map(|b| {
        let rates = report.band_rates(b.min_mhz, b.max_mhz);
        BandSummary {
            min_mhz: b.min_mhz,
            max_mhz: b.max_mhz,
            cells: rates.len(),
            mean: mean(&rates),
        }
    });
    Ok(report)
}
