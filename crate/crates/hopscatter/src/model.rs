//! Packet loss model for backscattered packets and the downlink.

use std::collections::BTreeMap;

use hopscatter_core::link::ChannelIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("{what} = {value} is not a probability")]
    NotAProbability { what: String, value: f64 },
    #[error("channel {0} in per_channel is out of range 0..=39")]
    BadChannel(u8),
    #[error("degraded band {min}..={max} MHz is empty")]
    EmptyBand { min: u16, max: u16 },
}

/// Extra loss for shifts within `min_mhz..=max_mhz`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftBand {
    pub min_mhz: u16,
    pub max_mhz: u16,
    pub per: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelModelConfig {
    /// Loss probability on every target channel without an override.
    pub base_per: f64,
    /// Loss probability by target channel index.
    #[serde(deserialize_with = "channel_keyed")]
    pub per_channel: BTreeMap<u8, f64>,
    /// ±2 MHz shifts never decode.
    pub neighbor_2mhz_fail: bool,
    pub degraded_shift_band: Option<ShiftBand>,
    /// Loss probability of each per-excitation downlink frame.
    pub downlink_loss: f64,
}

/// A map keyed by channel number. JSON object keys are strings, and serde
/// cannot coerce them to integers inside an internally tagged enum.
pub(crate) fn channel_keyed<'de, D>(d: D) -> Result<BTreeMap<u8, f64>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    use serde::de::Error;
    BTreeMap::<String, f64>::deserialize(d)?
        .into_iter()
        .map(|(k, v)| {
            k.trim()
                .parse::<u8>()
                .map(|k| (k, v))
                .map_err(|_| D::Error::custom(format!("channel key {k:?} is not a number 0..=255")))
        })
        .collect()
}

fn check_probability(what: impl Into<String>, value: f64) -> Result<(), ModelError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ModelError::NotAProbability {
            what: what.into(),
            value,
        })
    }
}

impl ChannelModelConfig {
    pub fn lossless() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        check_probability("base_per", self.base_per)?;
        check_probability("downlink_loss", self.downlink_loss)?;
        for (&ch, &p) in &self.per_channel {
            if ch > 39 {
                return Err(ModelError::BadChannel(ch));
            }
            check_probability(format!("per_channel[{ch}]"), p)?;
        }
        if let Some(band) = self.degraded_shift_band {
            if band.min_mhz > band.max_mhz {
                return Err(ModelError::EmptyBand {
                    min: band.min_mhz,
                    max: band.max_mhz,
                });
            }
            check_probability("degraded_shift_band.per", band.per)?;
        }
        Ok(())
    }

    pub fn target_per(&self, target: ChannelIndex) -> f64 {
        self.per_channel
            .get(&target.index())
            .copied()
            .unwrap_or(self.base_per)
    }

    /// Loss probability of a packet shifted from `excitation` onto `target`.
    pub fn loss_probability(&self, excitation: ChannelIndex, target: ChannelIndex) -> f64 {
        let shift = excitation.frequency_mhz().abs_diff(target.frequency_mhz());
        if self.neighbor_2mhz_fail && shift == 2 {
            return 1.0;
        }
        let band = match self.degraded_shift_band {
            Some(b) if (b.min_mhz..=b.max_mhz).contains(&shift) => b.per,
            _ => 0.0,
        };
        1.0 - (1.0 - self.target_per(target)) * (1.0 - band)
    }
}

const DOWNLINK_STREAM: u64 = 40 * 40;

/// Independent random streams: one per (excitation, target) channel pair and
/// one for the downlink, all derived from a single seed.
#[derive(Debug, Clone)]
pub struct LossStreams {
    seed: u64,
    pairs: BTreeMap<(u8, u8), ChaCha8Rng>,
    downlink: ChaCha8Rng,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

impl LossStreams {
    pub fn new(seed: u64) -> Self {
        LossStreams {
            seed,
            pairs: BTreeMap::new(),
            downlink: stream(seed, DOWNLINK_STREAM),
        }
    }

    /// Draws whether a packet from `excitation` to `target` is lost.
    pub fn uplink_lost(&mut self, excitation: ChannelIndex, target: ChannelIndex, p: f64) -> bool {
        let seed = self.seed;
        let rng = self
            .pairs
            .entry((excitation.index(), target.index()))
            .or_insert_with(|| {
                stream(
                    seed,
                    u64::from(excitation.index()) * 40 + u64::from(target.index()),
                )
            });
        rng.random::<f64>() < p
    }

    pub fn downlink_lost(&mut self, p: f64) -> bool {
        self.downlink.random::<f64>() < p
    }
}
