//! Scenario configuration files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hopscatter_core::edge::LatencyModel;
use hopscatter_core::hop::HopAlgorithm;
use hopscatter_core::link::{ChannelIndex, ChannelMap};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ChannelModelConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parsing {path}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

/// A 32-bit value written either as a JSON number or a hex string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "HexOrNumber", into = "String")]
pub struct Hex32(pub u32);

#[derive(Deserialize)]
#[serde(untagged)]
enum HexOrNumber {
    Number(u32),
    Text(String),
}

impl TryFrom<HexOrNumber> for Hex32 {
    type Error = String;

    fn try_from(v: HexOrNumber) -> Result<Self, String> {
        match v {
            HexOrNumber::Number(n) => Ok(Hex32(n)),
            HexOrNumber::Text(s) => {
                let digits = s.trim_start_matches("0x").trim_start_matches("0X");
                u32::from_str_radix(digits, 16)
                    .map(Hex32)
                    .map_err(|e| format!("bad hex value {s:?}: {e}"))
            }
        }
    }
}

impl From<Hex32> for String {
    fn from(v: Hex32) -> String {
        format!("0x{:08x}", v.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairs {
    /// Every excitation channel onto every other channel.
    NToN,
    /// Every excitation channel onto `channel`.
    NTo1,
    /// Excitation on `channel` onto every other channel.
    #[serde(rename = "1_to_n")]
    OneToN,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingConfig {
    pub pairs: Pairs,
    #[serde(default)]
    pub channel: Option<ChannelIndex>,
    pub packets_per_pair: u32,
    #[serde(default = "default_mapping_interval")]
    pub interval_ms: f64,
    #[serde(default)]
    pub channel_model: ChannelModelConfig,
}

fn default_mapping_interval() -> f64 {
    10.0
}

fn default_hop_increment() -> u8 {
    7
}

fn default_excitation_channel() -> ChannelIndex {
    ChannelIndex::new(37).expect("37 is a channel")
}

fn default_forwarding_delay() -> f64 {
    5.8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HopConfig {
    pub algorithm: HopAlgorithm,
    pub used_channels: ChannelMap,
    pub hops: u32,
    #[serde(default = "default_hop_increment")]
    pub hop_increment: u8,
    #[serde(default)]
    pub access_address: Option<Hex32>,
    #[serde(default = "default_excitation_channel")]
    pub excitation_channel: ChannelIndex,
    pub interval_ms: f64,
    #[serde(default = "default_forwarding_delay")]
    pub forwarding_delay_ms: f64,
    #[serde(default)]
    pub channel_model: ChannelModelConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizationConfig {
    /// Packet error rate by data channel, as found by the scan.
    #[serde(deserialize_with = "crate::model::channel_keyed")]
    pub per_profile: BTreeMap<u8, f64>,
    pub interval_ms: f64,
    /// Tag packet payload (advertiser address plus data).
    pub payload_bytes: usize,
    pub packets_per_channel: u32,
    #[serde(default = "default_hop_increment")]
    pub hop_increment: u8,
    #[serde(default = "default_excitation_channel")]
    pub excitation_channel: ChannelIndex,
    #[serde(default = "default_quantile")]
    pub quantile: f64,
}

fn default_quantile() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatencyProfile {
    Mcu,
    Laptop,
    Custom(LatencyModel),
}

impl LatencyProfile {
    pub fn model(&self) -> LatencyModel {
        match self {
            LatencyProfile::Mcu => LatencyModel::mcu(),
            LatencyProfile::Laptop => LatencyModel::laptop(),
            LatencyProfile::Custom(m) => *m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlmConfig {
    pub packet_interval_ms: f64,
    pub symbol_bits: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatencyConfig {
    pub profile: LatencyProfile,
    pub payload_bytes: usize,
    pub plm: PlmConfig,
    /// Excitation intervals to check the downlink lead time against.
    #[serde(default)]
    pub excitation_intervals_ms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasuredRatio {
    pub high: u32,
    pub low: u32,
    pub measured: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThroughputConfig {
    pub channels_used: Vec<u32>,
    pub interval_us: u64,
    pub payload_bytes: usize,
    pub excitations: u32,
    #[serde(default)]
    pub measured_ratios: Vec<MeasuredRatio>,
}

fn default_adv_channel() -> ChannelIndex {
    ChannelIndex::new(38).expect("38 is a channel")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionConfig {
    #[serde(default = "default_adv_channel")]
    pub adv_channel: ChannelIndex,
    pub advertiser_address: String,
    pub used_channels: ChannelMap,
    pub hop_increment: u8,
    /// Connection interval in 1.25 ms units; one excitation per event.
    pub interval_units: u16,
    pub access_address: Hex32,
    pub crc_init: Hex32,
    pub events: u32,
    /// Excitation channels, used round robin.
    pub excitation: Vec<ChannelIndex>,
    #[serde(default = "default_advert_ms")]
    pub advert_at_ms: f64,
    #[serde(default = "default_forwarding_delay")]
    pub forwarding_delay_ms: f64,
    #[serde(default)]
    pub write_value: Option<String>,
    #[serde(default)]
    pub channel_model: ChannelModelConfig,
}

fn default_advert_ms() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    Mapping(MappingConfig),
    HopAlgorithm(HopConfig),
    Optimization(OptimizationConfig),
    Latency(LatencyConfig),
    Throughput(ThroughputConfig),
    Connection(ConnectionConfig),
}

/// Thresholds checked by `--assert`. Only the fields that apply to the
/// scenario kind may be set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    pub all_entries_one: Option<bool>,
    pub min_median: Option<f64>,
    pub neighbor_cells_zero: Option<bool>,
    pub max_band_mean: Option<f64>,
    pub observed_equals_expected: Option<bool>,
    pub min_channel_success: Option<f64>,
    pub min_aggregate_success: Option<f64>,
    pub min_gain: Option<f64>,
    pub gain: Option<f64>,
    pub excluded_above_median: Option<bool>,
    pub total_us: Option<f64>,
    pub total_tolerance: Option<f64>,
    pub min_plm_ms: Option<f64>,
    pub max_plm_ms: Option<f64>,
    pub min_ratio: Option<f64>,
    pub full_kbps: Option<f64>,
    pub follows_oracle: Option<bool>,
    pub channels: Option<Vec<ChannelIndex>>,
    pub no_off_channel: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub description: Option<String>,
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    pub scenario: Scenario,
    #[serde(default)]
    pub expect: Option<Expect>,
}

/// Scenario kinds with a one-line description, in listing order.
pub const KINDS: [(&str, &str); 6] = [
    (
        "mapping",
        "success matrix of excitation x target channel pairs",
    ),
    (
        "hop_algorithm",
        "per-channel packet counts of a CSA#1/CSA#2 hopping tag vs the expected sequence",
    ),
    (
        "optimization",
        "goodput before and after excluding high-PER channels from the hop map",
    ),
    (
        "latency",
        "edge forwarding delay breakdown and comparison with length-modulated downlink",
    ),
    (
        "throughput",
        "throughput vs number of excitation channels the tag can use",
    ),
    (
        "connection",
        "tag joins a connection from an ambient advertiser and sends writes",
    ),
];

impl Scenario {
    pub fn kind(&self) -> &'static str {
        match self {
            Scenario::Mapping(_) => "mapping",
            Scenario::HopAlgorithm(_) => "hop_algorithm",
            Scenario::Optimization(_) => "optimization",
            Scenario::Latency(_) => "latency",
            Scenario::Throughput(_) => "throughput",
            Scenario::Connection(_) => "connection",
        }
    }
}

fn positive(what: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        invalid(format!("{what} must be positive, got {v}"))
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig =
            serde_json::from_str(text).map_err(|source| ConfigError::Parse {
                path: path.to_path_buf(),
                source,
            })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text, path)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return invalid(format!(
                "name {:?} must be non-empty [A-Za-z0-9_-]",
                self.name
            ));
        }
        let model = |m: &ChannelModelConfig| {
            m.validate()
                .map_err(|e| ConfigError::Invalid(e.to_string()))
        };
        match &self.scenario {
            Scenario::Mapping(m) => {
                model(&m.channel_model)?;
                positive("interval_ms", m.interval_ms)?;
                if m.packets_per_pair == 0 {
                    return invalid("packets_per_pair must be at least 1");
                }
                match (m.pairs, m.channel) {
                    (Pairs::NToN, Some(_)) => return invalid("n_to_n takes no channel"),
                    (Pairs::NTo1 | Pairs::OneToN, None) => {
                        return invalid("n_to_1 and 1_to_n need a channel")
                    }
                    _ => {}
                }
            }
            Scenario::HopAlgorithm(h) => {
                model(&h.channel_model)?;
                positive("interval_ms", h.interval_ms)?;
                positive("forwarding_delay_ms", h.forwarding_delay_ms)?;
                if h.hops == 0 {
                    return invalid("hops must be at least 1");
                }
                match h.algorithm {
                    HopAlgorithm::Csa1 if !(5..=16).contains(&h.hop_increment) => {
                        return invalid(format!("hop_increment {} outside 5..=16", h.hop_increment))
                    }
                    HopAlgorithm::Csa2 if h.access_address.is_none() => {
                        return invalid("csa2 needs an access_address")
                    }
                    _ => {}
                }
                if h.used_channels.contains(h.excitation_channel) {
                    return invalid("excitation_channel must not be a target channel");
                }
            }
            Scenario::Optimization(o) => {
                positive("interval_ms", o.interval_ms)?;
                if o.per_profile.len() < 2 {
                    return invalid("per_profile needs at least 2 data channels");
                }
                for (&ch, &p) in &o.per_profile {
                    if ch > 36 {
                        return invalid(format!("per_profile channel {ch} is not a data channel"));
                    }
                    if !(0.0..=1.0).contains(&p) {
                        return invalid(format!("per_profile[{ch}] = {p} is not a probability"));
                    }
                }
                if o.packets_per_channel < 100 {
                    return invalid("packets_per_channel must be at least 100");
                }
                if !(5..=16).contains(&o.hop_increment) {
                    return invalid(format!("hop_increment {} outside 5..=16", o.hop_increment));
                }
                if !(6..=255).contains(&o.payload_bytes) {
                    return invalid("payload_bytes must be in 6..=255");
                }
                if !(0.0..=1.0).contains(&o.quantile) {
                    return invalid("quantile must be in [0, 1]");
                }
                if o.excitation_channel.index() < 37 {
                    return invalid("excitation_channel must be an advertising channel");
                }
            }
            Scenario::Latency(l) => {
                l.profile
                    .model()
                    .validate()
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?;
                positive("plm.packet_interval_ms", l.plm.packet_interval_ms)?;
                if l.plm.symbol_bits == 0 {
                    return invalid("plm.symbol_bits must be at least 1");
                }
                for &i in &l.excitation_intervals_ms {
                    positive("excitation_intervals_ms", i)?;
                }
            }
            Scenario::Throughput(t) => {
                if t.channels_used.is_empty()
                    || t.channels_used.iter().any(|&n| !(1..=37).contains(&n))
                {
                    return invalid("channels_used entries must be in 1..=37");
                }
                if t.interval_us == 0 || t.excitations == 0 {
                    return invalid("interval_us and excitations must be positive");
                }
            }
            Scenario::Connection(c) => {
                model(&c.channel_model)?;
                positive("forwarding_delay_ms", c.forwarding_delay_ms)?;
                if !(5..=16).contains(&c.hop_increment) {
                    return invalid(format!("hop_increment {} outside 5..=16", c.hop_increment));
                }
                if !(6..=3200).contains(&c.interval_units) {
                    return invalid("interval_units must be in 6..=3200");
                }
                if !c.adv_channel.is_advertising() {
                    return invalid("adv_channel must be 37, 38 or 39");
                }
                if c.excitation.is_empty() {
                    return invalid("excitation needs at least one channel");
                }
                if let Some(e) = c
                    .excitation
                    .iter()
                    .find(|&&e| e == c.adv_channel || c.used_channels.contains(e))
                {
                    return invalid(format!(
                        "excitation channel {} is also a target channel",
                        e.index()
                    ));
                }
                parse_address(&c.advertiser_address)?;
                if let Some(v) = &c.write_value {
                    parse_hex_bytes(v)?;
                }
                if c.events == 0 {
                    return invalid("events must be at least 1");
                }
            }
        }
        Ok(())
    }

    pub fn out_dir(&self, override_dir: Option<&Path>) -> PathBuf {
        override_dir
            .map(Path::to_path_buf)
            .or_else(|| self.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

/// `aa:bb:cc:dd:ee:ff`, most significant byte first, into over-the-air order.
pub fn parse_address(s: &str) -> Result<[u8; 6], ConfigError> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 6 {
        return invalid(format!("address {s:?} needs 6 colon-separated bytes"));
    }
    let mut out = [0u8; 6];
    for (i, p) in parts.iter().enumerate() {
        out[5 - i] = u8::from_str_radix(p, 16)
            .map_err(|e| ConfigError::Invalid(format!("address {s:?}: {e}")))?;
    }
    Ok(out)
}

pub fn parse_hex_bytes(s: &str) -> Result<Vec<u8>, ConfigError> {
    if !s.len().is_multiple_of(2) {
        return invalid(format!("hex string {s:?} has odd length"));
    }
    (0..s.len())
        .step_by(2)
        .map(|i| {
            u8::from_str_radix(&s[i..i + 2], 16)
                .map_err(|e| ConfigError::Invalid(format!("hex string {s:?}: {e}")))
        })
        .collect()
}
