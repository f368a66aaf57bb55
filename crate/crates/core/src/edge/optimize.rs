//! Channel-map optimization from a per-target-channel PER scan.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use thiserror::Error;

use crate::link::{ChannelIndex, ChannelMap};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum OptimizeError {
    #[error("PER {per} on channel {channel} is outside [0, 1]")]
    RateOutOfRange { channel: u8, per: f64 },
    #[error("profile covers {0} data channels, at least 2 are needed")]
    TooFewChannels(usize),
}

/// Packet error rate measured on each scanned target channel.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PerProfile {
    per: BTreeMap<ChannelIndex, f64>,
}

impl PerProfile {
    pub fn new<I>(rates: I) -> Result<Self, OptimizeError>
    where
        I: IntoIterator<Item = (ChannelIndex, f64)>,
    {
        let mut per = BTreeMap::new();
        for (ch, p) in rates {
            if !(0.0..=1.0).contains(&p) {
                return Err(OptimizeError::RateOutOfRange {
                    channel: ch.index(),
                    per: p,
                });
            }
            per.insert(ch, p);
        }
        Ok(PerProfile { per })
    }

    pub fn get(&self, ch: ChannelIndex) -> Option<f64> {
        self.per.get(&ch).copied()
    }

    pub fn len(&self) -> usize {
        self.per.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ChannelIndex, f64)> + '_ {
        self.per.iter().map(|(&c, &p)| (c, p))
    }

    /// Entries on data channels; only these can enter a channel map.
    pub fn data_channels(&self) -> impl Iterator<Item = (ChannelIndex, f64)> + '_ {
        self.iter().filter(|(c, _)| !c.is_advertising())
    }

    fn sorted_data_rates(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.data_channels().map(|(_, p)| p).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Median PER over the data channels (mean of the two middle values for
    /// an even count).
    pub fn median(&self) -> Option<f64> {
        let v = self.sorted_data_rates();
        let n = v.len();
        match n {
            0 => None,
            _ if n % 2 == 1 => Some(v[n / 2]),
            _ => Some((v[n / 2 - 1] + v[n / 2]) / 2.0),
        }
    }
}

/// Keeps the data channels whose PER is at or below the median.
///
/// The comparison is made against the lower middle value, which is
/// equivalent to `per <= median` for values taken from the profile and is
/// exact under positive rescaling. If fewer than two channels survive, the
/// two lowest-PER channels are kept (ties by channel index).
pub fn scan_and_optimize(profile: &PerProfile) -> Result<ChannelMap, OptimizeError> {
    let sorted = profile.sorted_data_rates();
    let n = sorted.len();
    if n < 2 {
        return Err(OptimizeError::TooFewChannels(n));
    }
    let threshold = sorted[(n - 1) / 2];
    let kept: Vec<u8> = profile
        .data_channels()
        .filter(|&(_, p)| p <= threshold)
        .map(|(c, _)| c.index())
        .collect();
    if kept.len() >= 2 {
        return Ok(ChannelMap::from_channels(kept).expect("two or more data channels"));
    }
    let mut ranked: Vec<(ChannelIndex, f64)> = profile.data_channels().collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    Ok(
        ChannelMap::from_channels(ranked.iter().take(2).map(|(c, _)| c.index()))
            .expect("two data channels"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn ch(i: u8) -> ChannelIndex {
        ChannelIndex::new(i).unwrap()
    }

    fn profile(rates: &[(u8, f64)]) -> PerProfile {
        PerProfile::new(rates.iter().map(|&(c, p)| (ch(c), p))).unwrap()
    }

    #[test]
    fn clean_split() {
        let p = profile(&[(1, 0.0), (2, 0.0), (3, 1.0), (4, 1.0)]);
        assert_eq!(p.median(), Some(0.5));
        let map = scan_and_optimize(&p).unwrap();
        assert_eq!(map.iter().map(u8::from).collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn uniform_keeps_all() {
        let p = PerProfile::new(ChannelIndex::data_channels().map(|c| (c, 0.1))).unwrap();
        assert_eq!(scan_and_optimize(&p).unwrap(), ChannelMap::all());
    }

    #[test]
    fn odd_count_keeps_median_channel() {
        let p = profile(&[(1, 0.3), (2, 0.1), (3, 0.2)]);
        let map = scan_and_optimize(&p).unwrap();
        assert_eq!(map.iter().map(u8::from).collect::<Vec<_>>(), vec![2, 3]);
    }

    #[test]
    fn guard_keeps_two_lowest() {
        let p = profile(&[(8, 1.0), (3, 0.0)]);
        let map = scan_and_optimize(&p).unwrap();
        assert_eq!(map.iter().map(u8::from).collect::<Vec<_>>(), vec![3, 8]);
    }

    #[test]
    fn advertising_entries_do_not_enter_the_map() {
        let p = profile(&[(37, 0.0), (5, 0.2), (6, 0.1), (7, 0.9)]);
        assert_eq!(p.median(), Some(0.2));
        let map = scan_and_optimize(&p).unwrap();
        assert_eq!(map.iter().map(u8::from).collect::<Vec<_>>(), vec![5, 6]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            PerProfile::new([(ch(1), 1.5)]),
            Err(OptimizeError::RateOutOfRange { channel: 1, .. })
        ));
        assert_eq!(
            scan_and_optimize(&profile(&[(1, 0.1)])),
            Err(OptimizeError::TooFewChannels(1))
        );
    }
}
