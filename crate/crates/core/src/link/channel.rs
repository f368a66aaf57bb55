use core::fmt;

use super::LinkError;

pub const DATA_CHANNEL_COUNT: u8 = 37;

/// A BLE channel index. 0..=36 are data channels, 37..=39 advertising.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "u8", into = "u8"))]
pub struct ChannelIndex(u8);

pub const ADVERTISING_CHANNELS: [ChannelIndex; 3] =
    [ChannelIndex(37), ChannelIndex(38), ChannelIndex(39)];

/// Channel indices sorted by center frequency.
const FREQUENCY_ORDER: [u8; 40] = [
    37, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 38, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23,
    24, 25, 26, 27, 28, 29, 30, 31, 32, 33, 34, 35, 36, 39,
];

impl ChannelIndex {
    pub const fn new(index: u8) -> Result<Self, LinkError> {
        if index <= 39 {
            Ok(ChannelIndex(index))
        } else {
            Err(LinkError::InvalidChannel(index))
        }
    }

    pub const fn index(self) -> u8 {
        self.0
    }

    pub const fn is_advertising(self) -> bool {
        self.0 >= DATA_CHANNEL_COUNT
    }

    pub const fn frequency_mhz(self) -> u16 {
        channel_to_frequency(self)
    }

    /// Position of this channel in ascending frequency order (0..40).
    pub const fn frequency_rank(self) -> usize {
        ((self.frequency_mhz() - 2402) / 2) as usize
    }

    /// The channel at position `rank` of the frequency-ordered plan.
    pub const fn from_frequency_rank(rank: usize) -> Option<Self> {
        if rank < 40 {
            Some(ChannelIndex(FREQUENCY_ORDER[rank]))
        } else {
            None
        }
    }

    /// All 40 channels by index.
    pub fn all() -> impl Iterator<Item = ChannelIndex> + Clone {
        (0..40).map(ChannelIndex)
    }

    /// All 40 channels in ascending frequency order.
    pub fn by_frequency() -> impl Iterator<Item = ChannelIndex> + Clone {
        FREQUENCY_ORDER.into_iter().map(ChannelIndex)
    }

    pub fn data_channels() -> impl Iterator<Item = ChannelIndex> + Clone {
        (0..DATA_CHANNEL_COUNT).map(ChannelIndex)
    }
}

impl TryFrom<u8> for ChannelIndex {
    type Error = LinkError;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        ChannelIndex::new(value)
    }
}

impl From<ChannelIndex> for u8 {
    fn from(ch: ChannelIndex) -> u8 {
        ch.0
    }
}

impl fmt::Debug for ChannelIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ch{}", self.0)
    }
}

impl fmt::Display for ChannelIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Center frequency of a channel in MHz.
pub const fn channel_to_frequency(ch: ChannelIndex) -> u16 {
    match ch.0 {
        37 => 2402,
        38 => 2426,
        39 => 2480,
        i @ 0..=10 => 2404 + 2 * i as u16,
        i => 2428 + 2 * (i as u16 - 11),
    }
}

pub const fn frequency_to_channel(mhz: u16) -> Result<ChannelIndex, LinkError> {
    if mhz < 2402 || mhz > 2480 || !mhz.is_multiple_of(2) {
        return Err(LinkError::NotAChannelCenter(mhz));
    }
    Ok(ChannelIndex(FREQUENCY_ORDER[((mhz - 2402) / 2) as usize]))
}

/// The set of data channels a link hops over, as a 37-bit mask.
///
/// Always holds at least two channels.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChannelMap(u64);

const ALL_DATA_MASK: u64 = (1 << DATA_CHANNEL_COUNT) - 1;

impl ChannelMap {
    pub const fn all() -> Self {
        ChannelMap(ALL_DATA_MASK)
    }

    /// Builds a map from a bit mask where bit `i` marks data channel `i` used.
    pub const fn from_bits(bits: u64) -> Result<Self, LinkError> {
        if bits & !ALL_DATA_MASK != 0 {
            return Err(LinkError::NotADataChannel(
                (63 - bits.leading_zeros()) as u8,
            ));
        }
        if bits.count_ones() < 2 {
            return Err(LinkError::TooFewChannels(bits.count_ones()));
        }
        Ok(ChannelMap(bits))
    }

    pub fn from_channels<I>(channels: I) -> Result<Self, LinkError>
    where
        I: IntoIterator,
        I::Item: Into<u8>,
    {
        let mut bits = 0u64;
        for ch in channels {
            let ch = ch.into();
            if ch >= DATA_CHANNEL_COUNT {
                return Err(LinkError::NotADataChannel(ch));
            }
            bits |= 1 << ch;
        }
        Self::from_bits(bits)
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    pub const fn contains(self, ch: ChannelIndex) -> bool {
        ch.0 < DATA_CHANNEL_COUNT && self.0 & (1 << ch.0) != 0
    }

    pub const fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub const fn is_empty(self) -> bool {
        false
    }

    /// Used channels in ascending index order.
    pub fn iter(self) -> impl Iterator<Item = ChannelIndex> + Clone {
        ChannelIndex::data_channels().filter(move |&ch| self.contains(ch))
    }

    /// The `n`-th used channel in ascending order.
    pub fn nth_used(self, n: u32) -> ChannelIndex {
        debug_assert!(n < self.len());
        let mut rest = self.0;
        for _ in 0..n {
            rest &= rest - 1;
        }
        ChannelIndex(rest.trailing_zeros() as u8)
    }

    /// Rank of `ch` among the used channels, if used.
    pub fn rank_of(self, ch: ChannelIndex) -> Option<u32> {
        if self.contains(ch) {
            Some((self.0 & ((1u64 << ch.0) - 1)).count_ones())
        } else {
            None
        }
    }

    /// Little-endian 5-byte encoding with the upper three bits zero.
    pub fn to_bytes(self) -> [u8; 5] {
        let le = self.0.to_le_bytes();
        [le[0], le[1], le[2], le[3], le[4]]
    }

    pub fn from_bytes(bytes: [u8; 5]) -> Result<Self, LinkError> {
        let mut le = [0u8; 8];
        le[..5].copy_from_slice(&bytes);
        Self::from_bits(u64::from_le_bytes(le))
    }
}

impl Default for ChannelMap {
    fn default() -> Self {
        Self::all()
    }
}

impl fmt::Debug for ChannelMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|c| c.0)).finish()
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for ChannelMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter().map(u8::from))
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for ChannelMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let channels = <alloc::vec::Vec<u8> as serde::Deserialize>::deserialize(d)?;
        ChannelMap::from_channels(channels).map_err(serde::de::Error::custom)
    }
}
