use crate::Bits;

use super::ChannelIndex;

/// Data whitening LFSR, polynomial x^7 + x^4 + 1.
///
/// Register bit `k` holds LFSR position `6 - k`: bit 6 is position 0 (seeded
/// with 1) and bits 5..0 hold the channel index with its MSB in position 1.
/// The output bit is position 6, i.e. register bit 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Whitener {
    register: u8,
}

impl Whitener {
    pub fn new(channel: ChannelIndex) -> Self {
        Whitener {
            register: 0b0100_0000 | channel.index(),
        }
    }

    pub fn register(&self) -> u8 {
        self.register
    }

    /// Clocks the register once and returns the whitening bit.
    pub fn next_bit(&mut self) -> bool {
        let out = self.register & 1 == 1;
        self.register >>= 1;
        if out {
            self.register ^= 0b0100_0100;
        }
        out
    }

    pub fn apply(&mut self, bytes: &mut [u8]) {
        for byte in bytes {
            for k in 0..8 {
                if self.next_bit() {
                    *byte ^= 1 << k;
                }
            }
        }
    }
}

/// XORs `bits` with the whitening stream of `channel`. Self-inverse.
pub fn whiten(bits: &Bits, channel: ChannelIndex) -> Bits {
    let mut lfsr = Whitener::new(channel);
    bits.iter().map(|b| b ^ lfsr.next_bit()).collect()
}

pub fn whiten_bytes(bytes: &mut [u8], channel: ChannelIndex) {
    Whitener::new(channel).apply(bytes);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn register_never_zero() {
        for ch in ChannelIndex::all() {
            let mut w = Whitener::new(ch);
            for _ in 0..200 {
                assert_ne!(w.register(), 0);
                w.next_bit();
            }
        }
    }

    #[test]
    fn period_is_127() {
        let mut w = Whitener::new(ChannelIndex::new(37).unwrap());
        let start = w.register();
        let mut period = 0;
        loop {
            w.next_bit();
            period += 1;
            if w.register() == start {
                break;
            }
        }
        assert_eq!(period, 127);
    }

    #[test]
    fn involution_on_bytes() {
        let ch = ChannelIndex::new(12).unwrap();
        let original = [0x12u8, 0x34, 0x56, 0x78, 0x9a];
        let mut data = original;
        whiten_bytes(&mut data, ch);
        assert_ne!(data, original);
        whiten_bytes(&mut data, ch);
        assert_eq!(data, original);
    }
}
