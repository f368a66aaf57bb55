/// CRC init used on the advertising channels.
pub const ADVERTISING_CRC_INIT: u32 = 0x55_5555;

/// LFSR taps for x^24 + x^10 + x^9 + x^6 + x^4 + x^3 + x + 1 in the
/// reflected register (position `p` lives in bit `23 - p`).
const REFLECTED_TAPS: u32 = 0x5a_6000;

/// BLE CRC-24 over `bytes`, processed LSB first.
///
/// `init` is the CRCInit value as written in the Core Specification (e.g.
/// `0x555555`). The result is the reflected register, so its little-endian
/// bytes are the on-air CRC bytes (see [`crc24_air_bytes`]). This matches the
/// CRC-24/BLE catalogue convention.
pub fn crc24(bytes: &[u8], init: u32) -> u32 {
    let mut state = reverse24(init & 0xff_ffff);
    for &byte in bytes {
        let mut cur = byte;
        for _ in 0..8 {
            let feedback = (state ^ u32::from(cur)) & 1;
            cur >>= 1;
            state >>= 1;
            if feedback == 1 {
                state |= 1 << 23;
                state ^= REFLECTED_TAPS;
            }
        }
    }
    state
}

pub fn crc24_air_bytes(crc: u32) -> [u8; 3] {
    let le = crc.to_le_bytes();
    [le[0], le[1], le[2]]
}

fn reverse24(v: u32) -> u32 {
    v.reverse_bits() >> 8
}
