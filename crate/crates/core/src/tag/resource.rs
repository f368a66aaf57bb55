//! FPGA storage estimate for precomputed clock states.

use super::TagError;

/// Bits per dynamic-reconfiguration word.
pub const WORD_BITS: u64 = 39;

/// Bits held by one 6-input LUT.
const LUT_BITS: u64 = 64;

/// Measured LUT usage of the prototype by number of stored clock states.
/// These include baseline tag logic the storage formula leaves out.
pub const MEASURED_LUTS: [(u32, u32); 6] =
    [(2, 78), (4, 105), (8, 155), (16, 219), (32, 347), (64, 569)];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ResourceEstimate {
    pub words: u64,
    pub bits: u64,
    pub lut_equivalents: u64,
}

impl ResourceEstimate {
    /// LUTs per state without rounding up, e.g. 10.36 for 4 clocks.
    pub fn luts_per_state(&self, n_states: u32) -> f64 {
        if n_states == 0 {
            0.0
        } else {
            self.bits as f64 / LUT_BITS as f64 / f64::from(n_states)
        }
    }
}

/// Storage for `n_states` configuration states of `clocks_per_state` clocks:
/// `9 + 2n` words of 39 bits per state.
pub fn resource_estimate(
    n_states: u32,
    clocks_per_state: u32,
) -> Result<ResourceEstimate, TagError> {
    if !(1..7).contains(&clocks_per_state) {
        return Err(TagError::ClocksPerState(clocks_per_state));
    }
    let words = 9 + 2 * u64::from(clocks_per_state);
    let bits = WORD_BITS * words * u64::from(n_states);
    Ok(ResourceEstimate {
        words,
        bits,
        lut_equivalents: bits.div_ceil(LUT_BITS),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_state_four_clocks() {
        let r = resource_estimate(1, 4).unwrap();
        assert_eq!(r.words, 17);
        assert_eq!(r.bits, 663);
        assert_eq!(r.lut_equivalents, 11);
        assert!((r.luts_per_state(1) - 10.359375).abs() < 1e-12);
    }

    #[test]
    fn zero_states() {
        assert_eq!(resource_estimate(0, 3).unwrap().bits, 0);
    }

    #[test]
    fn sixty_four_states() {
        let r = resource_estimate(64, 4).unwrap();
        assert_eq!(r.bits, 42432);
        assert_eq!(r.lut_equivalents, 663);
    }

    #[test]
    fn clock_count_bounds() {
        assert_eq!(resource_estimate(1, 7), Err(TagError::ClocksPerState(7)));
        assert_eq!(resource_estimate(1, 0), Err(TagError::ClocksPerState(0)));
        assert!(resource_estimate(1, 6).is_ok());
    }
}
