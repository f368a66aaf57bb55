//! Component-wise forwarding delay of the edge server.
//!
//! A downlink command crosses the BLE receive chain (radio plus UART to the
//! controller), the controller, the ASK transmit chain (SPI plus radio), the
//! tag's envelope decoder and finally the tag's clock reconfiguration.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum LatencyError {
    #[error("interface rate must be positive")]
    ZeroRate,
    #[error("component delay `{0}` must be finite and non-negative")]
    NegativeDelay(&'static str),
    #[error("packet interval must be positive")]
    NonPositiveInterval,
    #[error("symbol size must be at least one bit")]
    ZeroSymbolBits,
}

/// UART transfer time in µs with 8N1 framing (10 bits per byte).
pub fn uart_time_us(bytes: usize, baud: u32) -> Result<f64, LatencyError> {
    if baud == 0 {
        return Err(LatencyError::ZeroRate);
    }
    Ok(bytes as f64 * 10.0 * 1e6 / f64::from(baud))
}

/// SPI transfer time in µs, 8 clocks per byte.
pub fn spi_time_us(bytes: usize, clock_hz: u32) -> Result<f64, LatencyError> {
    if clock_hz == 0 {
        return Err(LatencyError::ZeroRate);
    }
    Ok(bytes as f64 * 8.0 * 1e6 / f64::from(clock_hz))
}

/// Delay of a packet-length-modulated downlink: one symbol of
/// `symbol_bits` bits per excitation packet interval.
pub fn plm_delay_ms(
    payload_bytes: usize,
    packet_interval_ms: f64,
    symbol_bits: u32,
) -> Result<f64, LatencyError> {
    if packet_interval_ms.is_nan() || packet_interval_ms <= 0.0 {
        return Err(LatencyError::NonPositiveInterval);
    }
    if symbol_bits == 0 {
        return Err(LatencyError::ZeroSymbolBits);
    }
    let symbols = (payload_bytes * 8).div_ceil(symbol_bits as usize);
    Ok(symbols as f64 * packet_interval_ms)
}

/// Fixed per-component delays (µs) and interface rates of an edge build.
///
/// `ble_rx_chain_us` and `ask_tx_chain_us` exclude the UART and SPI
/// transfer, which scale with the payload and are added by
/// [`forwarding_delay`](Self::forwarding_delay).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct LatencyModel {
    pub ble_rx_chain_us: f64,
    pub controller_forward_us: f64,
    pub ask_tx_chain_us: f64,
    pub tag_decode_us: f64,
    pub clock_reconfig_us: f64,
    pub uart_baud: u32,
    pub spi_hz: u32,
}

impl LatencyModel {
    /// MCU-based edge: 1 Mbaud UART, 4 MHz SPI, 13 µs forwarding.
    ///
    /// The receive and transmit chains are sized so that both total 2237 µs
    /// including their interface transfer for a 20 byte payload, which puts
    /// the end-to-end delay at 5800 µs.
    pub const fn mcu() -> Self {
        LatencyModel {
            ble_rx_chain_us: 2037.0,
            controller_forward_us: 13.0,
            ask_tx_chain_us: 2197.0,
            tag_decode_us: 1300.0,
            clock_reconfig_us: 13.0,
            uart_baud: 1_000_000,
            spi_hz: 4_000_000,
        }
    }

    /// Laptop-based edge: same radios, 115200 baud UART and 1800 µs
    /// forwarding in the host.
    pub const fn laptop() -> Self {
        LatencyModel {
            controller_forward_us: 1800.0,
            uart_baud: 115_200,
            ..Self::mcu()
        }
    }

    pub fn validate(&self) -> Result<(), LatencyError> {
        let fields = [
            ("ble_rx_chain_us", self.ble_rx_chain_us),
            ("controller_forward_us", self.controller_forward_us),
            ("ask_tx_chain_us", self.ask_tx_chain_us),
            ("tag_decode_us", self.tag_decode_us),
            ("clock_reconfig_us", self.clock_reconfig_us),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(LatencyError::NegativeDelay(name));
            }
        }
        if self.uart_baud == 0 || self.spi_hz == 0 {
            return Err(LatencyError::ZeroRate);
        }
        Ok(())
    }

    pub fn forwarding_delay(&self, payload_bytes: usize) -> Result<DelayBreakdown, LatencyError> {
        self.validate()?;
        let uart_us = uart_time_us(payload_bytes, self.uart_baud)?;
        let spi_us = spi_time_us(payload_bytes, self.spi_hz)?;
        Ok(DelayBreakdown {
            ble_rx_chain_us: self.ble_rx_chain_us + uart_us,
            controller_forward_us: self.controller_forward_us,
            ask_tx_chain_us: self.ask_tx_chain_us + spi_us,
            tag_decode_us: self.tag_decode_us,
            clock_reconfig_us: self.clock_reconfig_us,
            uart_us,
            spi_us,
        })
    }
}

impl Default for LatencyModel {
    fn default() -> Self {
        Self::mcu()
    }
}

/// Forwarding delay split by component. The chains include their
/// interface transfer time (`uart_us`, `spi_us`).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DelayBreakdown {
    pub ble_rx_chain_us: f64,
    pub controller_forward_us: f64,
    pub ask_tx_chain_us: f64,
    pub tag_decode_us: f64,
    pub clock_reconfig_us: f64,
    pub uart_us: f64,
    pub spi_us: f64,
}

impl DelayBreakdown {
    pub fn components(&self) -> [(&'static str, f64); 5] {
        [
            ("ble_rx_chain", self.ble_rx_chain_us),
            ("controller_forward", self.controller_forward_us),
            ("ask_tx_chain", self.ask_tx_chain_us),
            ("tag_decode", self.tag_decode_us),
            ("clock_reconfig", self.clock_reconfig_us),
        ]
    }

    pub fn total_us(&self) -> f64 {
        self.components().iter().map(|(_, v)| v).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interface_times() {
        assert_eq!(uart_time_us(20, 1_000_000), Ok(200.0));
        assert_eq!(spi_time_us(20, 4_000_000), Ok(40.0));
        assert_eq!(uart_time_us(0, 1_000_000), Ok(0.0));
        assert_eq!(spi_time_us(0, 4_000_000), Ok(0.0));
        assert_eq!(uart_time_us(1, 0), Err(LatencyError::ZeroRate));
        assert_eq!(spi_time_us(1, 0), Err(LatencyError::ZeroRate));
    }

    #[test]
    fn mcu_profile_totals_5800() {
        let d = LatencyModel::mcu().forwarding_delay(20).unwrap();
        assert_eq!(d.total_us(), 5800.0);
        assert_eq!(d.ble_rx_chain_us, 2237.0);
        assert_eq!(d.ask_tx_chain_us, 2237.0);
    }

    #[test]
    fn laptop_forwarding_dominates() {
        let laptop = LatencyModel::laptop().forwarding_delay(20).unwrap();
        let mcu = LatencyModel::mcu().forwarding_delay(20).unwrap();
        assert_eq!(laptop.controller_forward_us, 1800.0);
        assert_eq!(mcu.controller_forward_us, 13.0);
        assert!(laptop.total_us() > 7500.0);
    }

    #[test]
    fn extra_payload_adds_interface_time() {
        let m = LatencyModel::mcu();
        let a = m.forwarding_delay(20).unwrap().total_us();
        let b = m.forwarding_delay(40).unwrap().total_us();
        let extra = uart_time_us(20, m.uart_baud).unwrap() + spi_time_us(20, m.spi_hz).unwrap();
        assert!((b - a - extra).abs() < 1e-9);
    }

    #[test]
    fn plm() {
        assert_eq!(plm_delay_ms(20, 14.0, 1), Ok(2240.0));
        assert_eq!(plm_delay_ms(0, 14.0, 1), Ok(0.0));
        assert_eq!(plm_delay_ms(3, 10.0, 5), Ok(50.0));
        assert_eq!(
            plm_delay_ms(1, 0.0, 1),
            Err(LatencyError::NonPositiveInterval)
        );
    }

    #[test]
    fn negative_delay_rejected() {
        let m = LatencyModel {
            tag_decode_us: -1.0,
            ..LatencyModel::mcu()
        };
        assert_eq!(
            m.forwarding_delay(1),
            Err(LatencyError::NegativeDelay("tag_decode_us"))
        );
    }
}
