//! Frame assembly: repeated-half preamble followed by data symbols.

use num_complex::Complex64;

use super::modulation::map_symbols;
use super::ofdm::{ofdm_modulate, prbs_bit, OfdmSymbolGrid, SubcarrierMap};
use super::LinkConfig;
use crate::error::{Result, RisError};

/// Preamble grid: QPSK on the even-bin used subcarriers only, boosted by
/// sqrt(2) so its power matches a data symbol. Even bins make the time
/// signal periodic in half the transform.
pub fn preamble_grid(map: &SubcarrierMap) -> OfdmSymbolGrid {
    let mut g = OfdmSymbolGrid::zeros(map.clone(), 1);
    for u in 0..map.used() {
        if map.signed_index(u) % 2 == 0 {
            let (a, b) = (prbs_bit(3 * u + 101), prbs_bit(3 * u + 202));
            let v = Complex64::new(1.0 - 2.0 * a as f64, 1.0 - 2.0 * b as f64);
            g.set_used(0, u, v);
        }
    }
    g
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub samples: Vec<Complex64>,
    /// Transmitted frequency grid of the data symbols.
    pub grid: OfdmSymbolGrid,
    pub data_symbols: usize,
    /// Number of channel bits carried (before padding).
    pub payload_bits: usize,
    /// True when the frame carries no data symbols.
    pub empty: bool,
}

/// Channel-bit capacity of one frame.
pub fn frame_capacity_bits(config: &LinkConfig) -> Result<usize> {
    let map = SubcarrierMap::from_config(config)?;
    Ok(config.symbols_per_frame * map.data_per_symbol() * config.modulation.bits_per_symbol())
}

/// Maps `bits` onto the data cells and prepends the preamble. The last
/// symbol is completed with sequence bits.
pub fn build_frame(bits: &[u8], config: &LinkConfig) -> Result<Frame> {
    let map = SubcarrierMap::from_config(config)?;
    let capacity = frame_capacity_bits(config)?;
    if bits.len() > capacity {
        return Err(RisError::FrameOverflow {
            requested: bits.len(),
            capacity,
        });
    }
    let bps = config.modulation.bits_per_symbol();
    let per_symbol = map.data_per_symbol() * bps;
    let data_symbols = bits.len().div_ceil(per_symbol);
    let padded = padded_bits(bits, data_symbols, per_symbol);
    let cells = map_symbols(&padded, config.modulation)?;
    let grid = OfdmSymbolGrid::from_data(map.clone(), &cells);

    let mut samples = ofdm_modulate(&preamble_grid(&map), config.cp_len)?;
    samples.extend(ofdm_modulate(&grid, config.cp_len)?);
    Ok(Frame {
        samples,
        grid,
        data_symbols,
        payload_bits: bits.len(),
        empty: data_symbols == 0,
    })
}

/// Channel bits of a frame including the padding, as transmitted.
pub(crate) fn padded_bits(bits: &[u8], data_symbols: usize, per_symbol_bits: usize) -> Vec<u8> {
    let mut padded = bits.to_vec();
    padded.extend((bits.len()..data_symbols * per_symbol_bits).map(|i| prbs_bit(i)));
    padded
}
