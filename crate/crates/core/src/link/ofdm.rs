//! Subcarrier layout, resource grid and the IFFT/FFT stages.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::LinkConfig;
use crate::error::{Result, RisError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellRole {
    Data,
    Pilot,
    /// Guard band and DC: never carries energy.
    Virtual,
}

/// Placement of the used subcarriers in the transform.
#[derive(Debug, Clone, PartialEq)]
pub struct SubcarrierMap {
    fft_size: usize,
    /// Signed subcarrier index of each used subcarrier, ascending.
    signed: Vec<i64>,
    roles: Vec<CellRole>,
}

impl SubcarrierMap {
    /// `used` subcarriers split evenly around an unused DC bin; every
    /// `pilot_spacing`-th used subcarrier (starting with the lowest) is a
    /// pilot.
    pub fn new(fft_size: usize, used: usize, pilot_spacing: usize) -> Result<Self> {
        if used == 0 || used % 2 != 0 || used >= fft_size {
            return Err(RisError::invalid(
                "used subcarriers",
                format!("need an even count below the transform size {fft_size}, got {used}"),
            ));
        }
        if pilot_spacing < 2 {
            return Err(RisError::invalid("pilot spacing", "must be at least 2"));
        }
        let half = (used / 2) as i64;
        let signed: Vec<i64> = (-half..0).chain(1..=half).collect();
        let roles = (0..used)
            .map(|u| if u % pilot_spacing == 0 { CellRole::Pilot } else { CellRole::Data })
            .collect();
        Ok(Self { fft_size, signed, roles })
    }

    pub fn from_config(config: &LinkConfig) -> Result<Self> {
        Self::new(config.fft_size, config.used_subcarriers, config.pilot_spacing)
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn used(&self) -> usize {
        self.signed.len()
    }

    pub fn signed_index(&self, u: usize) -> i64 {
        self.signed[u]
    }

    /// Transform bin of used subcarrier `u`.
    pub fn bin(&self, u: usize) -> usize {
        self.signed[u].rem_euclid(self.fft_size as i64) as usize
    }

    pub fn role(&self, u: usize) -> CellRole {
        self.roles[u]
    }

    pub fn pilots(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.used()).filter(|&u| self.roles[u] == CellRole::Pilot)
    }

    pub fn data(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.used()).filter(|&u| self.roles[u] == CellRole::Data)
    }

    pub fn data_per_symbol(&self) -> usize {
        self.data().count()
    }

    /// Role of transform bin `b`.
    pub fn bin_role(&self, b: usize) -> CellRole {
        let n = self.fft_size as i64;
        let s = if (b as i64) < n / 2 { b as i64 } else { b as i64 - n };
        let half = (self.used() / 2) as i64;
        match s {
            0 => CellRole::Virtual,
            s if s.abs() > half => CellRole::Virtual,
            s if s < 0 => self.roles[(s + half) as usize],
            s => self.roles[(s + half - 1) as usize],
        }
    }
}

/// Known pilot value for used subcarrier `u`: QPSK from a fixed
/// maximal-length sequence.
pub fn pilot_value(u: usize) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (a, b) = (prbs_bit(2 * u), prbs_bit(2 * u + 1));
    Complex64::new(s * (1.0 - 2.0 * a as f64), s * (1.0 - 2.0 * b as f64))
}

/// Bit `i` of the x^9 + x^5 + 1 sequence seeded with all ones.
pub(crate) fn prbs_bit(i: usize) -> u8 {
    let mut reg: u16 = 0x1ff;
    let mut out = 0;
    for _ in 0..=(i % 511) {
        let bit = ((reg >> 8) ^ (reg >> 4)) & 1;
        out = bit as u8;
        reg = ((reg << 1) | bit) & 0x1ff;
    }
    out
}

/// Frequency-domain frame payload: `symbols` rows of `fft_size` bins.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmSymbolGrid {
    map: SubcarrierMap,
    cells: Vec<Complex64>,
    symbols: usize,
}

impl OfdmSymbolGrid {
    pub fn zeros(map: SubcarrierMap, symbols: usize) -> Self {
        let cells = vec![Complex64::new(0.0, 0.0); symbols * map.fft_size()];
        Self { map, cells, symbols }
    }

    /// Data symbols filled in order over the data cells of each OFDM
    /// symbol; pilots inserted, virtual cells left empty. Missing data at
    /// the end is zero-filled.
    pub fn from_data(map: SubcarrierMap, data: &[Complex64]) -> Self {
        let per = map.data_per_symbol();
        let symbols = data.len().div_ceil(per);
        let mut grid = Self::zeros(map, symbols);
        let mut it = data.iter();
        for s in 0..symbols {
            for u in 0..grid.map.used() {
                let v = match grid.map.role(u) {
                    CellRole::Pilot => pilot_value(u),
                    CellRole::Data => it.next().copied().unwrap_or_default(),
                    CellRole::Virtual => unreachable!("used subcarriers are never virtual"),
                };
                grid.set_used(s, u, v);
            }
        }
        grid
    }

    pub fn map(&self) -> &SubcarrierMap {
        &self.map
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    pub fn bin(&self, symbol: usize, bin: usize) -> Complex64 {
        self.cells[symbol * self.map.fft_size() + bin]
    }

    pub fn used(&self, symbol: usize, u: usize) -> Complex64 {
        self.bin(symbol, self.map.bin(u))
    }

    pub fn set_used(&mut self, symbol: usize, u: usize, v: Complex64) {
        let i = symbol * self.map.fft_size() + self.map.bin(u);
        self.cells[i] = v;
    }

    pub fn symbol_bins(&self, symbol: usize) -> &[Complex64] {
        let n = self.map.fft_size();
        &self.cells[symbol * n..(symbol + 1) * n]
    }

    /// Data cells in transmission order.
    pub fn data_cells(&self) -> Vec<Complex64> {
        let data: Vec<usize> = self.map.data().collect();
        (0..self.symbols)
            .flat_map(|s| data.iter().map(move |&u| (s, u)))
            .map(|(s, u)| self.used(s, u))
            .collect()
    }

    pub fn energy(&self) -> f64 {
        self.cells.iter().map(|c| c.norm_sqr()).sum()
    }
}

pub(crate) struct Transforms {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl Transforms {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            scale: 1.0 / (n as f64).sqrt(),
        }
    }

    pub(crate) fn inverse(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        buf.iter_mut().for_each(|x| *x *= self.scale);
    }

    pub(crate) fn forward(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
        buf.iter_mut().for_each(|x| *x *= self.scale);
    }
}

/// Unitary inverse transform of each symbol with its cyclic prefix.
pub fn ofdm_modulate(grid: &OfdmSymbolGrid, cp_len: usize) -> Result<Vec<Complex64>> {
    let n = grid.map().fft_size();
    if cp_len >= n {
        return Err(RisError::invalid("cyclic prefix", "must be shorter than the transform"));
    }
    let t = Transforms::new(n);
    let mut out = Vec::with_capacity(grid.symbols() * (n + cp_len));
    let mut buf = vec![Complex64::default(); n];
    for s in 0..grid.symbols() {
        buf.copy_from_slice(grid.symbol_bins(s));
        t.inverse(&mut buf);
        out.extend_from_slice(&buf[n - cp_len..]);
        out.extend_from_slice(&buf);
    }
    Ok(out)
}

/// Strips prefixes and transforms `symbols` consecutive symbols starting
/// at sample `start`. The FFT window begins `backoff` samples before the
/// end of each prefix; the resulting phase ramp is removed.
pub fn ofdm_demodulate(
    stream: &[Complex64],
    map: &SubcarrierMap,
    cp_len: usize,
    start: usize,
    symbols: usize,
    backoff: usize,
) -> Result<OfdmSymbolGrid> {
    let n = map.fft_size();
    let len = n + cp_len;
    if backoff > cp_len {
        return Err(RisError::invalid("timing backoff", "exceeds the cyclic prefix"));
    }
    if start + symbols * len > stream.len() {
        return Err(RisError::LengthMismatch {
            expected: format!("{} samples from offset {start}", symbols * len),
            got: stream.len(),
        });
    }
    let t = Transforms::new(n);
    let ramp: Vec<Complex64> = (0..n)
        .map(|b| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (b * backoff) as f64 / n as f64))
        .collect();
    let mut grid = OfdmSymbolGrid::zeros(map.clone(), symbols);
    for s in 0..symbols {
        let from = start + s * len + cp_len - backoff;
        let dst = &mut grid.cells[s * n..(s + 1) * n];
        dst.copy_from_slice(&stream[from..from + n]);
        t.forward(dst);
        if backoff > 0 {
            dst.iter_mut().zip(&ramp).for_each(|(x, r)| *x *= r);
        }
    }
    Ok(grid)
}
