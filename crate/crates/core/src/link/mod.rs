//! OFDM link through the surface: coding, interleaving, mapping, framing,
//! channel, synchronization, estimation, equalization and decoding.

pub mod channel;
pub mod coding;
pub mod estimate;
pub mod frame;
pub mod interleave;
pub mod modulation;
pub mod ofdm;
pub mod sync;

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use channel::{apply_channel, free_space_path_loss_db, link_budget, LinkBudget};
pub use coding::{encode, viterbi_decode, CoderSpec};
pub use frame::{build_frame, Frame};
pub use interleave::{deinterleave, interleave};
pub use modulation::{demap_soft, demap_symbols, map_symbols, Modulation};
pub use ofdm::{ofdm_demodulate, ofdm_modulate, CellRole, OfdmSymbolGrid, SubcarrierMap};
pub use sync::{synchronize, SyncResult};

use crate::error::{Result, RisError, StageContext};
use crate::farfield::ModelOptions;
use crate::surface::{Codeword, SurfaceLayout};

/// How the receiver noise level is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    None,
    /// Per used subcarrier signal-to-noise ratio.
    SnrDb(f64),
    /// Thermal noise raised by a receiver noise figure.
    NoiseFigureDb(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub carrier_hz: f64,
    pub used_subcarriers: usize,
    pub fft_size: usize,
    pub cp_len: usize,
    pub subcarrier_spacing_hz: f64,
    pub modulation: Modulation,
    pub coder: CoderSpec,
    pub interleaver_rows: usize,
    pub interleaver_cols: usize,
    pub pilot_spacing: usize,
    /// Data symbols per frame, after the preamble.
    pub symbols_per_frame: usize,
    pub tx_power_dbm: f64,
    pub distance_m: f64,
    pub rx_gain_dbi: f64,
    /// Receiver direction seen from the surface.
    pub rx_theta_deg: f64,
    pub rx_phi_deg: f64,
    /// Fixed surface gain; computed from the codeword when absent.
    pub ris_gain_dbi: Option<f64>,
    pub ris_model: ModelOptions,
    pub noise: NoiseSpec,
    /// Carrier offset in subcarrier spacings.
    pub cfo_subcarriers: f64,
    /// Leading samples before the frame.
    pub timing_offset_samples: usize,
    /// Soft max-log metrics into the decoder instead of hard bits.
    pub soft_decision: bool,
    pub seed: u64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            carrier_hz: 2.3e9,
            used_subcarriers: 1200,
            fft_size: 2048,
            cp_len: 144,
            subcarrier_spacing_hz: 15e3,
            modulation: Modulation::Qpsk,
            coder: CoderSpec::default(),
            interleaver_rows: 20,
            interleaver_cols: 50,
            pilot_spacing: 6,
            symbols_per_frame: 14,
            tx_power_dbm: 30.0,
            distance_m: 20.0,
            rx_gain_dbi: 0.0,
            rx_theta_deg: 0.0,
            rx_phi_deg: 0.0,
            ris_gain_dbi: None,
            ris_model: ModelOptions::default(),
            noise: NoiseSpec::None,
            cfo_subcarriers: 0.0,
            timing_offset_samples: 0,
            soft_decision: false,
            seed: 1,
        }
    }
}

impl LinkConfig {
    pub fn sample_rate_hz(&self) -> f64 {
        self.fft_size as f64 * self.subcarrier_spacing_hz
    }

    /// Duration of one OFDM symbol including its prefix.
    pub fn symbol_duration_s(&self) -> f64 {
        (self.fft_size + self.cp_len) as f64 / self.sample_rate_hz()
    }

    /// FFT window advance into the cyclic prefix.
    pub fn timing_backoff(&self) -> usize {
        self.cp_len / 8
    }

    pub fn validate(&self) -> Result<()> {
        SubcarrierMap::from_config(self)?;
        self.coder.validate()?;
        let positive = [
            ("carrier", self.carrier_hz),
            ("subcarrier spacing", self.subcarrier_spacing_hz),
            ("link distance", self.distance_m),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(RisError::invalid(name, format!("must be positive, got {v}")));
            }
        }
        if self.cp_len == 0 || self.cp_len >= self.fft_size {
            return Err(RisError::invalid("cyclic prefix", "must be positive and shorter than the transform"));
        }
        if self.symbols_per_frame == 0 {
            return Err(RisError::invalid("symbols per frame", "must be positive"));
        }
        if self.interleaver_rows == 0 || self.interleaver_cols == 0 {
            return Err(RisError::invalid("interleaver", "rows and cols must be positive"));
        }
        if !(self.cfo_subcarriers.abs() < 1.0) {
            return Err(RisError::invalid("carrier offset", "must be below one subcarrier spacing"));
        }
        if !(0.0..90.0).contains(&self.rx_theta_deg) {
            return Err(RisError::invalid("receiver direction", "theta must lie in [0, 90)"));
        }
        Ok(())
    }

    /// Payload bits carried by one full frame.
    pub fn info_bits_per_frame(&self) -> Result<usize> {
        let block = self.interleaver_rows * self.interleaver_cols;
        let capacity = frame::frame_capacity_bits(self)?;
        let usable = capacity / block * block;
        let info = self.coder.max_info_len(usable);
        if info == 0 {
            return Err(RisError::invalid(
                "interleaver",
                format!("a {block}-bit block leaves no payload room in a {capacity}-bit frame"),
            ));
        }
        Ok(info)
    }

    /// Nominal payload rate: data cells x bits per cell x code rate per
    /// OFDM symbol duration.
    pub fn data_rate_bps(&self) -> Result<f64> {
        let map = SubcarrierMap::from_config(self)?;
        Ok(map.data_per_symbol() as f64 * self.modulation.bits_per_symbol() as f64 * self.coder.code_rate()
            / self.symbol_duration_s())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkReport {
    /// Hard-decision error rate of the channel bits.
    pub raw_ber: f64,
    /// Error rate of the decoded payload bits.
    pub coded_ber: f64,
    pub evm_db: f64,
    pub data_rate_bps: f64,
    pub received_power_dbm: f64,
    pub ris_gain_dbi: f64,
    pub snr_db: Option<f64>,
    pub payload_bits: usize,
    pub channel_bits: usize,
    pub frames: usize,
}

impl LinkReport {
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "raw_ber = {:.6e}", self.raw_ber);
        let _ = writeln!(s, "coded_ber = {:.6e}", self.coded_ber);
        let _ = writeln!(s, "evm_db = {:.4}", self.evm_db);
        let _ = writeln!(s, "data_rate_bps = {:.1}", self.data_rate_bps);
        let _ = writeln!(s, "received_power_dbm = {:.4}", self.received_power_dbm);
        let _ = writeln!(s, "ris_gain_dbi = {:.4}", self.ris_gain_dbi);
        let _ = writeln!(s, "snr_db = {}", self.snr_db.map_or("inf".to_string(), |v| format!("{v:.4}")));
        let _ = writeln!(s, "payload_bits = {}", self.payload_bits);
        let _ = writeln!(s, "channel_bits = {}", self.channel_bits);
        let _ = writeln!(s, "frames = {}", self.frames);
        s
    }
}

/// Bytes to bits, most significant bit first.
pub fn bytes_to_bits(bytes: &[u8]) -> Vec<u8> {
    bytes.iter().flat_map(|b| (0..8).rev().map(move |i| (b >> i) & 1)).collect()
}

pub fn random_payload(bytes: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..bytes).map(|_| rng.random()).collect()
}

#[derive(Default)]
struct FrameStats {
    raw_errors: usize,
    raw_bits: usize,
    info_errors: usize,
    info_bits: usize,
    error_energy: f64,
    symbol_energy: f64,
}

fn run_frame(config: &LinkConfig, budget: &LinkBudget, map: &SubcarrierMap, info: &[u8], index: usize) -> Result<FrameStats> {
    let (rows, cols) = (config.interleaver_rows, config.interleaver_cols);
    let block = rows * cols;
    let coded = if info.is_empty() {
        Vec::new()
    } else {
        encode(info, config.coder).stage("encode")?
    };
    let mut channel_bits = coded.clone();
    let padded_len = coded.len().div_ceil(block) * block;
    channel_bits.extend((coded.len()..padded_len).map(ofdm::prbs_bit));
    let interleaved = interleave::blockwise(&channel_bits, rows, cols, interleave).stage("interleave")?;
    let frame = build_frame(&interleaved, config).stage("frame")?;
    if frame.empty {
        return Ok(FrameStats::default());
    }

    let mut rx = channel::impair(&frame.samples, config, budget, index as u64);
    let sync = synchronize(&rx, config).stage("sync")?;
    sync::correct_cfo(&mut rx, sync.cfo_subcarriers, config.fft_size);
    let start = sync.frame_start + config.fft_size + config.cp_len;
    let grid = ofdm_demodulate(&rx, map, config.cp_len, start, frame.data_symbols, config.timing_backoff())
        .stage("demodulate")?;
    let h = estimate::estimate_channel(&grid);
    let (cells, gains) = estimate::equalize(&grid, &h);

    let sent = frame.grid.data_cells();
    let error_energy = cells.iter().zip(&sent).map(|(a, b)| (a - b).norm_sqr()).sum();
    let symbol_energy = sent.iter().map(Complex64::norm_sqr).sum();

    let hard = demap_symbols(&cells, config.modulation);
    let per_symbol = map.data_per_symbol() * config.modulation.bits_per_symbol();
    let sent_bits = frame::padded_bits(&interleaved, frame.data_symbols, per_symbol);
    let raw_errors = hard.iter().zip(&sent_bits).filter(|(a, b)| a != b).count();

    let llr: Vec<f64> = if config.soft_decision {
        let sigma2 = budget.noise_variance / budget.gain.norm_sqr().max(f64::MIN_POSITIVE);
        let weights: Vec<f64> = gains.iter().map(|g| g / sigma2.max(1e-12)).collect();
        demap_soft(&cells, &weights, config.modulation)
    } else {
        coding::hard_to_llr(&hard)
    };
    let llr = interleave::blockwise(&llr[..interleaved.len()], rows, cols, deinterleave).stage("deinterleave")?;
    let decoded = viterbi_decode(&llr[..coded.len()], config.coder).stage("decode")?;
    let info_errors = decoded.iter().zip(info).filter(|(a, b)| a != b).count();

    Ok(FrameStats {
        raw_errors,
        raw_bits: hard.len(),
        info_errors,
        info_bits: info.len(),
        error_energy,
        symbol_energy,
    })
}

/// Runs the whole chain for `payload` bytes. Frames are processed in
/// parallel, each with its own noise stream, so the result depends only
/// on the inputs.
pub fn run_link(
    config: &LinkConfig,
    payload: &[u8],
    layout: Option<&SurfaceLayout>,
    codeword: Option<&Codeword>,
) -> Result<LinkReport> {
    config.validate().stage("config")?;
    let map = SubcarrierMap::from_config(config).stage("config")?;
    let per_frame = config.info_bits_per_frame().stage("config")?;
    let gain = channel::ris_gain_dbi(config, layout, codeword).stage("channel")?;
    let budget = link_budget(config, gain).stage("channel")?;

    let bits = bytes_to_bits(payload);
    let chunks: Vec<&[u8]> = if bits.is_empty() {
        vec![&bits[..]]
    } else {
        bits.chunks(per_frame).collect()
    };
    let stats = chunks
        .par_iter()
        .enumerate()
        .map(|(i, info)| run_frame(config, &budget, &map, info, i))
        .collect::<Result<Vec<_>>>()?;

    let sum = |f: fn(&FrameStats) -> usize| stats.iter().map(f).sum::<usize>();
    let (raw_errors, raw_bits) = (sum(|s| s.raw_errors), sum(|s| s.raw_bits));
    let (info_errors, info_bits) = (sum(|s| s.info_errors), sum(|s| s.info_bits));
    let ratio = |e: usize, n: usize| if n == 0 { 0.0 } else { e as f64 / n as f64 };
    let err: f64 = stats.iter().map(|s| s.error_energy).sum();
    let sig: f64 = stats.iter().map(|s| s.symbol_energy).sum();
    let evm_db = if sig > 0.0 && err > 0.0 {
        10.0 * (err / sig).log10()
    } else {
        f64::NEG_INFINITY
    };
    Ok(LinkReport {
        raw_ber: ratio(raw_errors, raw_bits),
        coded_ber: ratio(info_errors, info_bits),
        evm_db,
        data_rate_bps: config.data_rate_bps()?,
        received_power_dbm: budget.received_power_dbm,
        ris_gain_dbi: budget.ris_gain_dbi,
        snr_db: budget.snr_db,
        payload_bits: info_bits,
        channel_bits: raw_bits,
        frames: chunks.len(),
    })
}

/// One link run per SNR point, in parallel.
pub fn ber_curve(
    config: &LinkConfig,
    snrs_db: &[f64],
    payload: &[u8],
    layout: Option<&SurfaceLayout>,
    codeword: Option<&Codeword>,
) -> Result<Vec<(f64, LinkReport)>> {
    // Resolve the surface gain once; it does not depend on the SNR.
    let mut base = config.clone();
    if base.ris_gain_dbi.is_none() {
        base.ris_gain_dbi = Some(channel::ris_gain_dbi(config, layout, codeword).stage("channel")?);
    }
    snrs_db
        .par_iter()
        .map(|&snr| {
            let c = LinkConfig {
                noise: NoiseSpec::SnrDb(snr),
                ..base.clone()
            };
            run_link(&c, payload, layout, codeword).map(|r| (snr, r))
        })
        .collect()
}

pub fn ber_curve_csv(points: &[(f64, LinkReport)]) -> String {
    let mut s = String::from("snr_db,raw_ber,coded_ber,evm_db\n");
    for (snr, r) in points {
        let _ = writeln!(s, "{snr},{:.6e},{:.6e},{:.4}", r.raw_ber, r.coded_ber, r.evm_db);
    }
    s
}

/// Gaussian tail probability.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Gray-coded square QAM bit error rate on AWGN at symbol SNR `snr_db`
/// (nearest-neighbour approximation, exact for QPSK).
pub fn awgn_ber(modulation: Modulation, snr_db: f64) -> f64 {
    let snr = 10f64.powf(snr_db / 10.0);
    let m = (1usize << modulation.bits_per_symbol()) as f64;
    let k = modulation.bits_per_symbol() as f64;
    4.0 / k * (1.0 - 1.0 / m.sqrt()) * q_function((3.0 * snr / (m - 1.0)).sqrt())
}
