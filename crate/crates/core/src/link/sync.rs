//! Repeated-half timing and fractional frequency-offset estimation.

use num_complex::Complex64;

use super::LinkConfig;
use crate::error::{Result, RisError};

/// Peak timing metric below which no frame is declared.
pub const DETECTION_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncResult {
    /// Estimated first sample of the preamble's cyclic prefix.
    pub frame_start: usize,
    /// Fractional carrier offset in subcarrier spacings.
    pub cfo_subcarriers: f64,
    pub peak_metric: f64,
}

/// Timing metric |P(d)|^2 / R(d)^2 and the half correlation P(d) for
/// every candidate start `d`.
pub fn timing_metric(stream: &[Complex64], half: usize) -> (Vec<f64>, Vec<Complex64>) {
    if stream.len() < 2 * half {
        return (Vec::new(), Vec::new());
    }
    let count = stream.len() - 2 * half + 1;
    let mut corr = vec![Complex64::default(); stream.len() - half + 1];
    for n in 0..stream.len() - half {
        corr[n + 1] = corr[n] + stream[n].conj() * stream[n + half];
    }
    let mut energy = vec![0.0; stream.len() + 1];
    for (n, x) in stream.iter().enumerate() {
        energy[n + 1] = energy[n] + x.norm_sqr();
    }
    let p: Vec<Complex64> = (0..count).map(|d| corr[d + half] - corr[d]).collect();
    let r: Vec<f64> = (0..count).map(|d| energy[d + 2 * half] - energy[d + half]).collect();
    let floor = 1e-9 * r.iter().fold(0.0f64, |a, &b| a.max(b));
    let m = p
        .iter()
        .zip(&r)
        .map(|(p, &r)| if r > floor && r > 0.0 { p.norm_sqr() / (r * r) } else { 0.0 })
        .collect();
    (m, p)
}

/// The metric is averaged over windows one prefix long; the best window
/// covers the plateau, and its start is the frame start. The frequency
/// offset comes from the half correlation summed over that window.
pub fn synchronize(stream: &[Complex64], config: &LinkConfig) -> Result<SyncResult> {
    let half = config.fft_size / 2;
    let (m, p) = timing_metric(stream, half);
    let w = config.cp_len + 1;
    let none = |peak| RisError::NoFrameFound {
        peak_metric: peak,
        threshold: DETECTION_THRESHOLD,
    };
    if m.len() < w {
        return Err(none(m.iter().fold(0.0, |a: f64, &b| a.max(b))));
    }
    let mut acc: f64 = m[..w].iter().sum();
    let (mut best, mut best_acc) = (0, acc);
    for d in 1..=m.len() - w {
        acc += m[d + w - 1] - m[d - 1];
        if acc > best_acc {
            best = d;
            best_acc = acc;
        }
    }
    let peak = best_acc / w as f64;
    if !(peak >= DETECTION_THRESHOLD) {
        return Err(none(peak));
    }
    let corr: Complex64 = p[best..best + w].iter().sum();
    Ok(SyncResult {
        frame_start: best,
        cfo_subcarriers: corr.arg() / std::f64::consts::PI,
        peak_metric: peak,
    })
}

/// Removes a carrier offset of `cfo_subcarriers` spacings.
pub fn correct_cfo(stream: &mut [Complex64], cfo_subcarriers: f64, fft_size: usize) {
    let w = -2.0 * std::f64::consts::PI * cfo_subcarriers / fft_size as f64;
    for (n, x) in stream.iter_mut().enumerate() {
        *x *= Complex64::from_polar(1.0, w * n as f64);
    }
}
