//! Single-tap line-of-sight channel through the surface.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{LinkConfig, NoiseSpec};
use crate::error::{Result, RisError};
use crate::farfield::{eirp, gain_toward, AngularGrid};
use crate::surface::{Codeword, SurfaceLayout};
use crate::synthesis::{synthesize_pencil, SteeringTarget};
use crate::{wavelength, wavenumber};

/// Thermal noise density at 290 K.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

/// 20 log10(4 pi d / lambda).
pub fn free_space_path_loss_db(distance_m: f64, frequency_hz: f64) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(RisError::invalid("link distance", format!("must be positive, got {distance_m}")));
    }
    if !(frequency_hz > 0.0) {
        return Err(RisError::invalid("carrier", "must be positive"));
    }
    Ok(20.0 * (4.0 * PI * distance_m / wavelength(frequency_hz)).log10())
}

/// Static quantities of one link, shared by every frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub ris_gain_dbi: f64,
    pub eirp_dbm: f64,
    pub path_loss_db: f64,
    pub received_power_dbm: f64,
    /// Per used subcarrier; `None` when noise is disabled.
    pub snr_db: Option<f64>,
    /// Complex amplitude gain applied to the transmitted stream.
    pub gain: Complex64,
    /// Complex noise variance per sample (and per unitary bin).
    pub noise_variance: f64,
}

/// Gain of the surface towards the receiver, unless overridden.
pub fn ris_gain_dbi(config: &LinkConfig, layout: Option<&SurfaceLayout>, codeword: Option<&Codeword>) -> Result<f64> {
    if let Some(g) = config.ris_gain_dbi {
        return Ok(g);
    }
    let default_layout;
    let layout = match layout {
        Some(l) => l,
        None => {
            default_layout = SurfaceLayout::default();
            &default_layout
        }
    };
    let broadside;
    let codeword = match codeword {
        Some(c) => c,
        None => {
            broadside = synthesize_pencil(layout, &SteeringTarget::broadside(), &config.ris_model.element)?;
            &broadside
        }
    };
    gain_toward(
        layout,
        codeword,
        config.carrier_hz,
        &config.ris_model,
        &AngularGrid::default(),
        config.rx_theta_deg,
        config.rx_phi_deg,
    )
}

pub fn link_budget(config: &LinkConfig, ris_gain_dbi: f64) -> Result<LinkBudget> {
    let path_loss_db = free_space_path_loss_db(config.distance_m, config.carrier_hz)?;
    let eirp_dbm = eirp(config.tx_power_dbm, ris_gain_dbi);
    let received_power_dbm = eirp_dbm + config.rx_gain_dbi - path_loss_db;
    let amplitude = 10f64.powf((received_power_dbm - config.tx_power_dbm) / 20.0);
    let gain = Complex64::from_polar(amplitude, -wavenumber(config.carrier_hz) * config.distance_m);
    let snr_db = match config.noise {
        NoiseSpec::None => None,
        NoiseSpec::SnrDb(s) => Some(s),
        NoiseSpec::NoiseFigureDb(nf) => {
            let per_subcarrier = received_power_dbm - 10.0 * (config.used_subcarriers as f64).log10();
            let noise = THERMAL_NOISE_DBM_PER_HZ + 10.0 * config.subcarrier_spacing_hz.log10() + nf;
            Some(per_subcarrier - noise)
        }
    };
    let noise_variance = snr_db.map_or(0.0, |s| gain.norm_sqr() / 10f64.powf(s / 10.0));
    Ok(LinkBudget {
        ris_gain_dbi,
        eirp_dbm,
        path_loss_db,
        received_power_dbm,
        snr_db,
        gain,
        noise_variance,
    })
}

/// Applies gain, frequency offset, leading delay, a guard tail and white
/// Gaussian noise. `stream_id` selects an independent noise stream for
/// the same seed.
pub fn impair(stream: &[Complex64], config: &LinkConfig, budget: &LinkBudget, stream_id: u64) -> Vec<Complex64> {
    let n = config.fft_size as f64;
    let eps = config.cfo_subcarriers;
    let mut out = vec![Complex64::default(); config.timing_offset_samples];
    out.extend(stream.iter().enumerate().map(|(i, x)| {
        let rot = if eps == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, 2.0 * PI * eps * i as f64 / n)
        };
        x * budget.gain * rot
    }));
    out.extend(std::iter::repeat_n(Complex64::default(), config.cp_len));
    if budget.noise_variance > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(stream_id);
        let s = (budget.noise_variance / 2.0).sqrt();
        for x in out.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *x += Complex64::new(re * s, im * s);
        }
    }
    out
}

/// Full channel: budget from the surface gain, then impairments.
pub fn apply_channel(
    stream: &[Complex64],
    config: &LinkConfig,
    layout: Option<&SurfaceLayout>,
    codeword: Option<&Codeword>,
) -> Result<(Vec<Complex64>, LinkBudget)> {
    let budget = link_budget(config, ris_gain_dbi(config, layout, codeword)?)?;
    Ok((impair(stream, config, &budget, 0), budget))
}
