//! Single 2-bit surface element.
//!
//! Each element carries five PIN diodes. PIN1/PIN2 are driven in
//! complement and reverse the induced slot current (a ~180 degree step);
//! PIN3..PIN5 switch together and change the slot resonant length (a
//! further ~90 degree step). The four resulting configurations are
//! addressed here by a logical [`PhaseCode`] ordered by ascending
//! reflection phase.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Result, RisError};

/// Lumped-circuit model of the PIN diode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinDiodeModel {
    /// Forward-bias series resistance (ohm).
    pub r_on: f64,
    /// Package series inductance (H), present in both states.
    pub l_series: f64,
    /// Reverse-bias junction capacitance (F).
    pub c_off: f64,
    /// Reverse-bias series resistance (ohm).
    pub r_off: f64,
}

impl Default for PinDiodeModel {
    fn default() -> Self {
        Self {
            r_on: 0.8,
            l_series: 780e-12,
            c_off: 202e-15,
            r_off: 10.0,
        }
    }
}

impl PinDiodeModel {
    pub fn new(r_on: f64, l_series: f64, c_off: f64, r_off: f64) -> Result<Self> {
        for (name, v) in [
            ("r_on", r_on),
            ("l_series", l_series),
            ("c_off", c_off),
            ("r_off", r_off),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(RisError::invalid(
                    "pin diode parameter",
                    format!("{name} must be positive, got {v}"),
                ));
            }
        }
        Ok(Self {
            r_on,
            l_series,
            c_off,
            r_off,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiodeState {
    On,
    Off,
}

/// Series impedance of one diode at `frequency_hz`.
pub fn pin_impedance(model: &PinDiodeModel, state: DiodeState, frequency_hz: f64) -> Result<Complex64> {
    if !(frequency_hz > 0.0 && frequency_hz.is_finite()) {
        return Err(RisError::invalid(
            "frequency",
            format!("must be positive, got {frequency_hz}"),
        ));
    }
    let omega = 2.0 * PI * frequency_hz;
    let x_l = omega * model.l_series;
    Ok(match state {
        DiodeState::On => Complex64::new(model.r_on, x_l),
        DiodeState::Off => Complex64::new(model.r_off, x_l - 1.0 / (omega * model.c_off)),
    })
}

/// Hardware configuration numbering (1..=4) as tabulated for the element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Configuration {
    One,
    Two,
    Three,
    Four,
}

impl Configuration {
    pub const ALL: [Configuration; 4] = [
        Configuration::One,
        Configuration::Two,
        Configuration::Three,
        Configuration::Four,
    ];

    pub fn number(self) -> u8 {
        match self {
            Configuration::One => 1,
            Configuration::Two => 2,
            Configuration::Three => 3,
            Configuration::Four => 4,
        }
    }

    /// Simulated reflection phase at 2.3 GHz, unwrapped as tabulated (degrees).
    pub fn measured_phase_deg(self) -> f64 {
        match self {
            Configuration::One => -205.5,
            Configuration::Two => -383.2,
            Configuration::Three => -290.2,
            Configuration::Four => -110.3,
        }
    }

    /// Simulated reflection magnitude at 2.3 GHz (dB).
    pub fn measured_magnitude_db(self) -> f64 {
        match self {
            Configuration::One => -1.1,
            Configuration::Two => -1.2,
            Configuration::Three => -0.8,
            Configuration::Four => -0.8,
        }
    }

    /// PIN1..PIN5 bias states.
    pub fn pins(self) -> [DiodeState; 5] {
        use DiodeState::{Off, On};
        let (p1, p2) = match self {
            Configuration::One | Configuration::Three => (On, Off),
            Configuration::Two | Configuration::Four => (Off, On),
        };
        let rest = match self {
            Configuration::One | Configuration::Two => On,
            Configuration::Three | Configuration::Four => Off,
        };
        [p1, p2, rest, rest, rest]
    }
}

/// Logical 2-bit code. Codes 0..3 follow ascending reflection phase
/// (mod 360): 0 = Configuration 3, 1 = Configuration 1,
/// 2 = Configuration 4, 3 = Configuration 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhaseCode(u8);

impl PhaseCode {
    pub const ALL: [PhaseCode; 4] = [PhaseCode(0), PhaseCode(1), PhaseCode(2), PhaseCode(3)];

    pub fn new(code: u8) -> Result<Self> {
        if code < 4 {
            Ok(Self(code))
        } else {
            Err(RisError::invalid("phase code", format!("{code} is not a 2-bit value")))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn configuration(self) -> Configuration {
        match self.0 {
            0 => Configuration::Three,
            1 => Configuration::One,
            2 => Configuration::Four,
            _ => Configuration::Two,
        }
    }

    pub fn from_configuration(config: Configuration) -> Self {
        match config {
            Configuration::Three => Self(0),
            Configuration::One => Self(1),
            Configuration::Four => Self(2),
            Configuration::Two => Self(3),
        }
    }
}

/// State of one surface position: an active phase code or a removed element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementState {
    Active(PhaseCode),
    Masked,
}

impl ElementState {
    pub fn code(self) -> Option<PhaseCode> {
        match self {
            ElementState::Active(c) => Some(c),
            ElementState::Masked => None,
        }
    }

    pub fn is_masked(self) -> bool {
        matches!(self, ElementState::Masked)
    }
}

impl fmt::Display for ElementState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementState::Active(c) => write!(f, "{}", c.0),
            ElementState::Masked => f.write_str("-"),
        }
    }
}

/// Bias settings of PIN1..PIN5 for an active state.
pub fn state_to_pins(state: ElementState) -> Result<[DiodeState; 5]> {
    match state {
        ElementState::Active(code) => Ok(code.configuration().pins()),
        ElementState::Masked => Err(RisError::invalid(
            "element state",
            "masked elements carry no PIN settings",
        )),
    }
}

/// User-supplied per-code response, e.g. for a re-parameterized element.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseTable {
    pub phases_deg: [f64; 4],
    pub magnitudes_db: [f64; 4],
    /// Validity band (Hz); `None` means unrestricted.
    pub band_hz: Option<(f64, f64)>,
}

impl ResponseTable {
    pub fn new(phases_deg: [f64; 4], magnitudes_db: [f64; 4], band_hz: Option<(f64, f64)>) -> Result<Self> {
        if let Some(m) = magnitudes_db.iter().find(|m| !(**m <= 0.0)) {
            return Err(RisError::invalid(
                "response table",
                format!("magnitude {m} dB exceeds 0 dB (element is passive)"),
            ));
        }
        if let Some((lo, hi)) = band_hz {
            if !(lo > 0.0 && hi >= lo) {
                return Err(RisError::invalid("response table", "band must satisfy 0 < lo <= hi"));
            }
        }
        Ok(Self {
            phases_deg,
            magnitudes_db,
            band_hz,
        })
    }
}

/// Which element response is used by synthesis and radiation.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum ElementModel {
    /// Tabulated 2.3 GHz response, held flat over 2.0-2.6 GHz.
    #[default]
    Measured,
    /// Lossless, exact 90 degree steps.
    Ideal,
    Table(ResponseTable),
}

pub const MEASURED_BAND_HZ: (f64, f64) = (2.0e9, 2.6e9);

impl ElementModel {
    pub fn band_hz(&self) -> Option<(f64, f64)> {
        match self {
            ElementModel::Measured => Some(MEASURED_BAND_HZ),
            ElementModel::Ideal => None,
            ElementModel::Table(t) => t.band_hz,
        }
    }

    pub fn check_frequency(&self, frequency_hz: f64) -> Result<()> {
        if !(frequency_hz > 0.0 && frequency_hz.is_finite()) {
            return Err(RisError::invalid(
                "frequency",
                format!("must be positive, got {frequency_hz}"),
            ));
        }
        if let Some((lo, hi)) = self.band_hz() {
            if frequency_hz < lo || frequency_hz > hi {
                return Err(RisError::OutOfBand {
                    frequency_hz,
                    lo_hz: lo,
                    hi_hz: hi,
                });
            }
        }
        Ok(())
    }

    /// Reflection phase of `code` in degrees, unwrapped as stored.
    pub fn phase_deg(&self, code: PhaseCode) -> f64 {
        match self {
            ElementModel::Measured => code.configuration().measured_phase_deg(),
            ElementModel::Ideal => 90.0 * code.0 as f64,
            ElementModel::Table(t) => t.phases_deg[code.index()],
        }
    }

    pub fn magnitude_db(&self, code: PhaseCode) -> f64 {
        match self {
            ElementModel::Measured => code.configuration().measured_magnitude_db(),
            ElementModel::Ideal => 0.0,
            ElementModel::Table(t) => t.magnitudes_db[code.index()],
        }
    }

    /// Phases of codes 0..3 reduced to [0, 360).
    pub fn available_phases_deg(&self) -> [f64; 4] {
        PhaseCode::ALL.map(|c| self.phase_deg(c).rem_euclid(360.0))
    }

    /// Reflection coefficient of `code`; dispersion-free within the band.
    pub fn coefficient(&self, code: PhaseCode) -> Complex64 {
        let mag = 10f64.powf(self.magnitude_db(code) / 20.0);
        Complex64::from_polar(mag, self.phase_deg(code).to_radians())
    }
}

/// Complex reflection coefficient of `state` at `frequency_hz`.
pub fn element_response(state: ElementState, frequency_hz: f64, model: &ElementModel) -> Result<Complex64> {
    let code = state.code().ok_or_else(|| {
        RisError::invalid("element state", "masked elements have no reflection response")
    })?;
    model.check_frequency(frequency_hz)?;
    Ok(model.coefficient(code))
}
