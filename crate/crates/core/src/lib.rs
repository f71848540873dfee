//! Computational model of a 2-bit reflective intelligent surface: element
//! states, surface geometry and bias frames, beam synthesis, far-field
//! metrics, and an OFDM link simulator through the surface.

pub mod element;
pub mod error;
pub mod farfield;
pub mod link;
pub mod surface;
pub mod synthesis;

pub use element::{Configuration, ElementModel, ElementState, PhaseCode};
pub use error::{Result, RisError};
pub use farfield::{AngularGrid, FarFieldPattern, GainReport, ModelOptions, PatternMetrics};
pub use surface::{Codeword, Point3, SurfaceLayout};
pub use synthesis::SteeringTarget;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn wavenumber(frequency_hz: f64) -> f64 {
    2.0 * std::f64::consts::PI * frequency_hz / SPEED_OF_LIGHT
}

pub fn wavelength(frequency_hz: f64) -> f64 {
    SPEED_OF_LIGHT / frequency_hz
}
