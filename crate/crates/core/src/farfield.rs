//! Far-field pattern engine and metric extraction.
//!
//! The reflected field of the surface is the sum of the element
//! contributions, each illuminated by the feed and re-radiated with the
//! element's reflection coefficient:
//!
//! ```text
//! E(theta, phi) = cos^qe(theta) * sum_mn [cos^qf(theta_f) / d] exp(-j k d) G_mn exp(+j k r.u)
//! ```
//!
//! Only the front hemisphere radiates; the ground plane suppresses the back
//! lobe, so the field behind the surface is taken as zero.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::element::{element_response, ElementModel};
use crate::error::{Result, RisError};
use crate::surface::{Codeword, Point3, SurfaceLayout};
use crate::synthesis::{self, direction, fold_deg, SteeringTarget};
use crate::{wavelength, wavenumber};

/// Element model plus the gain bookkeeping switches.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOptions {
    pub element: ElementModel,
    /// Include feed spillover in the reported gain.
    pub spillover: bool,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            element: ElementModel::Measured,
            spillover: true,
        }
    }
}

impl ModelOptions {
    pub fn ideal() -> Self {
        Self {
            element: ElementModel::Ideal,
            spillover: false,
        }
    }
}

/// Observation grid in degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularGrid {
    pub theta_deg: Vec<f64>,
    pub phi_deg: Vec<f64>,
}

pub const DEFAULT_GRID_STEP_DEG: f64 = 0.5;

impl AngularGrid {
    pub fn new(theta_deg: Vec<f64>, phi_deg: Vec<f64>) -> Result<Self> {
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        if theta_deg.is_empty() || phi_deg.is_empty() || !increasing(&theta_deg) || !increasing(&phi_deg) {
            return Err(RisError::invalid("angular grid", "axes must be non-empty and strictly increasing"));
        }
        if theta_deg[0] < 0.0 || *theta_deg.last().unwrap() > 90.0 {
            return Err(RisError::invalid("angular grid", "theta must lie in [0, 90] deg"));
        }
        Ok(Self { theta_deg, phi_deg })
    }

    /// Full front hemisphere: theta 0..=90, phi 0..=360 (endpoints included).
    pub fn hemisphere(theta_step_deg: f64, phi_step_deg: f64) -> Result<Self> {
        if !(theta_step_deg > 0.0 && phi_step_deg > 0.0) {
            return Err(RisError::invalid("angular grid", "steps must be positive"));
        }
        let axis = |stop: f64, step: f64| -> Vec<f64> {
            let n = (stop / step).round() as usize;
            (0..=n).map(|i| i as f64 * stop / n as f64).collect()
        };
        Self::new(axis(90.0, theta_step_deg), axis(360.0, phi_step_deg))
    }

    pub fn len(&self) -> usize {
        self.theta_deg.len() * self.phi_deg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn max_step(&self) -> f64 {
        let step = |v: &[f64]| v.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        step(&self.theta_deg).max(step(&self.phi_deg))
    }

    fn covers_hemisphere(&self) -> bool {
        let eps = 1e-9;
        self.theta_deg[0].abs() < eps
            && (self.theta_deg.last().unwrap() - 90.0).abs() < eps
            && self.phi_deg[0].abs() < eps
            && (self.phi_deg.last().unwrap() - 360.0).abs() < eps
    }
}

impl Default for AngularGrid {
    fn default() -> Self {
        Self::hemisphere(DEFAULT_GRID_STEP_DEG, DEFAULT_GRID_STEP_DEG).expect("valid default grid")
    }
}

/// Active elements of a layout evaluated at one frequency.
pub(crate) struct ElementArray {
    k: f64,
    element_exponent: f64,
    rows: usize,
    cols: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    /// (row, col) of each active element, row-major
    active: Vec<(usize, usize)>,
    /// illumination * exp(-j k d) per active element
    feed: Vec<Complex64>,
}

impl ElementArray {
    pub(crate) fn new(layout: &SurfaceLayout, frequency_hz: f64) -> Self {
        let k = wavenumber(frequency_hz);
        let x = (0..layout.cols()).map(|c| layout.position_unchecked(0, c).x).collect();
        let y = (0..layout.rows()).map(|r| layout.position_unchecked(r, 0).y).collect();
        let active: Vec<_> = layout.active_elements().collect();
        let feed = active
            .iter()
            .map(|&(r, c)| {
                let (a, d) = layout.illumination_unchecked(r, c);
                Complex64::from_polar(a, -k * d)
            })
            .collect();
        Self {
            k,
            element_exponent: layout.element_exponent(),
            rows: layout.rows(),
            cols: layout.cols(),
            x,
            y,
            active,
            feed,
        }
    }

    fn element_factor(&self, theta_deg: f64) -> f64 {
        if theta_deg > 90.0 {
            return 0.0;
        }
        let c = theta_deg.to_radians().cos().max(0.0);
        if self.element_exponent == 0.0 {
            1.0
        } else {
            c.powf(self.element_exponent)
        }
    }

    /// Contribution of each active element, per unit reflection coefficient,
    /// towards (theta, phi).
    pub(crate) fn steering_row(&self, theta_deg: f64, phi_deg: f64) -> Vec<Complex64> {
        let u = direction(theta_deg, phi_deg);
        let ef = self.element_factor(theta_deg);
        self.active
            .iter()
            .zip(&self.feed)
            .map(|(&(r, c), f)| f * Complex64::from_polar(ef, self.k * (self.x[c] * u.x + self.y[r] * u.y)))
            .collect()
    }

    /// Dense rows x cols matrix of feed-weighted reflection coefficients.
    fn weights(&self, reflection: &[Complex64]) -> Vec<Complex64> {
        let mut w = vec![Complex64::new(0.0, 0.0); self.rows * self.cols];
        for ((&(r, c), f), g) in self.active.iter().zip(&self.feed).zip(reflection) {
            w[r * self.cols + c] = f * g;
        }
        w
    }

    fn field(&self, weights: &[Complex64], theta_deg: f64, phi_deg: f64, ex: &mut [Complex64], ey: &mut [Complex64]) -> Complex64 {
        let u = direction(theta_deg, phi_deg);
        for (e, x) in ex.iter_mut().zip(&self.x) {
            *e = Complex64::from_polar(1.0, self.k * x * u.x);
        }
        for (e, y) in ey.iter_mut().zip(&self.y) {
            *e = Complex64::from_polar(1.0, self.k * y * u.y);
        }
        let mut sum = Complex64::new(0.0, 0.0);
        for (r, eyr) in ey.iter().enumerate() {
            let row = &weights[r * self.cols..(r + 1) * self.cols];
            let s: Complex64 = row.iter().zip(ex.iter()).map(|(w, e)| w * e).sum();
            sum += eyr * s;
        }
        sum * self.element_factor(theta_deg)
    }

    fn field_at(&self, reflection: &[Complex64], theta_deg: f64, phi_deg: f64) -> Complex64 {
        let w = self.weights(reflection);
        let mut ex = vec![Complex64::new(0.0, 0.0); self.cols];
        let mut ey = vec![Complex64::new(0.0, 0.0); self.rows];
        self.field(&w, theta_deg, phi_deg, &mut ex, &mut ey)
    }

    fn radiate(&self, reflection: &[Complex64], grid: &AngularGrid) -> Vec<Complex64> {
        let w = self.weights(reflection);
        let n_phi = grid.phi_deg.len();
        let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
        out.par_chunks_mut(n_phi).zip(grid.theta_deg.par_iter()).for_each(|(row, &theta)| {
            let mut ex = vec![Complex64::new(0.0, 0.0); self.cols];
            let mut ey = vec![Complex64::new(0.0, 0.0); self.rows];
            for (e, &phi) in row.iter_mut().zip(&grid.phi_deg) {
                *e = self.field(&w, theta, phi, &mut ex, &mut ey);
            }
        });
        out
    }
}

/// Reflection coefficients of the active elements of `codeword`, row-major.
pub fn reflection_coefficients(
    layout: &SurfaceLayout,
    codeword: &Codeword,
    frequency_hz: f64,
    model: &ElementModel,
) -> Result<Vec<Complex64>> {
    codeword.validate(layout)?;
    layout
        .active_elements()
        .map(|(r, c)| element_response(codeword.get(r, c), frequency_hz, model))
        .collect()
}

/// Complex far-field samples on a (theta, phi) grid, theta-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldPattern {
    grid: AngularGrid,
    field: Vec<Complex64>,
    frequency_hz: f64,
    pub description: String,
}

impl FarFieldPattern {
    pub fn new(grid: AngularGrid, field: Vec<Complex64>, frequency_hz: f64, description: impl Into<String>) -> Result<Self> {
        if field.len() != grid.len() {
            return Err(RisError::DimensionMismatch {
                expected: format!("{} samples", grid.len()),
                got: format!("{} samples", field.len()),
            });
        }
        Ok(Self {
            grid,
            field,
            frequency_hz,
            description: description.into(),
        })
    }

    /// Pattern sampled from a closed-form field.
    pub fn from_fn(grid: AngularGrid, frequency_hz: f64, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let field = grid
            .theta_deg
            .iter()
            .flat_map(|&t| grid.phi_deg.iter().map(move |&p| (t, p)))
            .map(|(t, p)| f(t, p))
            .collect();
        Self {
            grid,
            field,
            frequency_hz,
            description: "synthetic".into(),
        }
    }

    pub fn grid(&self) -> &AngularGrid {
        &self.grid
    }

    pub fn theta_deg(&self) -> &[f64] {
        &self.grid.theta_deg
    }

    pub fn phi_deg(&self) -> &[f64] {
        &self.grid.phi_deg
    }

    pub fn frequency_hz(&self) -> f64 {
        self.frequency_hz
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.field
    }

    pub fn at(&self, i_theta: usize, i_phi: usize) -> Complex64 {
        self.field[i_theta * self.grid.phi_deg.len() + i_phi]
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            field: self.field.iter().map(|e| e * factor).collect(),
            ..self.clone()
        }
    }

    /// Grid point of maximum |E|; the first one wins among equals.
    pub fn peak(&self) -> (usize, usize, f64) {
        let n_phi = self.grid.phi_deg.len();
        let (idx, val) = self
            .field
            .iter()
            .map(|e| e.norm_sqr())
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
        (idx / n_phi, idx % n_phi, val)
    }

    /// Bilinear interpolation of |E|^2 towards a unit direction; zero behind
    /// the surface or outside the sampled region.
    pub fn intensity_toward(&self, dir: &Point3) -> f64 {
        if dir.z < 0.0 {
            return 0.0;
        }
        let theta = dir.z.clamp(-1.0, 1.0).acos().to_degrees();
        let mut phi = dir.y.atan2(dir.x).to_degrees().rem_euclid(360.0);
        let (th, ph) = (&self.grid.theta_deg, &self.grid.phi_deg);
        if phi < ph[0] {
            phi += 360.0;
        }
        let locate = |axis: &[f64], v: f64| -> Option<(usize, f64)> {
            if axis.len() == 1 {
                return ((axis[0] - v).abs() < 1e-9).then_some((0, 0.0));
            }
            if v < axis[0] - 1e-9 || v > axis[axis.len() - 1] + 1e-9 {
                return None;
            }
            let i = axis.partition_point(|&a| a <= v).clamp(1, axis.len() - 1) - 1;
            let t = ((v - axis[i]) / (axis[i + 1] - axis[i])).clamp(0.0, 1.0);
            Some((i, t))
        };
        let (Some((i, ti)), Some((j, tj))) = (locate(th, theta), locate(ph, phi)) else {
            return 0.0;
        };
        let i1 = (i + 1).min(th.len() - 1);
        let j1 = (j + 1).min(ph.len() - 1);
        let v = |a: usize, b: usize| self.at(a, b).norm_sqr();
        (1.0 - ti) * ((1.0 - tj) * v(i, j) + tj * v(i, j1)) + ti * ((1.0 - tj) * v(i1, j) + tj * v(i1, j1))
    }

    /// Comma-separated export: header then `theta,phi,re,im,mag_db`, where
    /// `mag_db` is relative to the pattern peak.
    pub fn to_csv(&self) -> String {
        let (_, _, peak) = self.peak();
        let mut out = String::from("theta,phi,re,im,mag_db\n");
        for (i, t) in self.grid.theta_deg.iter().enumerate() {
            for (j, p) in self.grid.phi_deg.iter().enumerate() {
                let e = self.at(i, j);
                let db = if peak > 0.0 && e.norm_sqr() > 0.0 {
                    10.0 * (e.norm_sqr() / peak).log10()
                } else {
                    -300.0
                };
                let _ = writeln!(out, "{t},{p},{:.9e},{:.9e},{db:.4}", e.re, e.im);
            }
        }
        out
    }
}

/// Far field of `codeword` at `frequency_hz`.
pub fn radiate(
    layout: &SurfaceLayout,
    codeword: &Codeword,
    frequency_hz: f64,
    grid: &AngularGrid,
    model: &ElementModel,
) -> Result<FarFieldPattern> {
    let gamma = reflection_coefficients(layout, codeword, frequency_hz, model)?;
    radiate_excitation(layout, &gamma, frequency_hz, grid)
}

/// Far field for arbitrary per-element reflection coefficients (active
/// elements, row-major), e.g. continuous phases.
pub fn radiate_excitation(
    layout: &SurfaceLayout,
    reflection: &[Complex64],
    frequency_hz: f64,
    grid: &AngularGrid,
) -> Result<FarFieldPattern> {
    check_excitation(layout, reflection, frequency_hz)?;
    let array = ElementArray::new(layout, frequency_hz);
    let field = array.radiate(reflection, grid);
    FarFieldPattern::new(
        grid.clone(),
        field,
        frequency_hz,
        format!(
            "{}x{} surface, {} active, {:.6} GHz",
            layout.rows(),
            layout.cols(),
            layout.active_count(),
            frequency_hz / 1e9
        ),
    )
}

/// Field towards a single direction.
pub fn field_toward(layout: &SurfaceLayout, reflection: &[Complex64], frequency_hz: f64, theta_deg: f64, phi_deg: f64) -> Result<Complex64> {
    check_excitation(layout, reflection, frequency_hz)?;
    Ok(ElementArray::new(layout, frequency_hz).field_at(reflection, theta_deg, phi_deg))
}

fn check_excitation(layout: &SurfaceLayout, reflection: &[Complex64], frequency_hz: f64) -> Result<()> {
    if reflection.len() != layout.active_count() {
        return Err(RisError::DimensionMismatch {
            expected: format!("{} active elements", layout.active_count()),
            got: format!("{} coefficients", reflection.len()),
        });
    }
    if !(frequency_hz > 0.0 && frequency_hz.is_finite()) {
        return Err(RisError::invalid("frequency", format!("must be positive, got {frequency_hz}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Directivity {
    pub dbi: f64,
    pub theta_deg: f64,
    pub phi_deg: f64,
}

/// Integral of |E|^2 over the sampled hemisphere (trapezoidal rule).
pub fn radiated_power(pattern: &FarFieldPattern) -> Result<f64> {
    let grid = pattern.grid();
    if !grid.covers_hemisphere() {
        return Err(RisError::invalid(
            "pattern grid",
            "directivity needs theta 0..=90 and phi 0..=360",
        ));
    }
    if grid.max_step() > 1.0 + 1e-9 {
        return Err(RisError::invalid("pattern grid", "directivity needs steps <= 1 deg"));
    }
    let th: Vec<f64> = grid.theta_deg.iter().map(|t| t.to_radians()).collect();
    let ph: Vec<f64> = grid.phi_deg.iter().map(|p| p.to_radians()).collect();
    let trap = |x: &[f64], y: &[f64]| -> f64 { x.windows(2).zip(y.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum() };
    let ring: Vec<f64> = (0..th.len())
        .map(|i| {
            let row: Vec<f64> = (0..ph.len()).map(|j| pattern.at(i, j).norm_sqr()).collect();
            trap(&ph, &row) * th[i].sin()
        })
        .collect();
    let p = trap(&th, &ring);
    if !(p > 0.0) {
        return Err(RisError::EmptyPattern);
    }
    Ok(p)
}

/// Peak directivity 4 pi |E_max|^2 / P_rad and its direction.
pub fn directivity(pattern: &FarFieldPattern) -> Result<Directivity> {
    let p = radiated_power(pattern)?;
    let (i, j, peak) = pattern.peak();
    Ok(Directivity {
        dbi: 10.0 * (4.0 * PI * peak / p).log10(),
        theta_deg: pattern.theta_deg()[i],
        phi_deg: pattern.phi_deg()[j],
    })
}

/// Directive gain (dBi) towards an arbitrary front-hemisphere direction,
/// with the field evaluated exactly rather than interpolated.
pub fn directive_gain_toward(
    pattern: &FarFieldPattern,
    layout: &SurfaceLayout,
    reflection: &[Complex64],
    theta_deg: f64,
    phi_deg: f64,
) -> Result<f64> {
    let p = radiated_power(pattern)?;
    let e = field_toward(layout, reflection, pattern.frequency_hz(), theta_deg, phi_deg)?;
    Ok(10.0 * (4.0 * PI * e.norm_sqr() / p).log10())
}

/// Illumination-weighted mean of |G|^2, in dB.
pub fn element_loss_db(layout: &SurfaceLayout, codeword: &Codeword, frequency_hz: f64, model: &ElementModel) -> Result<f64> {
    let gamma = reflection_coefficients(layout, codeword, frequency_hz, model)?;
    let (mut num, mut den) = (0.0, 0.0);
    for ((r, c), g) in layout.active_elements().zip(&gamma) {
        let (a, _) = layout.illumination_unchecked(r, c);
        num += a * a * g.norm_sqr();
        den += a * a;
    }
    Ok(10.0 * (num / den).log10())
}

/// Fraction of the cos^(2 qf) feed power that lands on the active cells.
pub fn spillover_efficiency(layout: &SurfaceLayout) -> f64 {
    const SUB: usize = 12;
    let q = layout.feed_exponent();
    let feed = layout.feed_position();
    let s = layout.spacing_m();
    let h = s / SUB as f64;
    let mut intercepted = 0.0;
    for (r, c) in layout.active_elements() {
        let p = layout.position_unchecked(r, c);
        for i in 0..SUB {
            for j in 0..SUB {
                let x = p.x - s / 2.0 + (i as f64 + 0.5) * h;
                let y = p.y - s / 2.0 + (j as f64 + 0.5) * h;
                let d2 = (x - feed.x).powi(2) + (y - feed.y).powi(2) + feed.z * feed.z;
                let cos_t = feed.z / d2.sqrt();
                // intensity cos^(2q) / d^2 times the projected cell area
                intercepted += cos_t.powf(2.0 * q) * cos_t / d2 * h * h;
            }
        }
    }
    let total = 2.0 * PI / (2.0 * q + 1.0);
    (intercepted / total).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainReport {
    pub directivity_dbi: f64,
    pub element_loss_db: f64,
    pub spillover_db: f64,
    pub spillover_enabled: bool,
    /// Directivity plus element loss, plus spillover when enabled.
    pub gain_dbi: f64,
    pub gain_without_spillover_dbi: f64,
    pub gain_with_spillover_dbi: f64,
}

impl GainReport {
    fn compose(directivity_dbi: f64, element_loss_db: f64, spillover_db: f64, spillover_enabled: bool) -> Self {
        let without = directivity_dbi + element_loss_db;
        let with = without + spillover_db;
        Self {
            directivity_dbi,
            element_loss_db,
            spillover_db,
            spillover_enabled,
            gain_dbi: if spillover_enabled { with } else { without },
            gain_without_spillover_dbi: without,
            gain_with_spillover_dbi: with,
        }
    }
}

pub fn gain(pattern: &FarFieldPattern, layout: &SurfaceLayout, codeword: &Codeword, model: &ModelOptions) -> Result<GainReport> {
    let d = directivity(pattern)?;
    let el = element_loss_db(layout, codeword, pattern.frequency_hz(), &model.element)?;
    let sp = 10.0 * spillover_efficiency(layout).log10();
    Ok(GainReport::compose(d.dbi, el, sp, model.spillover))
}

/// Gain towards (theta, phi) rather than the pattern peak.
pub fn gain_toward(
    layout: &SurfaceLayout,
    codeword: &Codeword,
    frequency_hz: f64,
    model: &ModelOptions,
    grid: &AngularGrid,
    theta_deg: f64,
    phi_deg: f64,
) -> Result<f64> {
    let gamma = reflection_coefficients(layout, codeword, frequency_hz, &model.element)?;
    let pattern = radiate_excitation(layout, &gamma, frequency_hz, grid)?;
    let dg = directive_gain_toward(&pattern, layout, &gamma, theta_deg, phi_deg)?;
    let el = element_loss_db(layout, codeword, frequency_hz, &model.element)?;
    let sp = 10.0 * spillover_efficiency(layout).log10();
    Ok(GainReport::compose(dg, el, sp, model.spillover).gain_dbi)
}

/// One principal-plane cut through the pattern peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutMetrics {
    pub hpbw_deg: Option<f64>,
    /// Largest level outside the main lobe, dB relative to the peak.
    pub sidelobe_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternMetrics {
    pub peak_theta_deg: f64,
    pub peak_phi_deg: f64,
    /// False when the peak lies on the grid boundary (theta = 90).
    pub peak_valid: bool,
    pub directivity_dbi: f64,
    pub gain_dbi: f64,
    /// Elevation cut (plane of the peak azimuth), then the orthogonal cut.
    pub cuts: [CutMetrics; 2],
    pub sidelobe_level_db: f64,
    pub aperture_efficiency: f64,
}

impl PatternMetrics {
    /// Flat `key = value` text.
    pub fn to_key_values(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("nan".to_string(), |v| format!("{v:.4}"));
        let mut s = String::new();
        let _ = writeln!(s, "peak_theta_deg = {:.4}", self.peak_theta_deg);
        let _ = writeln!(s, "peak_phi_deg = {:.4}", self.peak_phi_deg);
        let _ = writeln!(s, "peak_valid = {}", self.peak_valid);
        let _ = writeln!(s, "directivity_dbi = {:.4}", self.directivity_dbi);
        let _ = writeln!(s, "gain_dbi = {:.4}", self.gain_dbi);
        let _ = writeln!(s, "hpbw_cut1_deg = {}", opt(self.cuts[0].hpbw_deg));
        let _ = writeln!(s, "hpbw_cut2_deg = {}", opt(self.cuts[1].hpbw_deg));
        let _ = writeln!(s, "sll_cut1_db = {}", opt(self.cuts[0].sidelobe_db));
        let _ = writeln!(s, "sll_cut2_db = {}", opt(self.cuts[1].sidelobe_db));
        let _ = writeln!(s, "sll_db = {:.4}", self.sidelobe_level_db);
        let _ = writeln!(s, "aperture_efficiency = {:.6}", self.aperture_efficiency);
        s
    }
}

fn analyse_cut(samples: &[f64], step_deg: f64) -> CutMetrics {
    let n = samples.len();
    let c = n / 2;
    let peak = samples[c];
    let db = |v: f64| if v > 0.0 { 10.0 * (v / peak).log10() } else { -300.0 };

    let crossing = |dir: isize| -> Option<f64> {
        let mut i = c as isize;
        loop {
            let j = i + dir;
            if j < 0 || j >= n as isize {
                return None;
            }
            let (a, b) = (db(samples[i as usize]), db(samples[j as usize]));
            if b < -3.0 {
                let frac = (a + 3.0) / (a - b);
                return Some(((i - c as isize) as f64 + dir as f64 * frac).abs() * step_deg);
            }
            i = j;
        }
    };
    let hpbw_deg = match (crossing(-1), crossing(1)) {
        (Some(l), Some(r)) => Some(l + r),
        _ => None,
    };

    let null = |dir: isize| -> usize {
        let mut i = c as isize;
        while i + dir >= 0 && i + dir < n as isize && samples[(i + dir) as usize] < samples[i as usize] {
            i += dir;
        }
        i as usize
    };
    let (lo, hi) = (null(-1), null(1));
    let outside = samples[..lo].iter().chain(&samples[hi + 1..]).copied().fold(f64::NEG_INFINITY, f64::max);
    let sidelobe_db = (outside > f64::NEG_INFINITY).then(|| db(outside));
    CutMetrics { hpbw_deg, sidelobe_db }
}

/// Beamwidths, sidelobe levels and efficiency of `pattern`. Without a
/// gain report the gain is taken equal to the directivity.
pub fn metrics(pattern: &FarFieldPattern, layout: &SurfaceLayout, gain: Option<&GainReport>) -> Result<PatternMetrics> {
    let d = directivity(pattern)?;
    let (i, _, _) = pattern.peak();
    let peak_valid = i + 1 < pattern.theta_deg().len() || pattern.theta_deg()[i] < 90.0;
    let (theta, phi) = (d.theta_deg.to_radians(), if d.theta_deg == 0.0 { 0.0 } else { d.phi_deg.to_radians() });
    let p = direction(d.theta_deg, phi.to_degrees());
    let a = Point3::new(theta.cos() * phi.cos(), theta.cos() * phi.sin(), -theta.sin());
    let b = Point3::new(-phi.sin(), phi.cos(), 0.0);

    let step = pattern
        .theta_deg()
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min)
        .min(1.0);
    let half = (90.0 / step).round() as isize;
    let cut = |axis: &Point3| -> Vec<f64> {
        (-half..=half)
            .map(|s| {
                let (st, ct) = (s as f64 * step).to_radians().sin_cos();
                let dir = Point3::new(p.x * ct + axis.x * st, p.y * ct + axis.y * st, p.z * ct + axis.z * st);
                pattern.intensity_toward(&dir)
            })
            .collect()
    };
    let cuts = [analyse_cut(&cut(&a), step), analyse_cut(&cut(&b), step)];
    let sidelobe_level_db = cuts
        .iter()
        .filter_map(|c| c.sidelobe_db)
        .fold(f64::NEG_INFINITY, f64::max);
    let gain_dbi = gain.map_or(d.dbi, |g| g.gain_dbi);
    Ok(PatternMetrics {
        peak_theta_deg: d.theta_deg,
        peak_phi_deg: if d.theta_deg == 0.0 { 0.0 } else { d.phi_deg },
        peak_valid,
        directivity_dbi: d.dbi,
        gain_dbi,
        cuts,
        sidelobe_level_db,
        aperture_efficiency: aperture_efficiency(gain_dbi, layout.aperture_area_m2(), pattern.frequency_hz())?,
    })
}

/// Realized gain over the uniform-aperture gain 4 pi A / lambda^2.
pub fn aperture_efficiency(gain_dbi: f64, aperture_area_m2: f64, frequency_hz: f64) -> Result<f64> {
    if !(aperture_area_m2 > 0.0) || !(frequency_hz > 0.0) {
        return Err(RisError::invalid("aperture efficiency", "area and frequency must be positive"));
    }
    let lambda = wavelength(frequency_hz);
    Ok(10f64.powf(gain_dbi / 10.0) * lambda * lambda / (4.0 * PI * aperture_area_m2))
}

/// Gain of a uniformly illuminated aperture, 10 log10(4 pi A / lambda^2).
pub fn aperture_gain_bound_dbi(aperture_area_m2: f64, frequency_hz: f64) -> f64 {
    let lambda = wavelength(frequency_hz);
    10.0 * (4.0 * PI * aperture_area_m2 / (lambda * lambda)).log10()
}

pub fn eirp(transmit_power_dbm: f64, gain_dbi: f64) -> f64 {
    transmit_power_dbm + gain_dbi
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub frequency_hz: f64,
    pub gain_dbi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    pub peak_frequency_hz: f64,
    pub peak_gain_dbi: f64,
    pub lower_edge_hz: f64,
    pub upper_edge_hz: f64,
    /// Contiguous span around the peak with gain >= peak - 1 dB.
    pub bandwidth_hz: f64,
    /// Bandwidth over the design frequency.
    pub fractional_bandwidth: f64,
    /// The span reached the start of the swept band without crossing.
    pub lower_truncated: bool,
    pub upper_truncated: bool,
    /// Single-point sweep; bandwidth is zero.
    pub degenerate: bool,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("freq_hz,gain_dbi\n");
        for p in &self.points {
            let _ = writeln!(s, "{},{:.6}", p.frequency_hz, p.gain_dbi);
        }
        s
    }

    pub fn gain_at(&self, frequency_hz: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|p| (p.frequency_hz - frequency_hz).abs() < 1.0)
            .map(|p| p.gain_dbi)
    }
}

/// Gain versus frequency for a fixed codeword and the 1-dB gain bandwidth.
pub fn frequency_sweep(
    layout: &SurfaceLayout,
    codeword: &Codeword,
    model: &ModelOptions,
    start_hz: f64,
    stop_hz: f64,
    step_hz: f64,
    grid: &AngularGrid,
) -> Result<SweepReport> {
    if !(stop_hz >= start_hz) || !(step_hz > 0.0) {
        return Err(RisError::invalid("sweep band", "need start <= stop and a positive step"));
    }
    model.element.check_frequency(start_hz)?;
    model.element.check_frequency(stop_hz)?;
    let n = ((stop_hz - start_hz) / step_hz + 1e-9).floor() as usize + 1;
    let freqs: Vec<f64> = (0..n).map(|i| start_hz + i as f64 * step_hz).collect();
    let points = freqs
        .iter()
        .map(|&f| {
            let pattern = radiate(layout, codeword, f, grid, &model.element)?;
            Ok(SweepPoint {
                frequency_hz: f,
                gain_dbi: gain(&pattern, layout, codeword, model)?.gain_dbi,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let (ip, peak) = points
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, p)| if p.gain_dbi > b.1 { (i, p.gain_dbi) } else { b });
    let floor = peak - 1.0;
    let edge = |dir: isize| -> (f64, bool) {
        let mut i = ip as isize;
        loop {
            let j = i + dir;
            if j < 0 || j >= points.len() as isize {
                return (points[i as usize].frequency_hz, true);
            }
            let (a, b) = (&points[i as usize], &points[j as usize]);
            if b.gain_dbi < floor {
                let t = (a.gain_dbi - floor) / (a.gain_dbi - b.gain_dbi);
                return (a.frequency_hz + t * (b.frequency_hz - a.frequency_hz), false);
            }
            i = j;
        }
    };
    let (lower, lower_truncated) = edge(-1);
    let (upper, upper_truncated) = edge(1);
    let degenerate = points.len() == 1;
    let bandwidth_hz = if degenerate { 0.0 } else { upper - lower };
    Ok(SweepReport {
        peak_frequency_hz: points[ip].frequency_hz,
        peak_gain_dbi: peak,
        lower_edge_hz: lower,
        upper_edge_hz: upper,
        bandwidth_hz,
        fractional_bandwidth: bandwidth_hz / layout.design_frequency_hz(),
        lower_truncated: lower_truncated && !degenerate,
        upper_truncated: upper_truncated && !degenerate,
        degenerate,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    /// Commanded angle in the scan plane (signed).
    pub angle_deg: f64,
    pub gain_dbi: f64,
    /// Broadside gain minus this gain.
    pub loss_db: f64,
    pub peak_theta_deg: f64,
    pub peak_phi_deg: f64,
    /// Angle between the achieved peak and the commanded direction.
    pub pointing_error_deg: f64,
}

/// Pencil beams at `angles_deg` in the `plane_phi_deg` plane, each compared
/// with the broadside beam.
pub fn scan_study(
    layout: &SurfaceLayout,
    angles_deg: &[f64],
    plane_phi_deg: f64,
    model: &ModelOptions,
    grid: &AngularGrid,
) -> Result<Vec<ScanPoint>> {
    let f = layout.design_frequency_hz();
    let beam = |target: &SteeringTarget| -> Result<(f64, Directivity)> {
        let cw = synthesis::synthesize_pencil(layout, target, &model.element)?;
        let pattern = radiate(layout, &cw, f, grid, &model.element)?;
        let g = gain(&pattern, layout, &cw, model)?;
        Ok((g.gain_dbi, directivity(&pattern)?))
    };
    let (broadside, _) = beam(&SteeringTarget::broadside())?;
    angles_deg
        .iter()
        .map(|&a| {
            let target = SteeringTarget::in_plane(a, plane_phi_deg)?;
            let (g, d) = beam(&target)?;
            let cos = target.unit_vector().dot(&direction(d.theta_deg, d.phi_deg)).clamp(-1.0, 1.0);
            Ok(ScanPoint {
                angle_deg: a,
                gain_dbi: g,
                loss_db: broadside - g,
                peak_theta_deg: d.theta_deg,
                peak_phi_deg: d.phi_deg,
                pointing_error_deg: cos.acos().to_degrees(),
            })
        })
        .collect()
}

pub fn scan_csv(points: &[ScanPoint]) -> String {
    let mut s = String::from("theta_deg,gain_dbi,loss_db\n");
    for p in points {
        let _ = writeln!(s, "{},{:.6},{:.6}", p.angle_deg, p.gain_dbi, p.loss_db);
    }
    s
}

/// Phase resolution of the compared surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseResolution {
    OneBit,
    TwoBit,
    Continuous,
}

impl PhaseResolution {
    pub fn bits(self) -> Option<u32> {
        match self {
            PhaseResolution::OneBit => Some(1),
            PhaseResolution::TwoBit => Some(2),
            PhaseResolution::Continuous => None,
        }
    }

    /// 20 log10(sinc(pi / 2^n)); zero for continuous phases.
    pub fn closed_form_loss_db(self) -> f64 {
        match self.bits() {
            None => 0.0,
            Some(n) => {
                let x = PI / 2f64.powi(n as i32);
                -20.0 * (x.sin() / x).log10()
            }
        }
    }

    fn available_deg(self) -> Option<Vec<f64>> {
        self.bits().map(|n| {
            let m = 1usize << n;
            (0..m).map(|i| i as f64 * 360.0 / m as f64).collect()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizationLossReport {
    pub resolution: PhaseResolution,
    pub trials: usize,
    /// Mean broadside gain loss versus continuous phases (dB, positive = loss).
    pub mean_loss_db: f64,
    pub std_db: f64,
    pub closed_form_db: f64,
}

pub const MIN_QUANTIZATION_TRIALS: usize = 100;

/// Monte-Carlo gain loss of quantized versus continuous broadside phases.
///
/// Each trial draws one uniform phase offset added to every required phase
/// (the unknown feed phase reference), quantizes with ideal lossless
/// states, and compares boresight field intensities. Both surfaces radiate
/// the same feed power, so the intensity ratio is the gain ratio. Offsets
/// come from one seeded stream, so different resolutions see identical
/// draws.
pub fn quantization_loss(
    resolution: PhaseResolution,
    trials: usize,
    seed: u64,
    layout: &SurfaceLayout,
) -> Result<QuantizationLossReport> {
    if trials < MIN_QUANTIZATION_TRIALS {
        return Err(RisError::invalid(
            "trials",
            format!("need at least {MIN_QUANTIZATION_TRIALS}, got {trials}"),
        ));
    }
    let f = layout.design_frequency_hz();
    let u = SteeringTarget::broadside().unit_vector();
    let required: Vec<f64> = layout
        .active_elements()
        .map(|(r, c)| synthesis::required_phase_rad_unchecked(layout, r, c, &u, f).to_degrees())
        .collect();
    let array = ElementArray::new(layout, f);
    let available = resolution.available_deg();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let losses: Vec<f64> = (0..trials)
        .map(|_| {
            let offset: f64 = rng.random_range(0.0..360.0);
            let continuous: Vec<Complex64> = required.iter().map(|p| Complex64::from_polar(1.0, (p + offset).to_radians())).collect();
            let quantized: Vec<Complex64> = match &available {
                None => continuous.clone(),
                Some(av) => required
                    .iter()
                    .map(|p| {
                        let want = p + offset;
                        let (i, _) = synthesis::quantize_phase(want, av).expect("non-empty");
                        let e = fold_deg(want - av[i]);
                        Complex64::from_polar(1.0, (want - e).to_radians())
                    })
                    .collect(),
            };
            let ec = array.field_at(&continuous, 0.0, 0.0).norm_sqr();
            let eq = array.field_at(&quantized, 0.0, 0.0).norm_sqr();
            10.0 * (ec / eq).log10()
        })
        .collect();
    let mean = losses.iter().sum::<f64>() / trials as f64;
    let var = losses.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (trials as f64 - 1.0);
    Ok(QuantizationLossReport {
        resolution,
        trials,
        mean_loss_db: mean,
        std_db: var.sqrt(),
        closed_form_db: resolution.closed_form_loss_db(),
    })
}

pub fn quantization_csv(reports: &[QuantizationLossReport]) -> String {
    let mut s = String::from("bits,mean_loss_db,std_db,closed_form_db\n");
    for r in reports {
        let bits = r.resolution.bits().map_or("continuous".to_string(), |b| b.to_string());
        let _ = writeln!(s, "{bits},{:.6},{:.6},{:.6}", r.mean_loss_db, r.std_db, r.closed_form_db);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::PhaseCode;
    use crate::synthesis::synthesize_pencil;
    use approx::assert_abs_diff_eq;
    use std::collections::BTreeSet;

    fn coarse() -> AngularGrid {
        AngularGrid::hemisphere(1.0, 1.0).unwrap()
    }

    #[test]
    fn isotropic_hemisphere_is_3_dbi() {
        let p = FarFieldPattern::from_fn(AngularGrid::default(), 2.3e9, |_, _| Complex64::new(1.0, 0.0));
        let d = directivity(&p).unwrap();
        assert_abs_diff_eq!(d.dbi, 10.0 * 2f64.log10(), epsilon = 1e-3);
    }

    #[test]
    fn all_zero_pattern_is_an_error() {
        let p = FarFieldPattern::from_fn(coarse(), 2.3e9, |_, _| Complex64::new(0.0, 0.0));
        assert!(matches!(directivity(&p), Err(RisError::EmptyPattern)));
    }

    #[test]
    fn partial_grid_rejected() {
        let g = AngularGrid::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0]).unwrap();
        let p = FarFieldPattern::from_fn(g, 2.3e9, |_, _| Complex64::new(1.0, 0.0));
        assert!(directivity(&p).is_err());
        let g = AngularGrid::hemisphere(2.0, 2.0).unwrap();
        let p = FarFieldPattern::from_fn(g, 2.3e9, |_, _| Complex64::new(1.0, 0.0));
        assert!(directivity(&p).is_err());
    }

    #[test]
    fn single_element_field_independent_of_state() {
        let l = SurfaceLayout::rectangular(1, 1, 0.05).unwrap();
        let mut mags = vec![];
        for code in PhaseCode::ALL {
            let cw = Codeword::uniform(&l, code);
            let g = reflection_coefficients(&l, &cw, 2.3e9, &ElementModel::Ideal).unwrap();
            let e = field_toward(&l, &g, 2.3e9, 0.0, 0.0).unwrap();
            let (a, _) = l.feed_illumination(0, 0).unwrap();
            assert_abs_diff_eq!(e.norm(), a, epsilon = 1e-12);
            mags.push(e.norm());
        }
        assert!(mags.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-15));
    }

    #[test]
    fn opposite_states_cancel() {
        let l = SurfaceLayout::rectangular(1, 2, 0.05).unwrap();
        let cw = Codeword::from_fn(&l, |_, c| PhaseCode::new(if c == 0 { 0 } else { 2 }).unwrap());
        let g = reflection_coefficients(&l, &cw, 2.3e9, &ElementModel::Ideal).unwrap();
        let e = field_toward(&l, &g, 2.3e9, 0.0, 0.0).unwrap();
        assert!(e.norm() < 1e-15);
    }

    #[test]
    fn separable_sum_matches_direct_sum() {
        let l = SurfaceLayout::default();
        let cw = synthesize_pencil(&l, &SteeringTarget::new(25.0, 40.0).unwrap(), &ElementModel::Measured).unwrap();
        let g = reflection_coefficients(&l, &cw, 2.3e9, &ElementModel::Measured).unwrap();
        let k = wavenumber(2.3e9);
        for (t, p) in [(0.0, 0.0), (25.0, 40.0), (71.5, 300.0)] {
            let u = direction(t, p);
            let mut direct = Complex64::new(0.0, 0.0);
            for ((r, c), gamma) in l.active_elements().zip(&g) {
                let pos = l.element_position(r, c).unwrap();
                let d = l.feed_position().distance(&pos);
                let cos_f = l.feed_position().z / d;
                direct += cos_f.powf(l.feed_exponent()) / d * Complex64::from_polar(1.0, -k * d) * gamma * Complex64::from_polar(1.0, k * pos.dot(&u));
            }
            let e = field_toward(&l, &g, 2.3e9, t, p).unwrap();
            assert_abs_diff_eq!((e - direct).norm(), 0.0, epsilon = 1e-10 * direct.norm().max(1.0));
        }
    }

    #[test]
    fn broadside_peak_and_bound() {
        let l = SurfaceLayout::default();
        let cw = synthesize_pencil(&l, &SteeringTarget::broadside(), &ElementModel::Measured).unwrap();
        let p = radiate(&l, &cw, 2.3e9, &AngularGrid::default(), &ElementModel::Measured).unwrap();
        let d = directivity(&p).unwrap();
        assert!(d.theta_deg <= 0.5);
        let bound = aperture_gain_bound_dbi(0.64, 2.3e9);
        assert_abs_diff_eq!(bound, 26.75, epsilon = 0.01);
        assert!(d.dbi <= bound);
        assert!(d.dbi <= aperture_gain_bound_dbi(l.active_area_m2(), 2.3e9) + 0.1);
    }

    #[test]
    fn quadrature_converges() {
        let l = SurfaceLayout::default();
        let cw = synthesize_pencil(&l, &SteeringTarget::broadside(), &ElementModel::Measured).unwrap();
        let d1 = directivity(&radiate(&l, &cw, 2.3e9, &AngularGrid::default(), &ElementModel::Measured).unwrap()).unwrap();
        let fine = AngularGrid::hemisphere(0.25, 0.25).unwrap();
        let d2 = directivity(&radiate(&l, &cw, 2.3e9, &fine, &ElementModel::Measured).unwrap()).unwrap();
        assert!((d1.dbi - d2.dbi).abs() < 0.05, "{} vs {}", d1.dbi, d2.dbi);
    }

    #[test]
    fn gain_terms() {
        let l = SurfaceLayout::default();
        let cw = synthesize_pencil(&l, &SteeringTarget::broadside(), &ElementModel::Ideal).unwrap();
        let p = radiate(&l, &cw, 2.3e9, &coarse(), &ElementModel::Ideal).unwrap();
        let g = gain(&p, &l, &cw, &ModelOptions::ideal()).unwrap();
        assert_eq!(g.gain_dbi, g.directivity_dbi);
        assert_eq!(g.element_loss_db, 0.0);

        let config3 = Codeword::uniform(&l, PhaseCode::from_configuration(crate::element::Configuration::Three));
        let el = element_loss_db(&l, &config3, 2.3e9, &ElementModel::Measured).unwrap();
        assert_abs_diff_eq!(el, -0.8, epsilon = 1e-12);

        let with = gain(&p, &l, &cw, &ModelOptions { element: ElementModel::Ideal, spillover: true }).unwrap();
        assert!(with.gain_dbi < with.directivity_dbi);
        assert_eq!(with.gain_dbi, with.gain_with_spillover_dbi);
        assert_eq!(with.gain_without_spillover_dbi, with.directivity_dbi);
    }

    #[test]
    fn spillover_matches_solid_angle_for_isotropic_feed() {
        // q_f = 0: intercepted fraction is the aperture solid angle over 2 pi.
        let l = SurfaceLayout::rectangular(8, 8, 0.05).unwrap().with_exponents(0.0, 0.0).unwrap();
        let (a, b, h) = (0.4f64, 0.4f64, 0.72f64);
        let omega = 4.0 * (a * b / ((a * a + 4.0 * h * h) * (b * b + 4.0 * h * h)).sqrt()).asin();
        assert_abs_diff_eq!(spillover_efficiency(&l), omega / (2.0 * PI), epsilon = 1e-4);
        let huge = SurfaceLayout::rectangular(200, 200, 0.05).unwrap();
        assert!(spillover_efficiency(&huge) > 0.999);
    }

    #[test]
    fn uniform_aperture_metrics() {
        // Uniform amplitude (distant feed, no taper) and continuous phases.
        let l = SurfaceLayout::rectangular(16, 16, 0.05)
            .unwrap()
            .with_feed(Point3::new(0.0, 0.0, 1.0e4))
            .unwrap()
            .with_exponents(0.0, 0.0)
            .unwrap();
        let u = SteeringTarget::broadside().unit_vector();
        let g: Vec<Complex64> = l
            .active_elements()
            .map(|(r, c)| Complex64::from_polar(1.0, synthesis::required_phase_rad_unchecked(&l, r, c, &u, 2.3e9)))
            .collect();
        let grid = AngularGrid::hemisphere(0.1, 0.5).unwrap();
        let p = radiate_excitation(&l, &g, 2.3e9, &grid).unwrap();
        let m = metrics(&p, &l, None).unwrap();
        let lambda = wavelength(2.3e9);
        let hpbw = (0.886 * lambda / 0.8).to_degrees();
        for cut in m.cuts {
            assert_abs_diff_eq!(cut.hpbw_deg.unwrap(), hpbw, epsilon = 0.15);
            assert_abs_diff_eq!(cut.sidelobe_db.unwrap(), -13.26, epsilon = 0.3);
        }
    }

    #[test]
    fn metrics_scale_invariant() {
        let l = SurfaceLayout::default();
        let cw = synthesize_pencil(&l, &SteeringTarget::new(20.0, 30.0).unwrap(), &ElementModel::Measured).unwrap();
        let p = radiate(&l, &cw, 2.3e9, &coarse(), &ElementModel::Measured).unwrap();
        let a = metrics(&p, &l, None).unwrap();
        let b = metrics(&p.scaled(Complex64::from_polar(3.7, 1.1)), &l, None).unwrap();
        assert_abs_diff_eq!(a.directivity_dbi, b.directivity_dbi, epsilon = 1e-9);
        assert_eq!((a.peak_theta_deg, a.peak_phi_deg), (b.peak_theta_deg, b.peak_phi_deg));
        for (x, y) in a.cuts.iter().zip(&b.cuts) {
            assert_abs_diff_eq!(x.hpbw_deg.unwrap(), y.hpbw_deg.unwrap(), epsilon = 1e-9);
            assert_abs_diff_eq!(x.sidelobe_db.unwrap(), y.sidelobe_db.unwrap(), epsilon = 1e-9);
        }
    }

    #[test]
    fn steering_mirror_images() {
        let l = SurfaceLayout::rectangular(16, 16, 0.05).unwrap();
        let grid = AngularGrid::hemisphere(1.0, 1.0).unwrap();
        let t = SteeringTarget::new(30.0, 20.0).unwrap();
        let m = SteeringTarget::new(30.0, 200.0).unwrap();
        // Continuous phases keep the comparison free of quantization ties.
        let phases = |t: &SteeringTarget| -> Vec<Complex64> {
            let u = t.unit_vector();
            l.active_elements()
                .map(|(r, c)| Complex64::from_polar(1.0, synthesis::required_phase_rad_unchecked(&l, r, c, &u, 2.3e9)))
                .collect()
        };
        let a = radiate_excitation(&l, &phases(&t), 2.3e9, &grid).unwrap();
        let b = radiate_excitation(&l, &phases(&m), 2.3e9, &grid).unwrap();
        // Point reflection through the z axis maps phi to phi + 180.
        let n_phi = grid.phi_deg.len();
        for i in 0..grid.theta_deg.len() {
            for j in 0..n_phi - 1 {
                let jm = (j + 180) % 360;
                assert_abs_diff_eq!(a.at(i, j).norm(), b.at(i, jm).norm(), epsilon = 1e-9 * a.peak().2.sqrt());
            }
        }
    }

    #[test]
    fn aperture_efficiency_values() {
        assert_abs_diff_eq!(aperture_efficiency(21.7, 0.64, 2.3e9).unwrap(), 0.313, epsilon = 0.002);
        let bound = aperture_gain_bound_dbi(0.64, 2.3e9);
        assert_abs_diff_eq!(aperture_efficiency(bound, 0.64, 2.3e9).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(aperture_efficiency(18.0, 0.64, 2.3e9).unwrap(), 0.134, epsilon = 0.001);
        assert!(aperture_efficiency(18.0, 0.0, 2.3e9).is_err());
    }

    #[test]
    fn eirp_sums() {
        assert_eq!(eirp(30.0, 21.7), 51.7);
        assert_eq!(eirp(12.5, 0.0), 12.5);
        assert_abs_diff_eq!(eirp(30.0, 19.1), 49.1, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_sweep() {
        let l = SurfaceLayout::default();
        let cw = synthesize_pencil(&l, &SteeringTarget::broadside(), &ElementModel::Measured).unwrap();
        let r = frequency_sweep(&l, &cw, &ModelOptions::default(), 2.3e9, 2.3e9, 10e6, &coarse()).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.bandwidth_hz, 0.0);
        assert_eq!(r.points.len(), 1);
        assert!(frequency_sweep(&l, &cw, &ModelOptions::default(), 1.9e9, 2.3e9, 10e6, &coarse()).is_err());
    }

    #[test]
    fn quantization_identity_and_ordering() {
        let l = SurfaceLayout::default();
        let c = quantization_loss(PhaseResolution::Continuous, 100, 1, &l).unwrap();
        assert_abs_diff_eq!(c.mean_loss_db, 0.0, epsilon = 1e-9);
        let two = quantization_loss(PhaseResolution::TwoBit, 500, 9, &l).unwrap();
        let one = quantization_loss(PhaseResolution::OneBit, 500, 9, &l).unwrap();
        assert!(two.mean_loss_db < one.mean_loss_db);
        assert_abs_diff_eq!(two.closed_form_db, 0.912, epsilon = 0.001);
        assert_abs_diff_eq!(one.closed_form_db, 3.922, epsilon = 0.001);
        assert!(quantization_loss(PhaseResolution::TwoBit, 99, 9, &l).is_err());
    }

    #[test]
    fn gain_never_exceeds_directivity_or_bound() {
        let l = SurfaceLayout::default();
        let model = ModelOptions::default();
        let bound = aperture_gain_bound_dbi(l.active_area_m2(), 2.3e9) + 0.1;
        let mut seed = 0x9e37_79b9_u64;
        for trial in 0..4 {
            let cw = if trial == 0 {
                Codeword::uniform(&l, PhaseCode::new(1).unwrap())
            } else {
                Codeword::from_fn(&l, |_, _| {
                    seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    PhaseCode::new((seed >> 62) as u8).unwrap()
                })
            };
            let p = radiate(&l, &cw, 2.3e9, &coarse(), &model.element).unwrap();
            let g = gain(&p, &l, &cw, &model).unwrap();
            assert!(g.gain_dbi <= g.directivity_dbi);
            assert!(g.directivity_dbi <= bound);
        }
    }

    #[test]
    fn intensity_lookup_hits_grid_points() {
        let l = SurfaceLayout::default().with_mask(BTreeSet::new()).unwrap();
        let cw = synthesize_pencil(&l, &SteeringTarget::new(10.0, 0.0).unwrap(), &ElementModel::Ideal).unwrap();
        let p = radiate(&l, &cw, 2.3e9, &coarse(), &ElementModel::Ideal).unwrap();
        let v = p.intensity_toward(&direction(10.0, 0.0));
        assert_abs_diff_eq!(v, p.at(10, 0).norm_sqr(), epsilon = 1e-12 * v);
        assert_eq!(p.intensity_toward(&Point3::new(0.0, 0.0, -1.0)), 0.0);
    }

    #[test]
    fn pattern_csv_layout() {
        let g = AngularGrid::new(vec![0.0, 45.0], vec![0.0, 90.0]).unwrap();
        let p = FarFieldPattern::from_fn(g, 1e9, |t, _| Complex64::new(1.0 - t / 90.0, 0.0));
        let csv = p.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "theta,phi,re,im,mag_db");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("0,0,") && lines[1].ends_with(",0.0000"));
    }
}
