//! Beam synthesis: required element phases, quantization to the available
//! states, and a phase-only shaped-beam synthesizer.
//!
//! The required phase of an element compensates the feed-to-element path
//! and adds the progressive phase that tilts the reflected plane wave
//! towards the target:
//!
//! ```text
//! phase = k * |feed - r| - k * (r . u)      (mod 360 deg)
//! ```

use nalgebra::{linalg::LU, DMatrix, DVector, Dyn};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::element::{ElementModel, PhaseCode};
use crate::error::{Result, RisError};
use crate::farfield::ElementArray;
use crate::surface::{Codeword, Point3, SurfaceLayout};
use crate::wavenumber;

/// Tikhonov term of the mask Gram matrix, relative to its mean diagonal.
const GRAM_REGULARIZATION: f64 = 1e-3;

/// Electronic scan range of the surface (degrees from broadside).
pub const SCAN_LIMIT_DEG: f64 = 60.0;

/// Beam direction: polar angle from broadside and azimuth, in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeringTarget {
    theta_deg: f64,
    phi_deg: f64,
}

impl SteeringTarget {
    pub fn new(theta_deg: f64, phi_deg: f64) -> Result<Self> {
        if !(0.0..90.0).contains(&theta_deg) || !phi_deg.is_finite() {
            return Err(RisError::invalid(
                "steering target",
                format!("theta must lie in [0, 90) deg, got {theta_deg}"),
            ));
        }
        Ok(Self {
            theta_deg,
            phi_deg: phi_deg.rem_euclid(360.0),
        })
    }

    pub fn broadside() -> Self {
        Self {
            theta_deg: 0.0,
            phi_deg: 0.0,
        }
    }

    /// Signed angle in the plane `plane_phi_deg`; negative angles point to
    /// `plane_phi_deg + 180`.
    pub fn in_plane(angle_deg: f64, plane_phi_deg: f64) -> Result<Self> {
        if angle_deg < 0.0 {
            Self::new(-angle_deg, plane_phi_deg + 180.0)
        } else {
            Self::new(angle_deg, plane_phi_deg)
        }
    }

    pub fn theta_deg(&self) -> f64 {
        self.theta_deg
    }

    pub fn phi_deg(&self) -> f64 {
        self.phi_deg
    }

    pub fn unit_vector(&self) -> Point3 {
        direction(self.theta_deg, self.phi_deg)
    }
}

pub(crate) fn direction(theta_deg: f64, phi_deg: f64) -> Point3 {
    let (st, ct) = theta_deg.to_radians().sin_cos();
    let (sp, cp) = phi_deg.to_radians().sin_cos();
    Point3::new(st * cp, st * sp, ct)
}

/// Required phase in radians, not reduced.
pub(crate) fn required_phase_rad_unchecked(
    layout: &SurfaceLayout,
    row: usize,
    col: usize,
    u: &Point3,
    frequency_hz: f64,
) -> f64 {
    let k = wavenumber(frequency_hz);
    let r = layout.position_unchecked(row, col);
    k * layout.feed_position().distance(&r) - k * r.dot(u)
}

/// Phase (degrees, [0, 360)) element (row, col) must apply to steer the
/// reflected beam towards `target` at `frequency_hz`.
pub fn required_phase(
    layout: &SurfaceLayout,
    row: usize,
    col: usize,
    target: &SteeringTarget,
    frequency_hz: f64,
) -> Result<f64> {
    layout.element_position(row, col)?;
    if layout.is_masked(row, col) {
        return Err(RisError::MaskedElement { row, col });
    }
    if !(frequency_hz > 0.0 && frequency_hz.is_finite()) {
        return Err(RisError::invalid("frequency", format!("must be positive, got {frequency_hz}")));
    }
    let phase = required_phase_rad_unchecked(layout, row, col, &target.unit_vector(), frequency_hz);
    Ok(wrap_deg(phase.to_degrees()))
}

fn wrap_deg(x: f64) -> f64 {
    let w = x.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360.0 for tiny negative inputs.
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Signed circular difference folded to [-180, 180).
pub(crate) fn fold_deg(x: f64) -> f64 {
    let w = (x + 180.0).rem_euclid(360.0) - 180.0;
    if w >= 180.0 {
        w - 360.0
    } else {
        w
    }
}

/// Nearest available phase by circular distance. Returns the index and the
/// signed residual `phi_req - chosen`, folded to [-180, 180). Ties go to the
/// lowest index.
pub fn quantize_phase(phi_req_deg: f64, available_deg: &[f64]) -> Result<(usize, f64)> {
    if available_deg.is_empty() {
        return Err(RisError::invalid("available phases", "list is empty"));
    }
    let mut best = (0, fold_deg(phi_req_deg - available_deg[0]));
    for (i, &a) in available_deg.iter().enumerate().skip(1) {
        let e = fold_deg(phi_req_deg - a);
        if e.abs() < best.1.abs() {
            best = (i, e);
        }
    }
    Ok(best)
}

/// Quantization result for one active element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizedElement {
    pub row: usize,
    pub col: usize,
    pub required_deg: f64,
    pub index: usize,
    pub residual_deg: f64,
}

/// Required phases of every active element at the design frequency,
/// quantized against `available_deg`.
pub fn quantize_layout(
    layout: &SurfaceLayout,
    target: &SteeringTarget,
    available_deg: &[f64],
) -> Result<Vec<QuantizedElement>> {
    let u = target.unit_vector();
    let f = layout.design_frequency_hz();
    layout
        .active_elements()
        .map(|(row, col)| {
            let required_deg = wrap_deg(required_phase_rad_unchecked(layout, row, col, &u, f).to_degrees());
            let (index, residual_deg) = quantize_phase(required_deg, available_deg)?;
            Ok(QuantizedElement {
                row,
                col,
                required_deg,
                index,
                residual_deg,
            })
        })
        .collect()
}

/// Pencil beam towards `target` at the layout's design frequency.
pub fn synthesize_pencil(layout: &SurfaceLayout, target: &SteeringTarget, model: &ElementModel) -> Result<Codeword> {
    synthesize_pencil_with(layout, target, model, false)
}

/// As [`synthesize_pencil`]; `allow_wide_scan` lifts the +/-60 deg limit.
pub fn synthesize_pencil_with(
    layout: &SurfaceLayout,
    target: &SteeringTarget,
    model: &ElementModel,
    allow_wide_scan: bool,
) -> Result<Codeword> {
    if !allow_wide_scan && target.theta_deg() > SCAN_LIMIT_DEG + 1e-9 {
        return Err(RisError::BeyondScanRange {
            theta_deg: target.theta_deg(),
            limit_deg: SCAN_LIMIT_DEG,
        });
    }
    model.check_frequency(layout.design_frequency_hz())?;
    let q = quantize_layout(layout, target, &model.available_phases_deg())?;
    let mut it = q.iter();
    Ok(Codeword::from_fn(layout, |_, _| {
        let e = it.next().expect("one quantized entry per active element");
        PhaseCode::new(e.index as u8).expect("four available phases")
    }))
}

/// One sample of the desired pattern magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskCell {
    pub theta_deg: f64,
    pub phi_deg: f64,
    /// Desired relative field magnitude (linear).
    pub target: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapedBeamSpec {
    pub cells: Vec<MaskCell>,
    pub max_iterations: usize,
    /// Stop once an iteration improves the objective by less than this.
    pub tolerance: f64,
    /// Uniform random perturbation (degrees) of the starting phases, used
    /// only when the starting point does not already meet the tolerance.
    pub start_dither_deg: f64,
}

impl ShapedBeamSpec {
    pub fn new(cells: Vec<MaskCell>) -> Result<Self> {
        let spec = Self {
            cells,
            max_iterations: 200,
            tolerance: 1e-6,
            start_dither_deg: 5.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells.is_empty() {
            return Err(RisError::invalid("shaped beam mask", "no cells"));
        }
        for c in &self.cells {
            if !(c.target >= 0.0 && c.weight >= 0.0) || !c.target.is_finite() || !c.weight.is_finite() {
                return Err(RisError::invalid("shaped beam mask", "targets and weights must be non-negative"));
            }
            if !(0.0..=90.0).contains(&c.theta_deg) {
                return Err(RisError::invalid(
                    "shaped beam mask",
                    format!("cell theta {} outside the front hemisphere", c.theta_deg),
                ));
            }
        }
        if !self.cells.iter().any(|c| c.target > 0.0 && c.weight > 0.0) {
            return Err(RisError::invalid("shaped beam mask", "needs at least one weighted nonzero target"));
        }
        if !(self.tolerance >= 0.0) {
            return Err(RisError::invalid("shaped beam mask", "tolerance must be non-negative"));
        }
        Ok(())
    }

    /// Weighted centroid direction of the nonzero targets.
    pub fn centroid(&self) -> SteeringTarget {
        let mut acc = Point3::new(0.0, 0.0, 0.0);
        for c in &self.cells {
            let w = c.weight * c.target;
            let u = direction(c.theta_deg, c.phi_deg);
            acc.x += w * u.x;
            acc.y += w * u.y;
            acc.z += w * u.z;
        }
        let norm = acc.dot(&acc).sqrt();
        if norm < 1e-12 || acc.z <= 0.0 {
            return SteeringTarget::broadside();
        }
        let theta = (acc.z / norm).clamp(-1.0, 1.0).acos().to_degrees().min(SCAN_LIMIT_DEG);
        let phi = acc.y.atan2(acc.x).to_degrees();
        SteeringTarget::new(theta, phi).unwrap_or_else(|_| SteeringTarget::broadside())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapedReport {
    /// Objective after each accepted continuous-phase iteration; the first
    /// entry is the starting point.
    pub objective_history: Vec<f64>,
    pub continuous_iterations: usize,
    pub quantized_iterations: usize,
    pub converged: bool,
    /// Objective of the returned (quantized) codeword.
    pub final_objective: f64,
}

/// Forward operator restricted to the mask cells.
struct MaskOperator {
    /// rows = cells, cols = active elements
    a: Vec<Vec<Complex64>>,
    target: Vec<f64>,
    weight: Vec<f64>,
    target_norm: f64,
    /// LU of the weighted Gram matrix A_w A_w^H + lambda I
    gram: LU<Complex64, Dyn, Dyn>,
}

impl MaskOperator {
    fn new(array: &ElementArray, spec: &ShapedBeamSpec) -> Self {
        let a = spec
            .cells
            .iter()
            .map(|c| array.steering_row(c.theta_deg, c.phi_deg))
            .collect();
        let target: Vec<f64> = spec.cells.iter().map(|c| c.target).collect();
        let weight: Vec<f64> = spec.cells.iter().map(|c| c.weight).collect();
        let target_norm = target.iter().zip(&weight).map(|(t, w)| w * t * t).sum::<f64>();
        let a: Vec<Vec<Complex64>> = a;
        let m = a.len();
        let mut g = DMatrix::<Complex64>::zeros(m, m);
        for i in 0..m {
            for k in i..m {
                let s = (weight[i] * weight[k]).sqrt();
                let v: Complex64 = a[i].iter().zip(&a[k]).map(|(p, q)| p * q.conj()).sum::<Complex64>() * s;
                g[(i, k)] = v;
                g[(k, i)] = v.conj();
            }
        }
        let trace: f64 = (0..m).map(|i| g[(i, i)].re).sum();
        let lambda = GRAM_REGULARIZATION * (trace / m as f64).max(f64::MIN_POSITIVE);
        for i in 0..m {
            g[(i, i)] += lambda;
        }
        Self {
            a,
            target,
            weight,
            target_norm,
            gram: g.lu(),
        }
    }

    fn forward(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.a
            .iter()
            .map(|row| row.iter().zip(x).map(|(a, x)| a * x).sum())
            .collect()
    }

    /// Best scale factor mapping |E| onto the targets.
    fn scale(&self, e: &[Complex64]) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for ((e, t), w) in e.iter().zip(&self.target).zip(&self.weight) {
            num += w * t * e.norm();
            den += w * e.norm_sqr();
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }

    /// Normalized weighted mean-square deviation of the scaled magnitudes.
    fn objective(&self, x: &[Complex64]) -> f64 {
        let e = self.forward(x);
        let beta = self.scale(&e);
        let dev: f64 = e
            .iter()
            .zip(&self.target)
            .zip(&self.weight)
            .map(|((e, t), w)| w * (beta * e.norm() - t).powi(2))
            .sum();
        dev / self.target_norm
    }

    /// Impose the mask magnitudes, move to the nearest excitation that
    /// produces them (weighted, regularized least norm), keep phases only.
    fn project(&self, x: &[Complex64]) -> Vec<Complex64> {
        let e = self.forward(x);
        let beta = self.scale(&e);
        if beta <= 0.0 {
            return x.to_vec();
        }
        let r = DVector::from_iterator(
            e.len(),
            e.iter().zip(&self.target).zip(&self.weight).map(|((e, t), w)| {
                let d = if e.norm() > 0.0 { e / e.norm() * (t / beta) } else { Complex64::new(t / beta, 0.0) };
                (d - e) * w.sqrt()
            }),
        );
        let Some(c) = self.gram.solve(&r) else {
            return x.to_vec();
        };
        let mut y = x.to_vec();
        for ((row, c), w) in self.a.iter().zip(c.iter()).zip(&self.weight) {
            let c = c * w.sqrt();
            for (yn, a) in y.iter_mut().zip(row) {
                *yn += a.conj() * c;
            }
        }
        y.iter()
            .zip(x)
            .map(|(y, x)| if y.norm() > 0.0 { y / y.norm() } else { *x })
            .collect()
    }
}

fn quantize_excitation(x: &[Complex64], model: &ElementModel) -> Vec<PhaseCode> {
    let avail = model.available_phases_deg();
    x.iter()
        .map(|x| {
            let (i, _) = quantize_phase(x.arg().to_degrees(), &avail).expect("non-empty");
            PhaseCode::new(i as u8).expect("2-bit index")
        })
        .collect()
}

/// Phase-only shaped-beam synthesis by alternating projection.
///
/// The continuous stage starts from pencil phases towards the mask centroid
/// and alternates between imposing the mask magnitudes and projecting back
/// onto unit-modulus element excitations. An update that would raise the
/// objective is rejected and ends the stage. The quantized stage then
/// repeats the projection through the available states, keeping the best
/// codeword seen.
pub fn synthesize_shaped(
    layout: &SurfaceLayout,
    spec: &ShapedBeamSpec,
    model: &ElementModel,
    seed: u64,
) -> Result<(Codeword, ShapedReport)> {
    spec.validate()?;
    model.check_frequency(layout.design_frequency_hz())?;
    let array = ElementArray::new(layout, layout.design_frequency_hz());
    let op = MaskOperator::new(&array, spec);

    let start = spec.centroid();
    let u = start.unit_vector();
    let f = layout.design_frequency_hz();
    let mut x: Vec<Complex64> = layout
        .active_elements()
        .map(|(r, c)| Complex64::from_polar(1.0, required_phase_rad_unchecked(layout, r, c, &u, f)))
        .collect();

    let mut j = op.objective(&x);
    if j > spec.tolerance && spec.start_dither_deg > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amp = spec.start_dither_deg.to_radians();
        for xn in x.iter_mut() {
            *xn *= Complex64::from_polar(1.0, rng.random_range(-amp..=amp));
        }
        j = op.objective(&x);
    }

    let mut history = vec![j];
    let mut converged = j <= spec.tolerance;
    let mut continuous_iterations = 0;
    while !converged && continuous_iterations < spec.max_iterations {
        let next = op.project(&x);
        let j_next = op.objective(&next);
        if j_next > j {
            converged = true;
            break;
        }
        continuous_iterations += 1;
        let improvement = j - j_next;
        x = next;
        j = j_next;
        history.push(j);
        if improvement <= spec.tolerance {
            converged = true;
        }
    }

    let to_excitation = |codes: &[PhaseCode]| -> Vec<Complex64> { codes.iter().map(|&c| model.coefficient(c)).collect() };
    let mut codes = quantize_excitation(&x, model);
    let mut best_j = op.objective(&to_excitation(&codes));
    let mut best = codes.clone();
    let mut quantized_iterations = 0;
    while quantized_iterations < spec.max_iterations {
        let next = quantize_excitation(&op.project(&to_excitation(&codes)), model);
        quantized_iterations += 1;
        if next == codes {
            break;
        }
        let jn = op.objective(&to_excitation(&next));
        codes = next;
        if jn < best_j {
            best_j = jn;
            best = codes.clone();
        } else {
            break;
        }
    }

    let mut it = best.into_iter();
    let codeword = Codeword::from_fn(layout, |_, _| it.next().expect("one code per active element"));
    Ok((
        codeword,
        ShapedReport {
            objective_history: history,
            continuous_iterations,
            quantized_iterations,
            converged,
            final_objective: best_j,
        },
    ))
}
