//! Surface geometry, per-element codewords and the bias-frame codec.
//!
//! The surface lies in the z = 0 plane with its centre at the origin; the
//! feed sits on the +z side. Rows run along y, columns along x.

use std::collections::BTreeSet;
use std::fmt;

use crate::element::{ElementState, PhaseCode};
use crate::error::{FrameField, Result, RisError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2)).sqrt()
    }

    pub fn dot(&self, other: &Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }
}

pub const DEFAULT_ROWS: usize = 16;
pub const DEFAULT_COLS: usize = 16;
pub const DEFAULT_SPACING_M: f64 = 0.050;
pub const DEFAULT_FEED_HEIGHT_M: f64 = 0.720;
pub const DEFAULT_DESIGN_FREQUENCY_HZ: f64 = 2.3e9;
/// Gives a -10 dB corner illumination (pattern plus spreading) for the
/// default feed height.
pub const DEFAULT_FEED_EXPONENT: f64 = 4.3;
pub const DEFAULT_ELEMENT_EXPONENT: f64 = 0.0;

/// Sixteen elements removed for bias-line routing: two vertical runs of
/// eight in columns 4 and 11, rows 4..=11.
pub fn default_mask() -> BTreeSet<(usize, usize)> {
    (4..=11).flat_map(|r| [(r, 4), (r, 11)]).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceLayout {
    rows: usize,
    cols: usize,
    spacing_m: f64,
    mask: BTreeSet<(usize, usize)>,
    feed_position: Point3,
    design_frequency_hz: f64,
    feed_exponent: f64,
    element_exponent: f64,
}

impl Default for SurfaceLayout {
    fn default() -> Self {
        Self {
            rows: DEFAULT_ROWS,
            cols: DEFAULT_COLS,
            spacing_m: DEFAULT_SPACING_M,
            mask: default_mask(),
            feed_position: Point3::new(0.0, 0.0, DEFAULT_FEED_HEIGHT_M),
            design_frequency_hz: DEFAULT_DESIGN_FREQUENCY_HZ,
            feed_exponent: DEFAULT_FEED_EXPONENT,
            element_exponent: DEFAULT_ELEMENT_EXPONENT,
        }
    }
}

impl SurfaceLayout {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        rows: usize,
        cols: usize,
        spacing_m: f64,
        mask: BTreeSet<(usize, usize)>,
        feed_position: Point3,
        design_frequency_hz: f64,
        feed_exponent: f64,
        element_exponent: f64,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(RisError::invalid("layout", "rows and cols must be at least 1"));
        }
        if !(spacing_m > 0.0 && spacing_m.is_finite()) {
            return Err(RisError::invalid("layout", format!("spacing must be positive, got {spacing_m}")));
        }
        if !(feed_position.z > 0.0) {
            return Err(RisError::invalid(
                "layout",
                format!("feed must be in front of the surface (z > 0), got z = {}", feed_position.z),
            ));
        }
        if let Some(&(r, c)) = mask.iter().find(|&&(r, c)| r >= rows || c >= cols) {
            return Err(RisError::IndexOutOfRange { row: r, col: c, rows, cols });
        }
        if mask.len() >= rows * cols {
            return Err(RisError::invalid("layout", "mask removes every element"));
        }
        if !(design_frequency_hz > 0.0 && design_frequency_hz.is_finite()) {
            return Err(RisError::invalid("layout", "design frequency must be positive"));
        }
        if !(feed_exponent >= 0.0 && element_exponent >= 0.0) {
            return Err(RisError::invalid("layout", "pattern exponents must be non-negative"));
        }
        Ok(Self {
            rows,
            cols,
            spacing_m,
            mask,
            feed_position,
            design_frequency_hz,
            feed_exponent,
            element_exponent,
        })
    }

    /// Unmasked rectangular grid with the default feed and exponents.
    pub fn rectangular(rows: usize, cols: usize, spacing_m: f64) -> Result<Self> {
        let d = Self::default();
        Self::new(
            rows,
            cols,
            spacing_m,
            BTreeSet::new(),
            d.feed_position,
            d.design_frequency_hz,
            d.feed_exponent,
            d.element_exponent,
        )
    }

    pub fn with_mask(mut self, mask: BTreeSet<(usize, usize)>) -> Result<Self> {
        self.mask = mask;
        Self::new(
            self.rows,
            self.cols,
            self.spacing_m,
            self.mask,
            self.feed_position,
            self.design_frequency_hz,
            self.feed_exponent,
            self.element_exponent,
        )
    }

    pub fn with_feed(mut self, feed_position: Point3) -> Result<Self> {
        if !(feed_position.z > 0.0) {
            return Err(RisError::invalid("layout", "feed must be in front of the surface (z > 0)"));
        }
        self.feed_position = feed_position;
        Ok(self)
    }

    pub fn with_exponents(mut self, feed_exponent: f64, element_exponent: f64) -> Result<Self> {
        if !(feed_exponent >= 0.0 && element_exponent >= 0.0) {
            return Err(RisError::invalid("layout", "pattern exponents must be non-negative"));
        }
        self.feed_exponent = feed_exponent;
        self.element_exponent = element_exponent;
        Ok(self)
    }

    pub fn with_design_frequency(mut self, design_frequency_hz: f64) -> Result<Self> {
        if !(design_frequency_hz > 0.0 && design_frequency_hz.is_finite()) {
            return Err(RisError::invalid("layout", "design frequency must be positive"));
        }
        self.design_frequency_hz = design_frequency_hz;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn spacing_m(&self) -> f64 {
        self.spacing_m
    }

    pub fn mask(&self) -> &BTreeSet<(usize, usize)> {
        &self.mask
    }

    pub fn feed_position(&self) -> Point3 {
        self.feed_position
    }

    pub fn design_frequency_hz(&self) -> f64 {
        self.design_frequency_hz
    }

    pub fn feed_exponent(&self) -> f64 {
        self.feed_exponent
    }

    pub fn element_exponent(&self) -> f64 {
        self.element_exponent
    }

    pub fn is_masked(&self, row: usize, col: usize) -> bool {
        self.mask.contains(&(row, col))
    }

    pub fn active_count(&self) -> usize {
        self.rows * self.cols - self.mask.len()
    }

    /// Active positions in row-major order.
    pub fn active_elements(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rows)
            .flat_map(move |r| (0..self.cols).map(move |c| (r, c)))
            .filter(move |p| !self.mask.contains(p))
    }

    /// Physical surface area, rows*cols cells of spacing^2.
    pub fn aperture_area_m2(&self) -> f64 {
        (self.rows * self.cols) as f64 * self.spacing_m * self.spacing_m
    }

    pub fn active_area_m2(&self) -> f64 {
        self.active_count() as f64 * self.spacing_m * self.spacing_m
    }

    fn check_index(&self, row: usize, col: usize) -> Result<()> {
        if row >= self.rows || col >= self.cols {
            Err(RisError::IndexOutOfRange {
                row,
                col,
                rows: self.rows,
                cols: self.cols,
            })
        } else {
            Ok(())
        }
    }

    pub(crate) fn position_unchecked(&self, row: usize, col: usize) -> Point3 {
        Point3::new(
            (col as f64 - (self.cols as f64 - 1.0) / 2.0) * self.spacing_m,
            (row as f64 - (self.rows as f64 - 1.0) / 2.0) * self.spacing_m,
            0.0,
        )
    }

    /// Centre of element (row, col).
    pub fn element_position(&self, row: usize, col: usize) -> Result<Point3> {
        self.check_index(row, col)?;
        Ok(self.position_unchecked(row, col))
    }

    /// Feed illumination of an element: field amplitude cos^q_f(theta_f) / d
    /// and the feed distance d.
    pub(crate) fn illumination_unchecked(&self, row: usize, col: usize) -> (f64, f64) {
        let p = self.position_unchecked(row, col);
        let d = self.feed_position.distance(&p);
        // The feed boresight points along -z, towards the surface.
        let cos_f = (self.feed_position.z - p.z) / d;
        (cos_f.max(0.0).powf(self.feed_exponent) / d, d)
    }

    pub fn feed_illumination(&self, row: usize, col: usize) -> Result<(f64, f64)> {
        self.check_index(row, col)?;
        Ok(self.illumination_unchecked(row, col))
    }
}

/// Per-element state grid, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Codeword {
    rows: usize,
    cols: usize,
    states: Vec<ElementState>,
}

impl Codeword {
    /// Every active element set to `code`.
    pub fn uniform(layout: &SurfaceLayout, code: PhaseCode) -> Self {
        Self::from_fn(layout, |_, _| code)
    }

    pub fn from_fn(layout: &SurfaceLayout, mut f: impl FnMut(usize, usize) -> PhaseCode) -> Self {
        let mut states = Vec::with_capacity(layout.rows * layout.cols);
        for r in 0..layout.rows {
            for c in 0..layout.cols {
                states.push(if layout.is_masked(r, c) {
                    ElementState::Masked
                } else {
                    ElementState::Active(f(r, c))
                });
            }
        }
        Self {
            rows: layout.rows,
            cols: layout.cols,
            states,
        }
    }

    pub fn from_states(rows: usize, cols: usize, states: Vec<ElementState>) -> Result<Self> {
        if rows == 0 || cols == 0 || states.len() != rows * cols {
            return Err(RisError::DimensionMismatch {
                expected: format!("{rows}x{cols} = {} states", rows * cols),
                got: format!("{} states", states.len()),
            });
        }
        Ok(Self { rows, cols, states })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn states(&self) -> &[ElementState] {
        &self.states
    }

    pub fn get(&self, row: usize, col: usize) -> ElementState {
        self.states[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, state: ElementState) {
        self.states[row * self.cols + col] = state;
    }

    /// Checks dimensions and that MASKED appears exactly at the layout mask.
    pub fn validate(&self, layout: &SurfaceLayout) -> Result<()> {
        if self.rows != layout.rows || self.cols != layout.cols {
            return Err(RisError::DimensionMismatch {
                expected: format!("{}x{}", layout.rows, layout.cols),
                got: format!("{}x{}", self.rows, self.cols),
            });
        }
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.get(r, c).is_masked() != layout.is_masked(r, c) {
                    return Err(RisError::invalid(
                        "codeword",
                        format!("element ({r}, {c}) masking disagrees with the layout"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Text form: one line per row, codes `0`..`3` or `-` for masked,
    /// separated by single spaces.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.rows * (2 * self.cols + 1));
        for r in 0..self.rows {
            for c in 0..self.cols {
                if c > 0 {
                    out.push(' ');
                }
                out.push_str(&self.get(r, c).to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut rows = 0;
        let mut cols = None;
        let mut states = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let before = states.len();
            for tok in line.split_whitespace() {
                let state = match tok {
                    "-" => ElementState::Masked,
                    t => {
                        let v: u8 = t.parse().map_err(|_| {
                            RisError::invalid("codeword text", format!("line {}: bad token {t:?}", lineno + 1))
                        })?;
                        ElementState::Active(PhaseCode::new(v)?)
                    }
                };
                states.push(state);
            }
            let n = states.len() - before;
            match cols {
                None => cols = Some(n),
                Some(c) if c != n => {
                    return Err(RisError::invalid(
                        "codeword text",
                        format!("line {}: {n} entries, expected {c}", lineno + 1),
                    ))
                }
                _ => {}
            }
            rows += 1;
        }
        Self::from_states(rows, cols.unwrap_or(0), states)
    }
}

impl fmt::Display for Codeword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

pub const FRAME_MAGIC: [u8; 4] = *b"RIS1";
pub const FRAME_VERSION: u8 = 1;
pub const FRAME_HEADER_LEN: usize = 7;

/// Control-board load image: magic, version, rows, cols, then 2-bit codes
/// packed row-major, least-significant bits first. Masked positions are 00.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiasFrame(Vec<u8>);

impl BiasFrame {
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0
    }

    pub fn payload(&self) -> &[u8] {
        self.0.get(FRAME_HEADER_LEN..).unwrap_or(&[])
    }

    pub fn expected_len(rows: usize, cols: usize) -> usize {
        FRAME_HEADER_LEN + (rows * cols).div_ceil(4)
    }
}

pub fn encode_bias_frame(codeword: &Codeword) -> Result<BiasFrame> {
    let (rows, cols) = (codeword.rows, codeword.cols);
    if rows > u8::MAX as usize || cols > u8::MAX as usize {
        return Err(RisError::DimensionMismatch {
            expected: "at most 255x255".into(),
            got: format!("{rows}x{cols}"),
        });
    }
    let mut bytes = Vec::with_capacity(BiasFrame::expected_len(rows, cols));
    bytes.extend_from_slice(&FRAME_MAGIC);
    bytes.push(FRAME_VERSION);
    bytes.push(rows as u8);
    bytes.push(cols as u8);
    bytes.resize(BiasFrame::expected_len(rows, cols), 0);
    for (i, s) in codeword.states.iter().enumerate() {
        let code = s.code().map_or(0, PhaseCode::value);
        bytes[FRAME_HEADER_LEN + i / 4] |= code << (2 * (i % 4));
    }
    Ok(BiasFrame(bytes))
}

pub fn decode_bias_frame(frame: &BiasFrame, layout: &SurfaceLayout) -> Result<Codeword> {
    let b = frame.as_bytes();
    if b.len() < FRAME_MAGIC.len() {
        return Err(RisError::format(FrameField::Length, format!("{} bytes, header needs {FRAME_HEADER_LEN}", b.len())));
    }
    if b[..4] != FRAME_MAGIC {
        return Err(RisError::format(
            FrameField::Magic,
            format!("expected {:?}, got {:?}", String::from_utf8_lossy(&FRAME_MAGIC), String::from_utf8_lossy(&b[..4])),
        ));
    }
    if b.len() < FRAME_HEADER_LEN {
        return Err(RisError::format(FrameField::Length, format!("{} bytes, header needs {FRAME_HEADER_LEN}", b.len())));
    }
    if b[4] != FRAME_VERSION {
        return Err(RisError::format(FrameField::Version, format!("expected {FRAME_VERSION}, got {}", b[4])));
    }
    let (rows, cols) = (b[5] as usize, b[6] as usize);
    if rows != layout.rows() || cols != layout.cols() {
        return Err(RisError::format(
            FrameField::Dimensions,
            format!("frame is {rows}x{cols}, layout is {}x{}", layout.rows(), layout.cols()),
        ));
    }
    let expected = BiasFrame::expected_len(rows, cols);
    if b.len() != expected {
        return Err(RisError::format(FrameField::Length, format!("expected {expected} bytes, got {}", b.len())));
    }
    Ok(Codeword::from_fn(layout, |r, c| {
        let idx = r * cols + c;
        let code = (b[FRAME_HEADER_LEN + idx / 4] >> (2 * (idx % 4))) & 0b11;
        PhaseCode::new(code).expect("2-bit field")
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn default_layout() {
        let l = SurfaceLayout::default();
        assert_eq!((l.rows(), l.cols()), (16, 16));
        assert_eq!(l.mask().len(), 16);
        assert_eq!(l.active_count(), 240);
        assert_eq!(l.active_elements().count(), 240);
        assert_abs_diff_eq!(l.aperture_area_m2(), 0.64, epsilon = 1e-12);
        assert_eq!(l.feed_position(), Point3::new(0.0, 0.0, 0.72));
    }

    #[test]
    fn default_mask_is_mirror_symmetric() {
        let m = default_mask();
        for &(r, c) in &m {
            assert!(m.contains(&(15 - r, c)));
            assert!(m.contains(&(r, 15 - c)));
            assert!((1..15).contains(&r) && (1..15).contains(&c), "interior");
        }
    }

    #[test]
    fn element_positions() {
        let l = SurfaceLayout::default();
        let p = l.element_position(7, 7).unwrap();
        assert_abs_diff_eq!(p.x, -0.025, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, -0.025, epsilon = 1e-12);
        let p = l.element_position(0, 0).unwrap();
        assert_abs_diff_eq!(p.x, -0.375, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, -0.375, epsilon = 1e-12);
        let p = l.element_position(15, 15).unwrap();
        assert_abs_diff_eq!(p.x, 0.375, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 0.375, epsilon = 1e-12);
        assert_eq!(p.z, 0.0);
        assert!(matches!(l.element_position(16, 0), Err(RisError::IndexOutOfRange { .. })));
    }

    #[test]
    fn layout_validation() {
        let feed = Point3::new(0.0, 0.0, 1.0);
        assert!(SurfaceLayout::new(0, 4, 0.05, BTreeSet::new(), feed, 2.3e9, 1.0, 0.0).is_err());
        assert!(SurfaceLayout::new(4, 4, 0.0, BTreeSet::new(), feed, 2.3e9, 1.0, 0.0).is_err());
        assert!(SurfaceLayout::new(4, 4, 0.05, BTreeSet::new(), Point3::new(0.0, 0.0, -1.0), 2.3e9, 1.0, 0.0).is_err());
        assert!(SurfaceLayout::new(4, 4, 0.05, [(4, 0)].into(), feed, 2.3e9, 1.0, 0.0).is_err());
        let all: BTreeSet<_> = (0..2).flat_map(|r| (0..2).map(move |c| (r, c))).collect();
        assert!(SurfaceLayout::new(2, 2, 0.05, all, feed, 2.3e9, 1.0, 0.0).is_err());
    }

    #[test]
    fn encode_all_zero() {
        let l = SurfaceLayout::rectangular(16, 16, 0.05).unwrap();
        let f = encode_bias_frame(&Codeword::uniform(&l, PhaseCode::new(0).unwrap())).unwrap();
        assert_eq!(&f.as_bytes()[..7], b"RIS1\x01\x10\x10");
        assert_eq!(f.as_bytes().len(), 7 + 64);
        assert!(f.payload().iter().all(|&b| b == 0));
    }

    #[test]
    fn encode_hand_packed() {
        let l = SurfaceLayout::rectangular(1, 4, 0.05).unwrap();
        let cw = Codeword::from_fn(&l, |_, c| PhaseCode::new(c as u8).unwrap());
        let f = encode_bias_frame(&cw).unwrap();
        assert_eq!(f.payload(), &[0xE4]);
        let back = decode_bias_frame(&f, &l).unwrap();
        let codes: Vec<u8> = back.states().iter().map(|s| s.code().unwrap().value()).collect();
        assert_eq!(codes, vec![0, 1, 2, 3]);
    }

    #[test]
    fn masked_encoded_as_zero() {
        let l = SurfaceLayout::rectangular(1, 4, 0.05).unwrap().with_mask([(0, 1)].into()).unwrap();
        let cw = Codeword::uniform(&l, PhaseCode::new(3).unwrap());
        let f = encode_bias_frame(&cw).unwrap();
        // codes 3, masked, 3, 3 -> 0b11_11_00_11
        assert_eq!(f.payload(), &[0b1111_0011]);
        assert_eq!(decode_bias_frame(&f, &l).unwrap(), cw);
    }

    #[test]
    fn decode_errors_name_the_field() {
        let l = SurfaceLayout::rectangular(1, 4, 0.05).unwrap();
        let good = encode_bias_frame(&Codeword::uniform(&l, PhaseCode::new(1).unwrap())).unwrap();
        let mut bad = good.as_bytes().to_vec();
        bad[..4].copy_from_slice(b"XXXX");
        let e = decode_bias_frame(&BiasFrame::from_bytes(bad), &l).unwrap_err();
        assert!(matches!(e, RisError::Format { field: FrameField::Magic, .. }));
        assert!(e.to_string().contains("magic"));

        let mut bad = good.as_bytes().to_vec();
        bad[4] = 2;
        let e = decode_bias_frame(&BiasFrame::from_bytes(bad), &l).unwrap_err();
        assert!(matches!(e, RisError::Format { field: FrameField::Version, .. }));

        let mut bad = good.as_bytes().to_vec();
        bad.pop();
        let e = decode_bias_frame(&BiasFrame::from_bytes(bad), &l).unwrap_err();
        assert!(matches!(e, RisError::Format { field: FrameField::Length, .. }));

        let e = decode_bias_frame(&BiasFrame::from_bytes(b"RIS".to_vec()), &l).unwrap_err();
        assert!(matches!(e, RisError::Format { field: FrameField::Length, .. }));

        let other = SurfaceLayout::rectangular(2, 2, 0.05).unwrap();
        let e = decode_bias_frame(&good, &other).unwrap_err();
        assert!(matches!(e, RisError::Format { field: FrameField::Dimensions, .. }));
    }

    #[test]
    fn codeword_text_roundtrip() {
        let l = SurfaceLayout::default();
        let cw = Codeword::from_fn(&l, |r, c| PhaseCode::new(((r * 7 + c * 3) % 4) as u8).unwrap());
        let text = cw.to_text();
        assert_eq!(text.lines().count(), 16);
        assert!(text.lines().nth(4).unwrap().split(' ').nth(4) == Some("-"));
        assert_eq!(Codeword::from_text(&text).unwrap(), cw);
        assert!(Codeword::from_text("0 1\n2\n").is_err());
        assert!(Codeword::from_text("0 7\n").is_err());
    }

    #[test]
    fn codeword_validation() {
        let l = SurfaceLayout::default();
        let mut cw = Codeword::uniform(&l, PhaseCode::new(0).unwrap());
        assert!(cw.validate(&l).is_ok());
        cw.set(0, 0, ElementState::Masked);
        assert!(cw.validate(&l).is_err());
        let small = SurfaceLayout::rectangular(4, 4, 0.05).unwrap();
        assert!(Codeword::uniform(&small, PhaseCode::new(0).unwrap()).validate(&l).is_err());
    }

    #[test]
    fn oversized_codeword_rejected() {
        let l = SurfaceLayout::rectangular(1, 256, 0.01).unwrap();
        assert!(encode_bias_frame(&Codeword::uniform(&l, PhaseCode::new(0).unwrap())).is_err());
    }

    fn layout_and_codeword() -> impl Strategy<Value = (SurfaceLayout, Codeword)> {
        (1usize..20, 1usize..20)
            .prop_flat_map(|(rows, cols)| {
                let n = rows * cols;
                (
                    Just((rows, cols)),
                    proptest::collection::vec(0u8..4, n),
                    proptest::collection::vec(any::<bool>(), n),
                )
            })
            .prop_map(|((rows, cols), codes, masked)| {
                let mut mask: BTreeSet<_> = (0..rows * cols)
                    .filter(|&i| masked[i])
                    .map(|i| (i / cols, i % cols))
                    .collect();
                if mask.len() == rows * cols {
                    mask.remove(&(0, 0));
                }
                let l = SurfaceLayout::rectangular(rows, cols, 0.05).unwrap().with_mask(mask).unwrap();
                let cw = Codeword::from_fn(&l, |r, c| PhaseCode::new(codes[r * cols + c]).unwrap());
                (l, cw)
            })
    }

    proptest! {
        #[test]
        fn frame_roundtrip((layout, cw) in layout_and_codeword()) {
            let frame = encode_bias_frame(&cw).unwrap();
            prop_assert_eq!(frame.as_bytes().len(), 7 + (layout.rows() * layout.cols()).div_ceil(4));
            let back = decode_bias_frame(&frame, &layout).unwrap();
            prop_assert_eq!(&back, &cw);
            let again = encode_bias_frame(&back).unwrap();
            prop_assert_eq!(again, frame);
        }

        #[test]
        fn unmasked_grid_centroid_at_origin(rows in 1usize..30, cols in 1usize..30, spacing in 0.001f64..1.0) {
            let l = SurfaceLayout::rectangular(rows, cols, spacing).unwrap();
            let (mut sx, mut sy) = (0.0, 0.0);
            for (r, c) in l.active_elements() {
                let p = l.element_position(r, c).unwrap();
                sx += p.x;
                sy += p.y;
            }
            let n = (rows * cols) as f64;
            prop_assert!((sx / n).abs() < 1e-12 && (sy / n).abs() < 1e-12);
        }
    }
}
