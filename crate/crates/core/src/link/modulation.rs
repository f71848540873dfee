//! Gray-labelled square QAM.
//!
//! Bits alternate between the in-phase and quadrature axes: even-indexed
//! bits of a symbol label I, odd-indexed bits label Q. On each axis the
//! first bit is the sign and the remaining bits fold the magnitude, so
//! `00` maps to `(1 + j) / sqrt(2)` for QPSK and `000000` to
//! `(3 + 3j) / sqrt(42)` for 64QAM.

use num_complex::Complex64;

use crate::error::{Result, RisError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modulation {
    Qpsk,
    Qam16,
    Qam64,
}

impl Modulation {
    pub const ALL: [Modulation; 3] = [Modulation::Qpsk, Modulation::Qam16, Modulation::Qam64];

    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
            Modulation::Qam64 => 6,
        }
    }

    fn bits_per_axis(self) -> usize {
        self.bits_per_symbol() / 2
    }

    fn scale(self) -> f64 {
        match self {
            Modulation::Qpsk => 1.0 / 2f64.sqrt(),
            Modulation::Qam16 => 1.0 / 10f64.sqrt(),
            Modulation::Qam64 => 1.0 / 42f64.sqrt(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Qpsk => "qpsk",
            Modulation::Qam16 => "16qam",
            Modulation::Qam64 => "64qam",
        }
    }

    /// All constellation points in label order.
    pub fn constellation(self) -> Vec<Complex64> {
        let n = self.bits_per_symbol();
        (0..1usize << n)
            .map(|label| {
                let bits: Vec<u8> = (0..n).map(|i| ((label >> (n - 1 - i)) & 1) as u8).collect();
                self.point(&bits)
            })
            .collect()
    }

    fn point(self, bits: &[u8]) -> Complex64 {
        let i: Vec<u8> = bits.iter().step_by(2).copied().collect();
        let q: Vec<u8> = bits.iter().skip(1).step_by(2).copied().collect();
        Complex64::new(axis_level(&i), axis_level(&q)) * self.scale()
    }

    /// (level, bits) of every point on one axis, unscaled.
    fn axis_table(self) -> Vec<(f64, Vec<u8>)> {
        let m = self.bits_per_axis();
        (0..1usize << m)
            .map(|label| {
                let bits: Vec<u8> = (0..m).map(|i| ((label >> (m - 1 - i)) & 1) as u8).collect();
                (axis_level(&bits), bits)
            })
            .collect()
    }
}

impl std::str::FromStr for Modulation {
    type Err = RisError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" | "4qam" => Ok(Modulation::Qpsk),
            "16qam" | "qam16" => Ok(Modulation::Qam16),
            "64qam" | "qam64" => Ok(Modulation::Qam64),
            other => Err(RisError::invalid("modulation", format!("unknown scheme '{other}'"))),
        }
    }
}

/// Signed odd-integer level of one axis: sign bit first, then the
/// reflected-binary magnitude bits.
fn axis_level(bits: &[u8]) -> f64 {
    fn magnitude(bits: &[u8]) -> f64 {
        match bits {
            [] => 1.0,
            [b, rest @ ..] => {
                let half = (1usize << bits.len()) as f64;
                half - sign(*b) * magnitude(rest)
            }
        }
    }
    match bits {
        [] => 0.0,
        [b, rest @ ..] => sign(*b) * magnitude(rest),
    }
}

fn sign(b: u8) -> f64 {
    1.0 - 2.0 * b as f64
}

pub fn map_symbols(bits: &[u8], modulation: Modulation) -> Result<Vec<Complex64>> {
    let n = modulation.bits_per_symbol();
    if bits.len() % n != 0 {
        return Err(RisError::LengthMismatch {
            expected: format!("a multiple of {n} bits"),
            got: bits.len(),
        });
    }
    Ok(bits.chunks(n).map(|c| modulation.point(c)).collect())
}

fn nearest_axis(table: &[(f64, Vec<u8>)], x: f64) -> &[u8] {
    let mut best = &table[0];
    for entry in &table[1..] {
        if (entry.0 - x).abs() < (best.0 - x).abs() {
            best = entry;
        }
    }
    &best.1
}

/// Hard-decision demapping to the nearest constellation point.
pub fn demap_symbols(symbols: &[Complex64], modulation: Modulation) -> Vec<u8> {
    let table = modulation.axis_table();
    let s = modulation.scale();
    let m = modulation.bits_per_axis();
    let mut out = Vec::with_capacity(symbols.len() * 2 * m);
    for z in symbols {
        let i = nearest_axis(&table, z.re / s);
        let q = nearest_axis(&table, z.im / s);
        for k in 0..m {
            out.push(i[k]);
            out.push(q[k]);
        }
    }
    out
}

/// Max-log bit log-likelihood ratios, positive meaning bit 0. `weight` is
/// the per-symbol reliability `|H|^2 / sigma^2` of the equalized symbol.
pub fn demap_soft(symbols: &[Complex64], weights: &[f64], modulation: Modulation) -> Vec<f64> {
    let table = modulation.axis_table();
    let s = modulation.scale();
    let m = modulation.bits_per_axis();
    let axis_llr = |x: f64, k: usize, w: f64| -> f64 {
        let (mut d0, mut d1) = (f64::INFINITY, f64::INFINITY);
        for (level, bits) in &table {
            let d = (x - level * s).powi(2);
            if bits[k] == 0 {
                d0 = d0.min(d);
            } else {
                d1 = d1.min(d);
            }
        }
        w * (d1 - d0)
    };
    let mut out = Vec::with_capacity(symbols.len() * 2 * m);
    for (z, &w) in symbols.iter().zip(weights) {
        for k in 0..m {
            out.push(axis_llr(z.re, k, w));
            out.push(axis_llr(z.im, k, w));
        }
    }
    out
}
