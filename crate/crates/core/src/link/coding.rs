//! Zero-tail convolutional coding with Viterbi decoding.

use crate::error::{Result, RisError};

/// Channel coder selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoderSpec {
    None,
    /// Rate `1/inverse_rate`, constraint length `constraint_length`.
    Convolutional {
        inverse_rate: usize,
        constraint_length: usize,
    },
}

impl Default for CoderSpec {
    fn default() -> Self {
        CoderSpec::Convolutional {
            inverse_rate: 2,
            constraint_length: 7,
        }
    }
}

impl CoderSpec {
    pub fn code_rate(&self) -> f64 {
        match self {
            CoderSpec::None => 1.0,
            CoderSpec::Convolutional { inverse_rate, .. } => 1.0 / *inverse_rate as f64,
        }
    }

    /// Coded length for `info_bits` input bits.
    pub fn encoded_len(&self, info_bits: usize) -> usize {
        match *self {
            CoderSpec::None => info_bits,
            CoderSpec::Convolutional {
                inverse_rate,
                constraint_length,
            } => inverse_rate * (info_bits + constraint_length - 1),
        }
    }

    /// Largest input length whose coded length fits in `coded_bits`.
    pub fn max_info_len(&self, coded_bits: usize) -> usize {
        match *self {
            CoderSpec::None => coded_bits,
            CoderSpec::Convolutional {
                inverse_rate,
                constraint_length,
            } => (coded_bits / inverse_rate).saturating_sub(constraint_length - 1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CoderSpec::None => Ok(()),
            CoderSpec::Convolutional { .. } => ConvCode::new(*self).map(|_| ()),
        }
    }
}

/// Octal generators, most significant tap on the current input bit.
fn generators(inverse_rate: usize, constraint_length: usize) -> Option<&'static [u32]> {
    match (inverse_rate, constraint_length) {
        (2, 3) => Some(&[0o7, 0o5]),
        (2, 5) => Some(&[0o23, 0o35]),
        (2, 7) => Some(&[0o133, 0o171]),
        (2, 9) => Some(&[0o561, 0o753]),
        (3, 7) => Some(&[0o133, 0o171, 0o165]),
        _ => None,
    }
}

struct ConvCode {
    k: usize,
    gens: &'static [u32],
}

impl ConvCode {
    fn new(spec: CoderSpec) -> Result<Self> {
        match spec {
            CoderSpec::None => Err(RisError::invalid("coder", "no convolutional code selected")),
            CoderSpec::Convolutional {
                inverse_rate,
                constraint_length,
            } => generators(inverse_rate, constraint_length)
                .map(|gens| Self {
                    k: constraint_length,
                    gens,
                })
                .ok_or(RisError::UnsupportedCode {
                    inverse_rate,
                    constraint_length,
                }),
        }
    }

    fn states(&self) -> usize {
        1 << (self.k - 1)
    }

    /// Output bits for input `bit` leaving `state` (previous K-1 inputs,
    /// most recent in the high bit).
    fn output(&self, state: usize, bit: u8, out: &mut [u8]) {
        let reg = ((bit as u32) << (self.k - 1)) | state as u32;
        for (o, g) in out.iter_mut().zip(self.gens) {
            *o = ((reg & g).count_ones() & 1) as u8;
        }
    }

    fn next_state(&self, state: usize, bit: u8) -> usize {
        (((bit as usize) << (self.k - 1)) | state) >> 1
    }
}

pub fn encode(bits: &[u8], spec: CoderSpec) -> Result<Vec<u8>> {
    if bits.is_empty() {
        return Err(RisError::invalid("encoder input", "empty bit stream"));
    }
    if spec == CoderSpec::None {
        return Ok(bits.to_vec());
    }
    let code = ConvCode::new(spec)?;
    let n = code.gens.len();
    let mut out = Vec::with_capacity(spec.encoded_len(bits.len()));
    let mut state = 0;
    let mut buf = vec![0u8; n];
    for &b in bits.iter().chain(std::iter::repeat_n(&0u8, code.k - 1)) {
        code.output(state, b, &mut buf);
        out.extend_from_slice(&buf);
        state = code.next_state(state, b);
    }
    Ok(out)
}

/// Hard bits as unit log-likelihood ratios (positive meaning 0).
pub fn hard_to_llr(bits: &[u8]) -> Vec<f64> {
    bits.iter().map(|&b| if b == 0 { 1.0 } else { -1.0 }).collect()
}

/// Maximum-likelihood decoding of a zero-tail stream of LLRs (positive
/// meaning 0). Equal path metrics resolve to the lowest predecessor state.
pub fn viterbi_decode(llr: &[f64], spec: CoderSpec) -> Result<Vec<u8>> {
    if spec == CoderSpec::None {
        return Ok(llr.iter().map(|&l| u8::from(l < 0.0)).collect());
    }
    let code = ConvCode::new(spec)?;
    let n = code.gens.len();
    let tail = code.k - 1;
    if llr.len() % n != 0 || llr.len() / n <= tail {
        return Err(RisError::LengthMismatch {
            expected: format!("a multiple of {n} longer than {} bits", n * tail),
            got: llr.len(),
        });
    }
    let steps = llr.len() / n;
    let ns = code.states();

    // Branch outputs as +/-1 per (state, input).
    let mut branch = vec![vec![0.0f64; n]; ns * 2];
    let mut buf = vec![0u8; n];
    for s in 0..ns {
        for b in 0..2u8 {
            code.output(s, b, &mut buf);
            for (o, &c) in branch[s * 2 + b as usize].iter_mut().zip(&buf) {
                *o = 1.0 - 2.0 * c as f64;
            }
        }
    }

    let mut metric = vec![f64::NEG_INFINITY; ns];
    metric[0] = 0.0;
    let mut next = vec![0.0; ns];
    // predecessor state per step and state
    let mut from = vec![0u32; steps * ns];
    for t in 0..steps {
        let r = &llr[t * n..(t + 1) * n];
        next.fill(f64::NEG_INFINITY);
        let pred = &mut from[t * ns..(t + 1) * ns];
        for s in 0..ns {
            if metric[s] == f64::NEG_INFINITY {
                continue;
            }
            for b in 0..2u8 {
                if t >= steps - tail && b == 1 {
                    continue;
                }
                let m = metric[s] + branch[s * 2 + b as usize].iter().zip(r).map(|(c, l)| c * l).sum::<f64>();
                let s2 = code.next_state(s, b);
                // states visited in increasing order, so strict > keeps the lowest on ties
                if m > next[s2] {
                    next[s2] = m;
                    pred[s2] = s as u32;
                }
            }
        }
        std::mem::swap(&mut metric, &mut next);
    }

    let mut bits = vec![0u8; steps];
    let mut s = 0usize;
    for t in (0..steps).rev() {
        // the input bit is the high bit of the state it leads to
        bits[t] = ((s >> (code.k - 2)) & 1) as u8;
        s = from[t * ns + s] as usize;
    }
    bits.truncate(steps - tail);
    Ok(bits)
}
