//! Row-in, column-out block interleaver.

use crate::error::{Result, RisError};

fn check(len: usize, rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(RisError::invalid("interleaver", "rows and cols must be positive"));
    }
    if len != rows * cols {
        return Err(RisError::LengthMismatch {
            expected: format!("{rows}x{cols} = {} bits", rows * cols),
            got: len,
        });
    }
    Ok(())
}

/// Writes row by row, reads column by column.
pub fn interleave<T: Copy>(bits: &[T], rows: usize, cols: usize) -> Result<Vec<T>> {
    check(bits.len(), rows, cols)?;
    let mut out = bits.to_vec();
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = bits[r * cols + c];
        }
    }
    Ok(out)
}

pub fn deinterleave<T: Copy>(bits: &[T], rows: usize, cols: usize) -> Result<Vec<T>> {
    check(bits.len(), rows, cols)?;
    let mut out = bits.to_vec();
    for r in 0..rows {
        for c in 0..cols {
            out[r * cols + c] = bits[c * rows + r];
        }
    }
    Ok(out)
}

/// Applies `f` to each `rows * cols` block of `bits` (length must be a
/// whole number of blocks).
pub(crate) fn blockwise<T: Copy>(
    bits: &[T],
    rows: usize,
    cols: usize,
    f: fn(&[T], usize, usize) -> Result<Vec<T>>,
) -> Result<Vec<T>> {
    let block = rows * cols;
    if block == 0 || bits.len() % block != 0 {
        return Err(RisError::LengthMismatch {
            expected: format!("a multiple of {block} bits"),
            got: bits.len(),
        });
    }
    let mut out = Vec::with_capacity(bits.len());
    for chunk in bits.chunks(block) {
        out.extend(f(chunk, rows, cols)?);
    }
    Ok(out)
}
