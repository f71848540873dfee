//! Pilot-based channel estimation and one-tap equalization.

use num_complex::Complex64;

use super::ofdm::{pilot_value, OfdmSymbolGrid};

/// Least-squares pilot estimates averaged over the frame's symbols, then
/// linearly interpolated across subcarrier frequency (extrapolated beyond
/// the outermost pilots). One value per used subcarrier, held for the
/// whole frame.
pub fn estimate_channel(grid: &OfdmSymbolGrid) -> Vec<Complex64> {
    let map = grid.map();
    let symbols = grid.symbols().max(1);
    let pilots: Vec<(f64, Complex64)> = map
        .pilots()
        .map(|u| {
            let x = pilot_value(u);
            let h: Complex64 = (0..grid.symbols()).map(|s| grid.used(s, u) / x).sum::<Complex64>() / symbols as f64;
            (map.signed_index(u) as f64, h)
        })
        .collect();
    (0..map.used())
        .map(|u| interpolate(&pilots, map.signed_index(u) as f64))
        .collect()
}

fn interpolate(points: &[(f64, Complex64)], f: f64) -> Complex64 {
    match points.len() {
        0 => Complex64::new(1.0, 0.0),
        1 => points[0].1,
        n => {
            let i = points.partition_point(|p| p.0 <= f).clamp(1, n - 1) - 1;
            let (f0, h0) = points[i];
            let (f1, h1) = points[i + 1];
            let t = (f - f0) / (f1 - f0);
            h0 + (h1 - h0) * t
        }
    }
}

/// Zero-forcing equalization of the data cells. A per-symbol common phase
/// measured on the pilots absorbs residual frequency offset. Returns the
/// equalized cells in transmission order and each cell's |H|^2.
pub fn equalize(grid: &OfdmSymbolGrid, channel: &[Complex64]) -> (Vec<Complex64>, Vec<f64>) {
    let map = grid.map();
    let data: Vec<usize> = map.data().collect();
    let mut cells = Vec::with_capacity(grid.symbols() * data.len());
    let mut gains = Vec::with_capacity(cells.capacity());
    for s in 0..grid.symbols() {
        let cpe: Complex64 = map
            .pilots()
            .map(|u| grid.used(s, u) * (channel[u] * pilot_value(u)).conj())
            .sum();
        let rot = if cpe.norm() > 0.0 { cpe.conj() / cpe.norm() } else { Complex64::new(1.0, 0.0) };
        for &u in &data {
            let h = channel[u];
            let y = grid.used(s, u) * rot;
            cells.push(if h.norm_sqr() > 0.0 { y / h } else { Complex64::default() });
            gains.push(h.norm_sqr());
        }
    }
    (cells, gains)
}
