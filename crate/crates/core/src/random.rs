//! Seeded smooth random functions on a meridian grid.
//!
//! Test functions are truncated trigonometric series compatible with the
//! boundary conditions: cosines in `πks/L` on pole-closed meridians,
//! cosines and sines in `2πks/L` on circles. Coefficients decay like `k⁻²`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discretization::Grid;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Series with unit sup norm and no constant mode.
pub fn smooth_series(rng: &mut impl Rng, grid: &Grid, modes: usize) -> Vec<f64> {
    let length = grid.manifold().domain_length;
    let periodic = grid.periodic();
    let mut coeffs = Vec::with_capacity(modes);
    for k in 1..=modes.max(1) {
        let decay = 1.0 / (k * k) as f64;
        let a = rng.gen_range(-1.0..1.0) * decay;
        let b = if periodic { rng.gen_range(-1.0..1.0) * decay } else { 0.0 };
        coeffs.push((k as f64, a, b));
    }
    let base = if periodic { 2.0 } else { 1.0 } * std::f64::consts::PI / length;
    let mut values = grid.sample(|s| coeffs.iter().map(|(k, a, b)| a * (base * k * s).cos() + b * (base * k * s).sin()).sum());
    let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sup > 0.0 {
        values.iter_mut().for_each(|v| *v /= sup);
    }
    values
}

/// `1 + amplitude·series` with `amplitude ∈ [0.1, 0.8]`: bounded below by `0.2`.
pub fn random_positive(rng: &mut impl Rng, grid: &Grid, modes: usize) -> Vec<f64> {
    let amp = rng.gen_range(0.1..0.8);
    smooth_series(rng, grid, modes).into_iter().map(|v| 1.0 + amp * v).collect()
}

/// Rectified series `scale · max(c + series, 0)` with `c ∈ [-0.3, 0.8]`; never
/// identically zero.
pub fn random_nonnegative_potential(rng: &mut impl Rng, grid: &Grid, modes: usize, scale: f64) -> Vec<f64> {
    let offset = rng.gen_range(-0.3..0.8);
    let series = smooth_series(rng, grid, modes);
    let v: Vec<f64> = series.iter().map(|s| scale * (offset + s).max(0.0)).collect();
    if v.iter().all(|x| *x == 0.0) {
        return series.iter().map(|s| scale * s.abs()).collect();
    }
    v
}

/// Series shifted so its minimum is `floor` and scaled to `[floor, floor + spread]`.
pub fn random_positive_potential(rng: &mut impl Rng, grid: &Grid, modes: usize, floor: f64, spread: f64) -> Vec<f64> {
    let series = smooth_series(rng, grid, modes);
    let lo = series.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo).max(1e-300);
    series.iter().map(|s| floor + spread * (s - lo) / width).collect()
}
