//! Log-space reductions shared by the filters and the surface.

use std::f64::consts::PI;

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln Σ exp(x_i)` with max-shift. Returns `-inf` for an empty slice or when
/// every entry is `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let s: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + s.ln()
}

/// `ln((1/N) Σ exp(x_i))`.
pub fn log_mean_exp(xs: &[f64]) -> f64 {
    log_sum_exp(xs) - (xs.len() as f64).ln()
}

/// Log-density of `N(mean, sd²)` at `x`.
#[inline]
pub fn normal_logpdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - LN_SQRT_2PI
}

/// Log-density of `N(mean, var)` at `x`, parameterized by variance.
#[inline]
pub fn normal_logpdf_var(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (d * d / var + (2.0 * PI * var).ln())
}
