//! Synthetic multi-look amplitude speckle.
//!
//! Per pixel the intensity factor is the mean of `L` independent unit-mean
//! exponential draws — a Gamma(L, 1/L) variable — and the amplitude is
//! multiplied by its square root, so `f/u` is exactly Nakagami(L, 1).
//!
//! Draws come from a counter-keyed generator: every value depends only on
//! `(seed, pixel index, draw index)`, never on traversal order, so the
//! noise field is reproducible and pixel-parallel generation stays
//! deterministic.

use crate::image::Image;

/// Noise synthesis parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseSpec {
    /// Number of looks, i.e. independent intensities averaged. At least 1.
    pub looks: u32,
    pub seed: u64,
}

const GOLDEN: u64 = 0x9E3779B97F4A7C15;

/// SplitMix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Keyed counter draw: uniform bits for `(seed, pixel, draw)`.
#[inline]
fn counter_bits(seed: u64, pixel: u64, draw: u64) -> u64 {
    let lane = mix64(seed ^ GOLDEN.wrapping_mul(pixel.wrapping_add(1)));
    mix64(lane.wrapping_add(GOLDEN.wrapping_mul(draw.wrapping_add(1))))
}

/// Uniform in (0, 1]; never returns 0, so `-ln` stays finite.
#[inline]
fn uniform_open(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 * (1.0 / 9007199254740992.0)
}

/// Mean of `looks` unit-mean exponential draws for one pixel.
fn intensity_factor(seed: u64, pixel: u64, looks: u32) -> f64 {
    let mut sum = 0.0;
    for draw in 0..looks as u64 {
        sum += -libm::log(uniform_open(counter_bits(seed, pixel, draw)));
    }
    sum / looks as f64
}

/// Multiplies `u` by per-pixel Nakagami(L, 1) speckle factors.
///
/// Zero pixels stay zero; the same seed reproduces the same noise field
/// bit for bit, and scaling `u` scales the output by exactly the same
/// factor (the noise field does not depend on `u`).
pub fn add_speckle(u: &Image, spec: &NoiseSpec) -> Image {
    assert!(spec.looks >= 1, "looks must be at least 1");
    let mut out = u.clone();
    for (index, p) in out.pixels_mut().iter_mut().enumerate() {
        let s = intensity_factor(spec.seed, index as u64, spec.looks);
        *p *= libm::sqrt(s);
    }
    out
}

/// Sample mean and (unbiased) variance of `(f/u)^2`.
///
/// For correct L-look speckle these estimate 1 and 1/L. The reference must
/// be positive wherever sampled.
pub fn speckle_moments(samples: &Image, reference: &Image) -> (f64, f64) {
    assert!(samples.same_shape(reference), "shape mismatch");
    let n = samples.len();
    let mut mean = 0.0;
    for (&fp, &up) in samples.pixels().iter().zip(reference.pixels()) {
        let r = fp / up;
        mean += r * r;
    }
    mean /= n as f64;
    let mut var = 0.0;
    for (&fp, &up) in samples.pixels().iter().zip(reference.pixels()) {
        let r = fp / up;
        let d = r * r - mean;
        var += d * d;
    }
    if n > 1 {
        var /= (n - 1) as f64;
    }
    (mean, var)
}

/// CDF of the intensity factor `(f/u)^2`, i.e. Gamma(shape L, scale 1/L),
/// in closed form for integer `L`:
/// `P(X <= x) = 1 - e^{-Lx} sum_{j<L} (Lx)^j / j!`.
pub fn intensity_factor_cdf(looks: u32, x: f64) -> f64 {
    assert!(looks >= 1, "looks must be at least 1");
    if x <= 0.0 {
        return 0.0;
    }
    let z = looks as f64 * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..looks {
        term *= z / j as f64;
        sum += term;
    }
    1.0 - libm::exp(-z) * sum
}
