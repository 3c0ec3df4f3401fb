//! Row-major grayscale image buffer used throughout the crate.
//!
//! Pixels are `f64` amplitudes. Observed and restored images live on the
//! native sample scale (0..=255 for 8-bit sources); log-domain iterates
//! store `w = ln u` in the same buffer type.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Image {
    /// All-zero image. Panics if either dimension is zero.
    pub fn zeros(width: usize, height: usize) -> Self {
        Self::constant(width, height, 0.0)
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        Image {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    /// Wraps an existing row-major buffer. Panics unless
    /// `pixels.len() == width * height`.
    pub fn from_pixels(width: usize, height: usize, pixels: Vec<f64>) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        assert_eq!(
            pixels.len(),
            width * height,
            "pixel buffer length does not match dimensions"
        );
        Image {
            width,
            height,
            pixels,
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::from_pixels(width, height, pixels)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    #[inline]
    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.pixels[y * self.width + x] = value;
    }

    #[inline]
    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.pixels
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[f64] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }

    #[inline]
    pub fn row_mut(&mut self, y: usize) -> &mut [f64] {
        &mut self.pixels[y * self.width..(y + 1) * self.width]
    }

    /// Converts a flat pixel index back to `(x, y)` coordinates.
    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&p| f(p)).collect(),
        }
    }

    pub fn map_in_place(&mut self, f: impl Fn(f64) -> f64) {
        for p in &mut self.pixels {
            *p = f(*p);
        }
    }

    pub fn fill(&mut self, value: f64) {
        for p in &mut self.pixels {
            *p = value;
        }
    }

    /// Standard inner product. Panics on shape mismatch.
    pub fn dot(&self, other: &Image) -> f64 {
        assert!(self.same_shape(other), "shape mismatch in dot product");
        self.pixels
            .iter()
            .zip(&other.pixels)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Euclidean norm of the pixel vector.
    pub fn norm(&self) -> f64 {
        libm::sqrt(self.pixels.iter().map(|p| p * p).sum())
    }

    /// `||self - other||_2`. Panics on shape mismatch.
    pub fn distance(&self, other: &Image) -> f64 {
        assert!(self.same_shape(other), "shape mismatch in distance");
        libm::sqrt(
            self.pixels
                .iter()
                .zip(&other.pixels)
                .map(|(a, b)| (a - b) * (a - b))
                .sum(),
        )
    }

    /// `self += scale * other`, elementwise. Panics on shape mismatch.
    pub fn scaled_add(&mut self, scale: f64, other: &Image) {
        assert!(self.same_shape(other), "shape mismatch in scaled_add");
        for (a, b) in self.pixels.iter_mut().zip(&other.pixels) {
            *a += scale * b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.pixels.iter().all(|p| p.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.pixels.iter().fold(f64::INFINITY, |m, &p| m.min(p))
    }

    pub fn max(&self) -> f64 {
        self.pixels.iter().fold(f64::NEG_INFINITY, |m, &p| m.max(p))
    }
}
