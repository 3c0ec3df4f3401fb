//! PSNR and SSIM between a restored image and its reference.
//!
//! SSIM uses the original publication's defaults: 11x11 Gaussian window
//! with sigma 1.5, K1 = 0.01, K2 = 0.03, averaged over the fully
//! overlapping (valid) region only — no padded borders.

use core::fmt;

use crate::image::Image;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    pub psnr_db: f64,
    pub ssim: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricsError {
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    /// SSIM needs both sides of the image to cover the window.
    ImageTooSmall {
        width: usize,
        height: usize,
    },
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::DimensionMismatch { left, right } => write!(
                f,
                "image dimensions differ: {}x{} vs {}x{}",
                left.0, left.1, right.0, right.1
            ),
            MetricsError::ImageTooSmall { width, height } => write!(
                f,
                "{width}x{height} image is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window"
            ),
        }
    }
}

impl core::error::Error for MetricsError {}

fn check_shapes(x: &Image, reference: &Image) -> Result<(), MetricsError> {
    if !x.same_shape(reference) {
        return Err(MetricsError::DimensionMismatch {
            left: (x.width(), x.height()),
            right: (reference.width(), reference.height()),
        });
    }
    Ok(())
}

/// `10 log10(peak^2 / MSE)`; positive infinity when the images are equal.
pub fn psnr(x: &Image, reference: &Image, peak: f64) -> Result<f64, MetricsError> {
    check_shapes(x, reference)?;
    assert!(peak > 0.0, "peak must be positive");
    let mut sq = 0.0;
    for (&a, &b) in x.pixels().iter().zip(reference.pixels()) {
        sq += (a - b) * (a - b);
    }
    let mse = sq / x.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * libm::log10(peak * peak / mse))
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = libm::exp(-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA));
        sum += *v;
    }
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// Valid-region separable window filter: output is
/// `(w - SSIM_WINDOW + 1) x (h - SSIM_WINDOW + 1)`.
fn filter_valid(img: &Image, win: &[f64; SSIM_WINDOW]) -> Image {
    let w = img.width();
    let h = img.height();
    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;
    // horizontal pass
    let mut horiz = Image::zeros(ow, h);
    for y in 0..h {
        let src = img.row(y);
        let dst = horiz.row_mut(y);
        for (x, d) in dst.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, &g) in win.iter().enumerate() {
                acc += g * src[x + k];
            }
            *d = acc;
        }
    }
    // vertical pass
    let mut out = Image::zeros(ow, oh);
    for y in 0..oh {
        let dst = out.row_mut(y);
        for (k, &g) in win.iter().enumerate() {
            let src = horiz.row(y + k);
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += g * s;
            }
        }
    }
    out
}

/// Mean local structural similarity over the valid region.
pub fn ssim(x: &Image, reference: &Image, peak: f64) -> Result<f64, MetricsError> {
    check_shapes(x, reference)?;
    assert!(peak > 0.0, "peak must be positive");
    if x.width() < SSIM_WINDOW || x.height() < SSIM_WINDOW {
        return Err(MetricsError::ImageTooSmall {
            width: x.width(),
            height: x.height(),
        });
    }
    let win = gaussian_window();
    let c1 = (SSIM_K1 * peak) * (SSIM_K1 * peak);
    let c2 = (SSIM_K2 * peak) * (SSIM_K2 * peak);

    let mu_x = filter_valid(x, &win);
    let mu_y = filter_valid(reference, &win);
    let xx = filter_valid(&x.map(|p| p * p), &win);
    let yy = filter_valid(&reference.map(|p| p * p), &win);
    let xy = {
        let mut prod = x.clone();
        for (p, &q) in prod.pixels_mut().iter_mut().zip(reference.pixels()) {
            *p *= q;
        }
        filter_valid(&prod, &win)
    };

    let n = mu_x.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mx = mu_x.pixels()[i];
        let my = mu_y.pixels()[i];
        let var_x = xx.pixels()[i] - mx * mx;
        let var_y = yy.pixels()[i] - my * my;
        let cov = xy.pixels()[i] - mx * my;
        let num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
        let den = (mx * mx + my * my + c1) * (var_x + var_y + c2);
        acc += num / den;
    }
    Ok(acc / n as f64)
}

/// Both metrics at once.
pub fn quality(x: &Image, reference: &Image, peak: f64) -> Result<QualityReport, MetricsError> {
    Ok(QualityReport {
        psnr_db: psnr(x, reference, peak)?,
        ssim: ssim(x, reference, peak)?,
    })
}
