//! Filter-response prior: periodic convolution, its exact adjoint, the
//! Lorentzian potential, and the prior energy/gradient in both the
//! amplitude domain `u` and the log domain `w = ln u`.

use core::fmt;

use crate::filter_bank::{FilterBank, Kernel};
use crate::image::Image;

/// Log-domain values above this bound would overflow `exp`; the gradient
/// and energy paths refuse them instead of producing infinities.
pub const LOG_OVERFLOW_BOUND: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvolutionError {
    EvenKernel { size: usize },
    KernelLargerThanImage { size: usize, width: usize, height: usize },
}

impl fmt::Display for ConvolutionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConvolutionError::EvenKernel { size } => {
                write!(f, "kernel side length {size} must be odd")
            }
            ConvolutionError::KernelLargerThanImage {
                size,
                width,
                height,
            } => write!(
                f,
                "{size}x{size} kernel does not fit a {width}x{height} image"
            ),
        }
    }
}

impl core::error::Error for ConvolutionError {}

/// Log-domain overflow: `w[index]` exceeds [`LOG_OVERFLOW_BOUND`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogOverflowError {
    pub index: usize,
    pub value: f64,
}

impl fmt::Display for LogOverflowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "exp overflow: w[{}] = {} exceeds bound {}",
            self.index, self.value, LOG_OVERFLOW_BOUND
        )
    }
}

impl core::error::Error for LogOverflowError {}

fn check_fits(image: &Image, kernel: &Kernel) -> Result<(), ConvolutionError> {
    let s = kernel.size();
    if s.is_multiple_of(2) {
        return Err(ConvolutionError::EvenKernel { size: s });
    }
    if s > image.width() || s > image.height() {
        return Err(ConvolutionError::KernelLargerThanImage {
            size: s,
            width: image.width(),
            height: image.height(),
        });
    }
    Ok(())
}

/// Periodic cross-correlation:
/// `out[y][x] = sum_{a,b} k[a][b] * img[(y+a-r) mod h][(x+b-r) mod w]`.
///
/// Each source row is copied into a wrap-extended scratch buffer so the
/// tap loop runs branch-free over the full width; the tap count is a const
/// generic for the common sizes so it unrolls. Caller guarantees the
/// kernel fits.
fn correlate_into(out: &mut Image, image: &Image, kernel: &Kernel) {
    match kernel.size() {
        1 => correlate_rows::<1>(out, image, kernel),
        3 => correlate_rows::<3>(out, image, kernel),
        5 => correlate_rows::<5>(out, image, kernel),
        7 => correlate_rows::<7>(out, image, kernel),
        9 => correlate_rows::<9>(out, image, kernel),
        s => {
            debug_assert!(s % 2 == 1);
            correlate_generic(out, image, kernel, s)
        }
    }
}

/// Writes `src` flanked by its periodic wrap into `ext` (length `w + s - 1`).
#[inline]
fn extend_row(ext: &mut [f64], src: &[f64], r: usize) {
    let w = src.len();
    ext[..r].copy_from_slice(&src[w - r..]);
    ext[r..r + w].copy_from_slice(src);
    ext[r + w..].copy_from_slice(&src[..r]);
}

fn correlate_rows<const S: usize>(out: &mut Image, image: &Image, kernel: &Kernel) {
    let w = image.width();
    let h = image.height();
    let r = S / 2;
    let mut ext = alloc::vec![0.0; w + S - 1];
    out.fill(0.0);
    for y in 0..h {
        let out_row = out.row_mut(y);
        for a in 0..S {
            let sy = (y + a + h - r) % h;
            extend_row(&mut ext, image.row(sy), r);
            let mut taps = [0.0; S];
            taps.copy_from_slice(&kernel.taps()[a * S..(a + 1) * S]);
            for (o, win) in out_row.iter_mut().zip(ext.windows(S)) {
                let mut acc = 0.0;
                for (t, v) in taps.iter().zip(win) {
                    acc += t * v;
                }
                *o += acc;
            }
        }
    }
}

fn correlate_generic(out: &mut Image, image: &Image, kernel: &Kernel, s: usize) {
    let w = image.width();
    let h = image.height();
    let r = s / 2;
    let mut ext = alloc::vec![0.0; w + s - 1];
    out.fill(0.0);
    for y in 0..h {
        let out_row = out.row_mut(y);
        for a in 0..s {
            let sy = (y + a + h - r) % h;
            extend_row(&mut ext, image.row(sy), r);
            let taps = &kernel.taps()[a * s..(a + 1) * s];
            for (o, win) in out_row.iter_mut().zip(ext.windows(s)) {
                let mut acc = 0.0;
                for (t, v) in taps.iter().zip(win) {
                    acc += t * v;
                }
                *o += acc;
            }
        }
    }
}

/// Periodic (circular) convolution `k * img`, same-size output.
pub fn convolve(image: &Image, kernel: &Kernel) -> Result<Image, ConvolutionError> {
    check_fits(image, kernel)?;
    let mut out = Image::zeros(image.width(), image.height());
    correlate_into(&mut out, image, &kernel.reflected());
    Ok(out)
}

/// Exact adjoint of [`convolve`] under the standard inner product, i.e.
/// periodic convolution with the point-reflected kernel.
pub fn convolve_adjoint(image: &Image, kernel: &Kernel) -> Result<Image, ConvolutionError> {
    check_fits(image, kernel)?;
    let mut out = Image::zeros(image.width(), image.height());
    correlate_into(&mut out, image, kernel);
    Ok(out)
}

/// Lorentzian potential `rho(x) = log(1 + x^2)`.
#[inline]
pub fn rho(x: f64) -> f64 {
    libm::log1p(x * x)
}

/// `rho'(x) = 2x / (1 + x^2)`.
#[inline]
pub fn rho_prime(x: f64) -> f64 {
    2.0 * x / (1.0 + x * x)
}

/// `sum_p rho(v_p)` computed as logs of short products: `sum log(1+x^2)`
/// equals `log prod (1+x^2)`, and eight-term partials cannot overflow for
/// any realistic response, so this trades 8 `log` calls for 1.
fn rho_sum(values: &[f64]) -> f64 {
    let mut total = 0.0;
    for chunk in values.chunks(8) {
        let mut prod = 1.0;
        for &v in chunk {
            prod *= 1.0 + v * v;
            if prod > 1e250 {
                total += libm::log(prod);
                prod = 1.0;
            }
        }
        total += libm::log(prod);
    }
    total
}

/// Prior energy `sum_i theta_i sum_p rho((k_i * u)_p)`.
///
/// Panics if a kernel does not fit the image; the bank/image pairing is a
/// caller contract.
pub fn prior_energy(u: &Image, bank: &FilterBank) -> f64 {
    let mut response = Image::zeros(u.width(), u.height());
    let mut total = 0.0;
    for filter in bank.filters() {
        check_fits(u, &filter.kernel).expect("filter bank does not fit image");
        correlate_into(&mut response, u, &filter.kernel.reflected());
        total += filter.weight * rho_sum(response.pixels());
    }
    total
}

/// Amplitude-domain prior gradient `sum_i theta_i K_i^T rho'(K_i u)`.
pub fn prior_gradient_u(u: &Image, bank: &FilterBank) -> Image {
    let mut response = Image::zeros(u.width(), u.height());
    let mut back = Image::zeros(u.width(), u.height());
    let mut grad = Image::zeros(u.width(), u.height());
    for filter in bank.filters() {
        check_fits(u, &filter.kernel).expect("filter bank does not fit image");
        correlate_into(&mut response, u, &filter.kernel.reflected());
        response.map_in_place(rho_prime);
        correlate_into(&mut back, &response, &filter.kernel);
        grad.scaled_add(filter.weight, &back);
    }
    grad
}

/// Elementwise `exp`, refusing inputs beyond [`LOG_OVERFLOW_BOUND`].
pub fn exp_image(w: &Image) -> Result<Image, LogOverflowError> {
    for (index, &value) in w.pixels().iter().enumerate() {
        if !(value <= LOG_OVERFLOW_BOUND) {
            return Err(LogOverflowError { index, value });
        }
    }
    Ok(w.map(libm::exp))
}

/// Log-domain prior gradient: chain rule through `u = e^w`, i.e.
/// `e^w .* prior_gradient_u(e^w)`.
pub fn prior_gradient_w(w: &Image, bank: &FilterBank) -> Result<Image, LogOverflowError> {
    let u = exp_image(w)?;
    let mut grad = prior_gradient_u(&u, bank);
    for (g, e) in grad.pixels_mut().iter_mut().zip(u.pixels()) {
        *g *= e;
    }
    Ok(grad)
}
